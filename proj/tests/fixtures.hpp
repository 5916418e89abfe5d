#pragma once

#include "impulse/game.hpp"

namespace impulse::testing {

// Single state, self-loop under every action, gamma = 0.5.
// R(0,0)=1, R(a1,0)=2, R(0,b1)=0, c(a1)=0.5, c(b1)=0.3. Value 0.6.
inline ImpulseGame g1() {
  ImpulseGame g(1, 2, 2, 0.5, 0.1);
  g.reward(0, 0, 0) = 1.0;
  g.reward(0, 1, 0) = 2.0;
  g.reward(0, 0, 1) = 0.0;
  g.reward(0, 1, 1) = 0.0;
  g.cost1(0, 1) = 0.5;
  g.cost2(0, 1) = 0.3;
  return g;
}

// Player 2 priced out: value 3.0, Player 1 acts.
inline ImpulseGame g2() {
  ImpulseGame g = g1();
  g.cost2(0, 1) = 100.0;
  return g;
}

// Player 1 priced out as well: value 2.0, nobody acts.
inline ImpulseGame g3() {
  ImpulseGame g = g1();
  g.cost1(0, 1) = 2.0;
  g.cost2(0, 1) = 100.0;
  return g;
}

}  // namespace impulse::testing
