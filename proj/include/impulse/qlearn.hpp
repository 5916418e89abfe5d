#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "impulse/envs.hpp"
#include "impulse/game.hpp"
#include "impulse/random.hpp"
#include "impulse/solver.hpp"

namespace impulse {

struct LearnConfig {
  std::size_t steps = 200000;
  double epsilon_start = 0.2;  // linearly decayed to epsilon_end over `steps`
  double epsilon_end = 0.01;
  double omega = 0.85;         // step size 1/(1+visits)^omega, in (0.5, 1]
  std::uint64_t seed = 0;
  std::size_t epoch = 1000;    // diagnostics cadence
  std::size_t episode_length = 100;
  /// Stop early once an epoch changes Q by at most this much (sup norm).
  std::optional<double> stop_tol;
  double initial_q = 0.0;
};

struct Transition {
  std::size_t state = 0;
  JointAction executed;
  double reward = 0.0;      // raw, cost-exclusive
  double net_reward = 0.0;  // Player 1 payoff
  std::size_t next_state = 0;
};

struct DiagnosticRow {
  std::size_t step = 0;
  double sup_norm_delta = 0.0;
  std::optional<double> dist_to_qhat;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct LearnResult {
  JointQ q;
  std::vector<std::uint64_t> visits;  // per (s,a,b) cell, same layout as q
  std::vector<DiagnosticRow> diagnostics;
  std::size_t steps_run = 0;
  double max_abs_target = 0.0;
  bool stopped_early = false;
};

/// min(max(max_a[Q(s,a,0) - c(s,a)], Q(s,0,0)), min_b[Q(s,0,b) + c(s,b)]).
double greedy_value(const JointQ& q, const ImpulseGame& game, std::size_t s);

/// Moves the executed cell toward R(s,e) + gamma * greedy_value(q, s').
/// Returns the target.
double step_update(JointQ& q, const ImpulseGame& game, const Transition& tr,
                   double alpha);

/// Greedy choice with Player 2 precedence, or with probability epsilon an
/// exploratory choice: uniform over {Player 1, Player 2, no-op} slots, then
/// uniform within the slot.
JointAction act(const JointQ& q, const ImpulseGame& game, std::size_t s,
                double epsilon, Rng& rng);

/// Cells an executed pair can hit: (s,a,0), (s,0,b), (s,0,0) with the action
/// available at s.
std::vector<bool> executable_cells(const ImpulseGame& game);

/// sup |q - reference| over executable cells with at least one visit (all
/// executable cells when visits is empty).
double distance_on_reachable(const JointQ& q, const JointQ& reference,
                             const ImpulseGame& game,
                             const std::vector<std::uint64_t>& visits = {});

/// Runs act -> step -> step_update. `game` supplies costs, action sets and
/// gamma only; transitions and rewards come from `env`.
LearnResult learn(Environment& env, const ImpulseGame& game,
                  const LearnConfig& config,
                  const std::optional<JointQ>& reference = std::nullopt);

}  // namespace impulse
