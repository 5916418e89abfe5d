#pragma once

#include <cstdint>
#include <vector>

#include "impulse/envs.hpp"
#include "impulse/solver.hpp"

namespace impulse {

struct SimStep {
  std::size_t t = 0;
  std::size_t state = 0;
  JointAction executed;
  double reward = 0.0;             // Player 1 net payoff
  double cumulative_return = 0.0;  // discounted, through this step
};

struct Simulation {
  std::vector<SimStep> steps;
  std::vector<std::size_t> taus;  // Player 1 intervention times
  std::vector<std::size_t> rhos;  // Player 2 intervention times
  std::size_t zero_sum_violations = 0;
};

/// Plays `policy` through `env` from s0 for `steps` steps.
Simulation simulate_policy(Environment& env, const ImpulseGame& game,
                           const EquilibriumPolicy& policy, std::size_t steps,
                           std::size_t s0);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t rollouts = 0;
  std::size_t horizon = 0;
  std::size_t zero_sum_violations = 0;
};

/// Horizon after which the discounted tail is below `tail` times the payoff
/// bound (at least 1 step).
std::size_t truncation_horizon(const ImpulseGame& game, double tail = 1e-10);

/// Discounted return of `policy` from s0 over independent seeded rollouts.
/// horizon == 0 picks truncation_horizon(game).
MonteCarloEstimate monte_carlo_value(const ImpulseGame& game,
                                     const EquilibriumPolicy& policy,
                                     std::size_t s0, std::size_t rollouts,
                                     std::uint64_t seed, std::size_t horizon = 0);

/// Reads the "policy" records written by report_to_json.
EquilibriumPolicy policy_from_json(const nlohmann::json& report,
                                   const ImpulseGame& game);

}  // namespace impulse
