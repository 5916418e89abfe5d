#include "impulse/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "impulse/game_io.hpp"

namespace impulse {

Simulation simulate_policy(Environment& env, const ImpulseGame& game,
                           const EquilibriumPolicy& policy, std::size_t steps,
                           std::size_t s0) {
  if (policy.num_states() != game.num_states())
    throw std::invalid_argument("simulate: policy size mismatch");
  if (s0 >= game.num_states())
    throw std::out_of_range("simulate: start state out of range");
  Simulation out;
  out.steps.reserve(steps);
  std::size_t s = s0;
  double discount = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const JointAction e = policy.executed(s);
    if (e.a != kNull) out.taus.push_back(t);
    if (e.b != kNull) out.rhos.push_back(t);
    const StepResult r = env.step(s, e);
    if (r.payoff2 != -r.payoff1) ++out.zero_sum_violations;
    total += discount * r.payoff1;
    discount *= game.gamma();
    out.steps.push_back({t, s, e, r.payoff1, total});
    s = r.next_state;
  }
  return out;
}

std::size_t truncation_horizon(const ImpulseGame& game, double tail) {
  const double gamma = game.gamma();
  if (gamma <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(std::log(tail) / std::log(gamma))) + 1;
}

MonteCarloEstimate monte_carlo_value(const ImpulseGame& game,
                                     const EquilibriumPolicy& policy,
                                     std::size_t s0, std::size_t rollouts,
                                     std::uint64_t seed, std::size_t horizon) {
  if (rollouts < 2) throw std::invalid_argument("monte_carlo_value: need >= 2 rollouts");
  MonteCarloEstimate out;
  out.rollouts = rollouts;
  out.horizon = horizon == 0 ? truncation_horizon(game) : horizon;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < rollouts; ++k) {
    TabularEnv env(game, seed + k, s0);
    const Simulation sim = simulate_policy(env, game, policy, out.horizon, s0);
    const double ret = sim.steps.back().cumulative_return;
    sum += ret;
    sum_sq += ret * ret;
    out.zero_sum_violations += sim.zero_sum_violations;
  }
  const double n = static_cast<double>(rollouts);
  out.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
  out.std_error = std::sqrt(var / n);
  return out;
}

EquilibriumPolicy policy_from_json(const nlohmann::json& report,
                                   const ImpulseGame& game) {
  const auto it = report.find("policy");
  if (it == report.end() || !it->is_array())
    throw GameFileError("report has no 'policy' array");
  const std::size_t n = game.num_states();
  if (it->size() != n) throw GameFileError("policy covers the wrong number of states");
  EquilibriumPolicy p;
  p.p1_acts.assign(n, false);
  p.p1_action.assign(n, kNull);
  p.p2_acts.assign(n, false);
  p.p2_action.assign(n, kNull);
  try {
    for (std::size_t s = 0; s < n; ++s) {
      const auto& rec = (*it)[s];
      p.p1_acts[s] = rec.at("p1_acts").get<bool>();
      p.p1_action[s] = rec.at("p1_action").get<int>();
      p.p2_acts[s] = rec.at("p2_acts").get<bool>();
      p.p2_action[s] = rec.at("p2_action").get<int>();
      const JointAction e = p.executed(s);
      if (e.a < 0 || e.a >= static_cast<int>(game.num_actions1()) || e.b < 0 ||
          e.b >= static_cast<int>(game.num_actions2()) || !game.allowed1(s, e.a) ||
          !game.allowed2(s, e.b))
        throw GameFileError("policy[" + std::to_string(s) + "]: action not available");
    }
  } catch (const nlohmann::json::exception& e) {
    throw GameFileError(std::string("policy: ") + e.what());
  }
  return p;
}

}  // namespace impulse
