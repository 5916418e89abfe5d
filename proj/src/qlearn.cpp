#include "impulse/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace impulse {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GreedyTerms {
  double best1 = -kInf;
  int arg1 = kNull;
  double best2 = kInf;
  int arg2 = kNull;
  double noop = 0.0;
};

GreedyTerms greedy_terms(const JointQ& q, const ImpulseGame& game,
                         std::size_t s) {
  GreedyTerms t;
  t.noop = q(s, kNull, kNull);
  for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a) {
    if (!game.allowed1(s, a)) continue;
    const double val = q(s, a, kNull) - game.cost1(s, a);
    if (t.arg1 == kNull || val > t.best1) t.best1 = val, t.arg1 = a;
  }
  for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b) {
    if (!game.allowed2(s, b)) continue;
    const double val = q(s, kNull, b) + game.cost2(s, b);
    if (t.arg2 == kNull || val < t.best2) t.best2 = val, t.arg2 = b;
  }
  return t;
}

std::size_t cell_index(const ImpulseGame& game, std::size_t s, JointAction e) {
  return (s * game.num_actions1() + static_cast<std::size_t>(e.a)) *
             game.num_actions2() +
         static_cast<std::size_t>(e.b);
}

}  // namespace

double greedy_value(const JointQ& q, const ImpulseGame& game, std::size_t s) {
  const GreedyTerms t = greedy_terms(q, game, s);
  return std::min(std::max(t.best1, t.noop), t.best2);
}

double step_update(JointQ& q, const ImpulseGame& game, const Transition& tr,
                   double alpha) {
  const double target =
      tr.reward + game.gamma() * greedy_value(q, game, tr.next_state);
  double& cell = q(tr.state, tr.executed);
  cell += alpha * (target - cell);
  return target;
}

JointAction act(const JointQ& q, const ImpulseGame& game, std::size_t s,
                double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    const std::size_t slot = rng.index(3);
    if (slot == 0) {
      std::vector<int> options;
      for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a)
        if (game.allowed1(s, a)) options.push_back(a);
      if (!options.empty()) return {options[rng.index(options.size())], kNull};
    } else if (slot == 1) {
      std::vector<int> options;
      for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b)
        if (game.allowed2(s, b)) options.push_back(b);
      if (!options.empty()) return {kNull, options[rng.index(options.size())]};
    }
    return {};
  }
  const GreedyTerms t = greedy_terms(q, game, s);
  const double inner = std::max(t.best1, t.noop);
  if (t.arg2 != kNull && t.best2 < inner - kTieEps) return {kNull, t.arg2};
  if (t.arg1 != kNull && t.best1 > t.noop + kTieEps) return {t.arg1, kNull};
  return {};
}

std::vector<bool> executable_cells(const ImpulseGame& game) {
  std::vector<bool> out(
      game.num_states() * game.num_actions1() * game.num_actions2(), false);
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    out[cell_index(game, s, {})] = true;
    for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a)
      if (game.allowed1(s, a)) out[cell_index(game, s, {a, kNull})] = true;
    for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b)
      if (game.allowed2(s, b)) out[cell_index(game, s, {kNull, b})] = true;
  }
  return out;
}

double distance_on_reachable(const JointQ& q, const JointQ& reference,
                             const ImpulseGame& game,
                             const std::vector<std::uint64_t>& visits) {
  const auto cells = executable_cells(game);
  double m = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i]) continue;
    if (!visits.empty() && visits[i] == 0) continue;
    m = std::max(m, std::abs(q.values()[i] - reference.values()[i]));
  }
  return m;
}

LearnResult learn(Environment& env, const ImpulseGame& game,
                  const LearnConfig& config,
                  const std::optional<JointQ>& reference) {
  if (!(config.omega > 0.5 && config.omega <= 1.0))
    throw std::invalid_argument("learn: omega must lie in (0.5, 1]");
  if (config.epoch == 0 || config.episode_length == 0)
    throw std::invalid_argument("learn: epoch and episode length must be > 0");
  if (env.num_states() != game.num_states())
    throw std::invalid_argument("learn: environment/game state count mismatch");

  LearnResult out;
  out.q = JointQ(game, config.initial_q);
  out.visits.assign(out.q.values().size(), 0);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  JointQ snapshot = out.q;
  std::size_t s = env.reset();
  std::size_t in_episode = 0;

  const auto epsilon_at = [&](std::size_t t) {
    if (config.steps <= 1) return config.epsilon_start;
    const double frac = static_cast<double>(t) /
                        static_cast<double>(config.steps - 1);
    return config.epsilon_start +
           (config.epsilon_end - config.epsilon_start) * frac;
  };

  for (std::size_t t = 0; t < config.steps; ++t) {
    const double eps = epsilon_at(t);
    const JointAction e = act(out.q, game, s, eps, rng);
    const StepResult res = env.step(s, e);
    const Transition tr{s, e, res.reward, res.payoff1, res.next_state};

    auto& n = out.visits[cell_index(game, s, e)];
    const double alpha = 1.0 / std::pow(1.0 + static_cast<double>(n), config.omega);
    ++n;
    const double target = step_update(out.q, game, tr, alpha);
    if (!std::isfinite(target) || !std::isfinite(out.q(s, e)))
      throw std::runtime_error("learn: non-finite update (check rewards)");
    out.max_abs_target = std::max(out.max_abs_target, std::abs(target));
    ++out.steps_run;

    if (++in_episode >= config.episode_length) {
      s = env.reset();
      in_episode = 0;
    } else {
      s = res.next_state;
    }

    if ((t + 1) % config.epoch == 0 || t + 1 == config.steps) {
      DiagnosticRow row;
      row.step = t + 1;
      double delta = 0.0;
      for (std::size_t i = 0; i < snapshot.values().size(); ++i)
        delta = std::max(delta,
                         std::abs(out.q.values()[i] - snapshot.values()[i]));
      row.sup_norm_delta = delta;
      if (reference)
        row.dist_to_qhat =
            distance_on_reachable(out.q, *reference, game, out.visits);
      row.epsilon = eps;
      row.seed = config.seed;
      out.diagnostics.push_back(row);
      snapshot = out.q;
      if (config.stop_tol && (t + 1) % config.epoch == 0 &&
          delta <= *config.stop_tol) {
        out.stopped_early = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace impulse
