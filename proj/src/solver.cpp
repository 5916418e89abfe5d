#include "impulse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace impulse {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double expected_next(const ImpulseGame& game, const ValueField& v,
                     std::size_t s, int a, int b) {
  const auto row = game.kernel(s, a, b);
  double acc = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t) acc += row[t] * v[t];
  return acc;
}

double noop_value(const ImpulseGame& game, const ValueField& v, std::size_t s) {
  return game.reward(s, kNull, kNull) +
         game.gamma() * expected_next(game, v, s, kNull, kNull);
}

Intervention m1(const ImpulseGame& game, const ValueField& v, std::size_t s) {
  Intervention best{-kInf, kNull};
  for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a) {
    if (!game.allowed1(s, a)) continue;
    const double val = game.reward(s, a, kNull) - game.cost1(s, a) +
                       game.gamma() * expected_next(game, v, s, a, kNull);
    if (best.action == kNull || val > best.value) best = {val, a};
  }
  return best;
}

Intervention m2(const ImpulseGame& game, const ValueField& v, std::size_t s) {
  Intervention best{kInf, kNull};
  for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b) {
    if (!game.allowed2(s, b)) continue;
    const double val = game.reward(s, kNull, b) + game.cost2(s, b) +
                       game.gamma() * expected_next(game, v, s, kNull, b);
    if (best.action == kNull || val < best.value) best = {val, b};
  }
  return best;
}

double bellman_at(const ImpulseGame& game, const ValueField& v, std::size_t s) {
  // Sentinels are +-inf, so the missing branches drop out of max/min.
  const double inner = std::max(m1(game, v, s).value, noop_value(game, v, s));
  return std::min(inner, m2(game, v, s).value);
}

ValueField bellman(const ImpulseGame& game, const ValueField& v) {
  if (v.size() != game.num_states())
    throw std::invalid_argument("bellman: value field has wrong size");
  ValueField out(v.size());
  for (std::size_t s = 0; s < v.size(); ++s) out[s] = bellman_at(game, v, s);
  return out;
}

JointQ lookahead_q(const ImpulseGame& game, const ValueField& v) {
  JointQ q(game);
  for (std::size_t s = 0; s < game.num_states(); ++s)
    for (int a = 0; a < static_cast<int>(game.num_actions1()); ++a)
      for (int b = 0; b < static_cast<int>(game.num_actions2()); ++b)
        q(s, a, b) = game.reward(s, a, b) +
                     game.gamma() * expected_next(game, v, s, a, b);
  return q;
}

double sup_norm(const ValueField& x) {
  double m = 0.0;
  for (double e : x) m = std::max(m, std::abs(e));
  return m;
}

double sup_distance(const ValueField& x, const ValueField& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

std::vector<std::size_t> EquilibriumPolicy::region1() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < num_states(); ++s)
    if (p1_acts[s] && !p2_acts[s]) out.push_back(s);
  return out;
}

std::vector<std::size_t> EquilibriumPolicy::region2() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < num_states(); ++s)
    if (p2_acts[s]) out.push_back(s);
  return out;
}

std::vector<int> EquilibriumPolicy::player1_map() const {
  std::vector<int> out(num_states(), kNull);
  for (std::size_t s = 0; s < num_states(); ++s)
    if (p1_acts[s]) out[s] = p1_action[s];
  return out;
}

std::vector<int> EquilibriumPolicy::player2_map() const {
  std::vector<int> out(num_states(), kNull);
  for (std::size_t s = 0; s < num_states(); ++s)
    if (p2_acts[s]) out[s] = p2_action[s];
  return out;
}

EquilibriumPolicy extract_policy(const ImpulseGame& game, const ValueField& /*v*/,
                                 const JointQ& q) {
  // Q is cost-exclusive, so the intervention terms are read off Q directly:
  // Q(s,a,0) - c(s,a) is the m1 summand and Q(s,0,0) is the no-op term.
  const std::size_t n = game.num_states();
  EquilibriumPolicy pol;
  pol.p1_acts.assign(n, false);
  pol.p1_action.assign(n, kNull);
  pol.p2_acts.assign(n, false);
  pol.p2_action.assign(n, kNull);
  for (std::size_t s = 0; s < n; ++s) {
    const double noop = q(s, kNull, kNull);
    double best1 = -kInf;
    int arg1 = kNull;
    for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a) {
      if (!game.allowed1(s, a)) continue;
      const double val = q(s, a, kNull) - game.cost1(s, a);
      if (arg1 == kNull || val > best1) best1 = val, arg1 = a;
    }
    double best2 = kInf;
    int arg2 = kNull;
    for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b) {
      if (!game.allowed2(s, b)) continue;
      const double val = q(s, kNull, b) + game.cost2(s, b);
      if (arg2 == kNull || val < best2) best2 = val, arg2 = b;
    }
    const double inner = std::max(best1, noop);
    if (arg1 != kNull && best1 > noop + kTieEps) {
      pol.p1_acts[s] = true;
      pol.p1_action[s] = arg1;
    }
    if (arg2 != kNull && best2 < inner - kTieEps) {
      pol.p2_acts[s] = true;
      pol.p2_action[s] = arg2;
    }
  }
  return pol;
}

SolveReport solve(const ImpulseGame& game, const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve: tol must be > 0");
  const double gamma = game.gamma();
  const double threshold =
      gamma > 0.0 ? options.tol * (1.0 - gamma) / gamma : kInf;

  SolveReport report;
  ValueField v = options.initial.value_or(ValueField(game.num_states(), 0.0));
  if (v.size() != game.num_states())
    throw std::invalid_argument("solve: initial value field has wrong size");

  double residual = kInf;
  std::size_t sweeps = 0;
  while (sweeps < options.max_sweeps) {
    ValueField next = bellman(game, v);
    residual = sup_distance(next, v);
    v = std::move(next);
    ++sweeps;
    if (residual <= threshold) {
      report.converged = true;
      break;
    }
  }
  report.value = std::move(v);
  report.sweeps = sweeps;
  report.residual = residual;
  report.error_bound =
      gamma > 0.0 ? gamma * residual / (1.0 - gamma) : 0.0;
  report.q = lookahead_q(game, report.value);
  report.policy = extract_policy(game, report.value, report.q);
  return report;
}

InterventionTimes intervention_times(const EquilibriumPolicy& policy,
                                     const std::vector<std::size_t>& trajectory) {
  InterventionTimes out;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const std::size_t s = trajectory[t];
    if (s >= policy.num_states())
      throw std::out_of_range("intervention_times: state out of range");
    if (policy.p2_acts[s])
      out.rhos.push_back(t);
    else if (policy.p1_acts[s])
      out.taus.push_back(t);
  }
  return out;
}

nlohmann::json report_to_json(const SolveReport& report,
                              const std::vector<std::string>& state_labels) {
  using nlohmann::json;
  const std::size_t n = report.value.size();
  json q = json::array();
  for (std::size_t s = 0; s < n; ++s) {
    json qs = json::array();
    for (int a = 0; a < static_cast<int>(report.q.num_actions1()); ++a) {
      json qa = json::array();
      for (int b = 0; b < static_cast<int>(report.q.num_actions2()); ++b)
        qa.push_back(report.q(s, a, b));
      qs.push_back(std::move(qa));
    }
    q.push_back(std::move(qs));
  }
  json policy = json::array();
  for (std::size_t s = 0; s < n; ++s) {
    const JointAction e = report.policy.executed(s);
    json rec = {{"state", s},
                {"p1_acts", static_cast<bool>(report.policy.p1_acts[s])},
                {"p1_action", report.policy.p1_action[s]},
                {"p2_acts", static_cast<bool>(report.policy.p2_acts[s])},
                {"p2_action", report.policy.p2_action[s]},
                {"executed", {e.a, e.b}}};
    if (!state_labels.empty()) rec["label"] = state_labels[s];
    policy.push_back(std::move(rec));
  }
  json doc = {{"value", report.value},
              {"q", std::move(q)},
              {"policy", std::move(policy)},
              {"regions",
               {{"player1", report.policy.region1()},
                {"player2", report.policy.region2()}}},
              {"sweeps", report.sweeps},
              {"residual", report.residual},
              {"error_bound", report.error_bound},
              {"converged", report.converged}};
  if (!state_labels.empty()) doc["states"] = state_labels;
  return doc;
}

}  // namespace impulse
