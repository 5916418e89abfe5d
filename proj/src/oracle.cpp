// Exact policy evaluation and the brute-force minimax oracle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "impulse/solver.hpp"

namespace impulse {
namespace {

std::vector<std::vector<int>> available_actions(const ImpulseGame& game,
                                                int player) {
  std::vector<std::vector<int>> out(game.num_states());
  const int count = static_cast<int>(player == 1 ? game.num_actions1()
                                                 : game.num_actions2());
  for (std::size_t s = 0; s < game.num_states(); ++s)
    for (int x = 0; x < count; ++x)
      if (player == 1 ? game.allowed1(s, x) : game.allowed2(s, x))
        out[s].push_back(x);
  return out;
}

std::uint64_t count_policies(const std::vector<std::vector<int>>& choices) {
  std::uint64_t total = 1;
  for (const auto& c : choices) {
    if (total > std::numeric_limits<std::uint64_t>::max() / c.size())
      return std::numeric_limits<std::uint64_t>::max();
    total *= c.size();
  }
  return total;
}

// Mixed-radix decode of a policy index into a per-state action map.
std::vector<int> decode_policy(std::uint64_t index,
                               const std::vector<std::vector<int>>& choices) {
  std::vector<int> pol(choices.size());
  for (std::size_t s = 0; s < choices.size(); ++s) {
    pol[s] = choices[s][index % choices[s].size()];
    index /= choices[s].size();
  }
  return pol;
}

}  // namespace

ValueField evaluate_policies(const ImpulseGame& game,
                             const std::vector<int>& pol1,
                             const std::vector<int>& pol2) {
  const std::size_t n = game.num_states();
  if (pol1.size() != n || pol2.size() != n)
    throw std::invalid_argument("evaluate_policies: policy size mismatch");
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const JointAction e = pol2[s] != kNull ? JointAction{kNull, pol2[s]}
                                           : JointAction{pol1[s], kNull};
    rhs[static_cast<Eigen::Index>(s)] = effective_reward(game, s, e);
    const auto row = game.kernel(s, e.a, e.b);
    for (std::size_t t = 0; t < n; ++t)
      system(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) -=
          game.gamma() * row[t];
  }
  const Eigen::VectorXd v = system.partialPivLu().solve(rhs);
  return ValueField(v.data(), v.data() + v.size());
}

std::uint64_t policy_pair_count(const ImpulseGame& game) {
  const std::uint64_t c1 = count_policies(available_actions(game, 1));
  const std::uint64_t c2 = count_policies(available_actions(game, 2));
  if (c2 != 0 && c1 > std::numeric_limits<std::uint64_t>::max() / c2)
    return std::numeric_limits<std::uint64_t>::max();
  return c1 * c2;
}

std::optional<OracleResult> minimax_oracle(const ImpulseGame& game,
                                           std::uint64_t max_enumeration,
                                           double tol) {
  const auto choices1 = available_actions(game, 1);
  const auto choices2 = available_actions(game, 2);
  if (policy_pair_count(game) > max_enumeration) return std::nullopt;
  const std::uint64_t n1 = count_policies(choices1);
  const std::uint64_t n2 = count_policies(choices2);
  const std::size_t n = game.num_states();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<int>> pols2;
  pols2.reserve(n2);
  for (std::uint64_t j = 0; j < n2; ++j) pols2.push_back(decode_policy(j, choices2));

  OracleResult out;
  out.lower.assign(n, -inf);
  // max over pol1, kept per pol2 until the outer min.
  std::vector<ValueField> best_response_max(n2, ValueField(n, -inf));
  for (std::uint64_t i = 0; i < n1; ++i) {
    const auto pol1 = decode_policy(i, choices1);
    ValueField worst(n, inf);
    for (std::uint64_t j = 0; j < n2; ++j) {
      const ValueField v = evaluate_policies(game, pol1, pols2[j]);
      for (std::size_t s = 0; s < n; ++s) {
        worst[s] = std::min(worst[s], v[s]);
        best_response_max[j][s] = std::max(best_response_max[j][s], v[s]);
      }
    }
    for (std::size_t s = 0; s < n; ++s)
      out.lower[s] = std::max(out.lower[s], worst[s]);
  }
  out.upper.assign(n, inf);
  for (std::uint64_t j = 0; j < n2; ++j)
    for (std::size_t s = 0; s < n; ++s)
      out.upper[s] = std::min(out.upper[s], best_response_max[j][s]);

  SolveOptions opts;
  opts.tol = tol * 1e-3;
  const SolveReport solved = solve(game, opts);
  out.gap = sup_distance(out.upper, out.lower);
  out.distance_to_solution = std::max(sup_distance(out.upper, solved.value),
                                      sup_distance(out.lower, solved.value));
  out.certified = out.gap <= tol && out.distance_to_solution <= tol;
  return out;
}

}  // namespace impulse
