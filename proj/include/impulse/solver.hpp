#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "impulse/game.hpp"

namespace impulse {

using ValueField = std::vector<double>;

/// Strict-inequality margin for intervention decisions. Ties mean no action.
inline constexpr double kTieEps = 1e-10;

/// Dense (s, a, b) table. Cost-exclusive: at the solution
/// Q(s,a,b) = R(s,a,b) + gamma * sum_s' P(s'|s,a,b) v(s').
class JointQ {
 public:
  JointQ() = default;
  JointQ(std::size_t num_states, std::size_t num_actions1,
         std::size_t num_actions2, double init = 0.0)
      : num_states_(num_states),
        num_actions1_(num_actions1),
        num_actions2_(num_actions2),
        values_(num_states * num_actions1 * num_actions2, init) {}
  explicit JointQ(const ImpulseGame& game, double init = 0.0)
      : JointQ(game.num_states(), game.num_actions1(), game.num_actions2(),
               init) {}

  double operator()(std::size_t s, int a, int b) const {
    return values_[cell(s, a, b)];
  }
  double& operator()(std::size_t s, int a, int b) {
    return values_[cell(s, a, b)];
  }
  double operator()(std::size_t s, JointAction e) const {
    return (*this)(s, e.a, e.b);
  }
  double& operator()(std::size_t s, JointAction e) { return (*this)(s, e.a, e.b); }

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions1() const { return num_actions1_; }
  std::size_t num_actions2() const { return num_actions2_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const JointQ&) const = default;

 private:
  std::size_t cell(std::size_t s, int a, int b) const {
    return (s * num_actions1_ + static_cast<std::size_t>(a)) * num_actions2_ +
           static_cast<std::size_t>(b);
  }

  std::size_t num_states_ = 0;
  std::size_t num_actions1_ = 0;
  std::size_t num_actions2_ = 0;
  std::vector<double> values_;
};

/// Best costly action for one player and its one-step value. When the player
/// has no available non-null action, `action` is kNull and `value` is -inf
/// (Player 1) or +inf (Player 2).
struct Intervention {
  double value = 0.0;
  int action = kNull;

  bool available() const { return action != kNull; }
};

/// E[v(s') | s, a, b].
double expected_next(const ImpulseGame& game, const ValueField& v,
                     std::size_t s, int a, int b);

/// Continuation value of letting the system drift: R(s,0,0) + gamma E v.
double noop_value(const ImpulseGame& game, const ValueField& v, std::size_t s);

/// max over a != 0 of R(s,a,0) - c(s,a) + gamma E[v | a, 0]; lowest index wins
/// ties.
Intervention m1(const ImpulseGame& game, const ValueField& v, std::size_t s);

/// min over b != 0 of R(s,0,b) + c(s,b) + gamma E[v | 0, b]; lowest index wins
/// ties.
Intervention m2(const ImpulseGame& game, const ValueField& v, std::size_t s);

/// (Tv)(s) = min(max(m1, noop), m2).
double bellman_at(const ImpulseGame& game, const ValueField& v, std::size_t s);
ValueField bellman(const ImpulseGame& game, const ValueField& v);

/// Q(s,a,b) = R(s,a,b) + gamma E[v | s,a,b] for every cell.
JointQ lookahead_q(const ImpulseGame& game, const ValueField& v);

double sup_norm(const ValueField& x);
double sup_distance(const ValueField& x, const ValueField& y);

struct EquilibriumPolicy {
  // Raw intervention conditions per state. Both may be true; execution gives
  // Player 2 precedence.
  std::vector<bool> p1_acts;
  std::vector<int> p1_action;
  std::vector<bool> p2_acts;
  std::vector<int> p2_action;

  std::size_t num_states() const { return p1_acts.size(); }

  /// Joint action actually applied at s.
  JointAction executed(std::size_t s) const {
    if (p2_acts[s]) return {kNull, p2_action[s]};
    if (p1_acts[s]) return {p1_action[s], kNull};
    return {};
  }
  /// States where Player 1's intervention executes.
  std::vector<std::size_t> region1() const;
  /// States where Player 2 intervenes.
  std::vector<std::size_t> region2() const;

  /// Deterministic stationary maps s -> action (kNull when idle).
  std::vector<int> player1_map() const;
  std::vector<int> player2_map() const;
};

EquilibriumPolicy extract_policy(const ImpulseGame& game, const ValueField& v,
                                 const JointQ& q);

struct SolveOptions {
  double tol = 1e-9;
  std::size_t max_sweeps = 100000;
  std::optional<ValueField> initial;
};

struct SolveReport {
  ValueField value;
  JointQ q;
  EquilibriumPolicy policy;
  std::size_t sweeps = 0;
  double residual = 0.0;
  double error_bound = 0.0;
  bool converged = false;
};

/// Synchronous value iteration until ||Tv - v|| <= tol (1-gamma)/gamma, which
/// guarantees ||v - v_hat|| <= tol.
SolveReport solve(const ImpulseGame& game, const SolveOptions& options = {});

/// Value of fixed deterministic stationary policies. Where pol2(s) != 0,
/// Player 1's action is suppressed.
ValueField evaluate_policies(const ImpulseGame& game,
                             const std::vector<int>& pol1,
                             const std::vector<int>& pol2);

struct OracleResult {
  ValueField upper;  // min over pol2 of max over pol1
  ValueField lower;  // max over pol1 of min over pol2
  bool certified = false;
  double gap = 0.0;  // ||upper - lower||
  double distance_to_solution = 0.0;
};

/// Brute-force enumeration of deterministic stationary policy pairs. Returns
/// nullopt when the pair count would exceed max_enumeration.
std::optional<OracleResult> minimax_oracle(const ImpulseGame& game,
                                           std::uint64_t max_enumeration,
                                           double tol = 1e-8);

/// Number of deterministic stationary policy pairs, saturating at UINT64_MAX.
std::uint64_t policy_pair_count(const ImpulseGame& game);

struct InterventionTimes {
  std::vector<std::size_t> taus;  // Player 1
  std::vector<std::size_t> rhos;  // Player 2
};

InterventionTimes intervention_times(const EquilibriumPolicy& policy,
                                     const std::vector<std::size_t>& trajectory);

nlohmann::json report_to_json(
    const SolveReport& report,
    const std::vector<std::string>& state_labels = {});

}  // namespace impulse
