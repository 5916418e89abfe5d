#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace impulse {

/// Index of the "do nothing" action, present in both players' action sets.
inline constexpr int kNull = 0;

struct JointAction {
  int a = kNull;  // Player 1 (maximiser)
  int b = kNull;  // Player 2 (minimiser)

  bool operator==(const JointAction&) const = default;
};

struct Violation {
  std::string what;
  std::vector<std::size_t> index;  // offending (s, a, b, ...) when applicable

  std::string to_string() const;
};

/**
 Two-player zero-sum stochastic game in which every non-null action pays a
 strictly positive cost.

 Storage is dense and row-major: reward is [s][a][b], kernel is [s][a][b][s'],
 cost1 is [s][a-1] and cost2 is [s][b-1]. Action counts include the null
 action, so a game with no Player-1 interventions has num_actions1() == 1.

 Cells with a != 0 and b != 0 are stored but never read by the solver or the
 simulators: when both players trigger, only Player 2's action executes.

 Optional availability masks remove non-null actions at individual states;
 the budgeted game uses them to disable actions once a budget is spent.
 */
class ImpulseGame {
 public:
  ImpulseGame() = default;
  /// Zero-initialised game; the kernel starts as all self-loops.
  ImpulseGame(std::size_t num_states, std::size_t num_actions1,
              std::size_t num_actions2, double gamma, double cost_floor);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions1() const { return num_actions1_; }
  std::size_t num_actions2() const { return num_actions2_; }
  double gamma() const { return gamma_; }
  double cost_floor() const { return cost_floor_; }
  void set_gamma(double g) { gamma_ = g; }
  void set_cost_floor(double k) { cost_floor_ = k; }

  double reward(std::size_t s, int a, int b) const {
    return reward_[cell(s, a, b)];
  }
  double& reward(std::size_t s, int a, int b) { return reward_[cell(s, a, b)]; }

  std::span<const double> kernel(std::size_t s, int a, int b) const {
    return {kernel_.data() + cell(s, a, b) * num_states_, num_states_};
  }
  std::span<double> kernel(std::size_t s, int a, int b) {
    return {kernel_.data() + cell(s, a, b) * num_states_, num_states_};
  }

  /// Cost of a non-null Player-1 action; a must be >= 1.
  double cost1(std::size_t s, int a) const {
    return cost1_[s * (num_actions1_ - 1) + static_cast<std::size_t>(a - 1)];
  }
  double& cost1(std::size_t s, int a) {
    return cost1_[s * (num_actions1_ - 1) + static_cast<std::size_t>(a - 1)];
  }
  double cost2(std::size_t s, int b) const {
    return cost2_[s * (num_actions2_ - 1) + static_cast<std::size_t>(b - 1)];
  }
  double& cost2(std::size_t s, int b) {
    return cost2_[s * (num_actions2_ - 1) + static_cast<std::size_t>(b - 1)];
  }

  bool allowed1(std::size_t s, int a) const {
    return a == kNull || mask1_.empty() ||
           mask1_[s * num_actions1_ + static_cast<std::size_t>(a)] != 0;
  }
  bool allowed2(std::size_t s, int b) const {
    return b == kNull || mask2_.empty() ||
           mask2_[s * num_actions2_ + static_cast<std::size_t>(b)] != 0;
  }
  void set_allowed1(std::size_t s, int a, bool on);
  void set_allowed2(std::size_t s, int b, bool on);
  bool has_masks() const { return !mask1_.empty() || !mask2_.empty(); }

  /// Raw storage, row-major as documented above.
  const std::vector<double>& rewards() const { return reward_; }
  const std::vector<double>& kernels() const { return kernel_; }
  const std::vector<double>& costs1() const { return cost1_; }
  const std::vector<double>& costs2() const { return cost2_; }
  const std::vector<std::uint8_t>& mask1() const { return mask1_; }
  const std::vector<std::uint8_t>& mask2() const { return mask2_; }

  bool operator==(const ImpulseGame&) const = default;

 private:
  std::size_t cell(std::size_t s, int a, int b) const {
    return (s * num_actions1_ + static_cast<std::size_t>(a)) * num_actions2_ +
           static_cast<std::size_t>(b);
  }

  std::size_t num_states_ = 0;
  std::size_t num_actions1_ = 1;
  std::size_t num_actions2_ = 1;
  double gamma_ = 0.0;
  double cost_floor_ = 0.0;
  std::vector<double> reward_;
  std::vector<double> kernel_;
  std::vector<double> cost1_;
  std::vector<double> cost2_;
  std::vector<std::uint8_t> mask1_;
  std::vector<std::uint8_t> mask2_;
};

/// Every violated well-formedness condition; empty iff the game is usable.
std::vector<Violation> validate(const ImpulseGame& game);

/// Throws std::invalid_argument listing the violations, if any.
void require_valid(const ImpulseGame& game);

/// Player 1's one-step net payoff R(s,a,b) - c(s,a)[a!=0] + c(s,b)[b!=0].
/// Player 2's payoff is exactly the negation.
double effective_reward(const ImpulseGame& game, std::size_t s,
                        JointAction joint);

struct RandomGameOptions {
  double gamma = 0.9;
  double kappa = 0.1;
};

/// Deterministic in all arguments. Action counts exclude the null action.
ImpulseGame random_game(std::size_t num_states, std::size_t num_actions1,
                        std::size_t num_actions2, std::uint64_t seed,
                        RandomGameOptions options = {});

/// Largest |R| over cells the dynamics can execute.
double reward_sup(const ImpulseGame& game);
/// Largest action cost, 0 when neither player has actions.
double cost_sup(const ImpulseGame& game);

}  // namespace impulse
