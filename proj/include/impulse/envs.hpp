#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "impulse/game.hpp"
#include "impulse/random.hpp"

namespace impulse {

struct StepResult {
  std::size_t next_state = 0;
  double reward = 0.0;    // raw R(s, e), cost-exclusive
  double payoff1 = 0.0;   // Player 1 net payoff, costs included
  double payoff2 = 0.0;   // Player 2 net payoff, always -payoff1
};

/// Model-free access: sample transitions without exposing probabilities.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t reset() = 0;
  virtual StepResult step(std::size_t s, JointAction e) = 0;
};

/// Samples from an ImpulseGame's kernel. Resets uniformly over states unless a
/// start state is fixed.
class TabularEnv final : public Environment {
 public:
  TabularEnv(const ImpulseGame& game, std::uint64_t seed,
             std::optional<std::size_t> start = std::nullopt);

  std::size_t num_states() const override { return game_->num_states(); }
  std::size_t reset() override;
  StepResult step(std::size_t s, JointAction e) override;

 private:
  const ImpulseGame* game_;
  Rng rng_;
  std::optional<std::size_t> start_;
};

/// Discretised advertising duopoly. Firm i's share S^i moves by
/// b_i u_i (M - S^1 - S^2)/M - r_i S^i plus Gaussian noise of scale sigma_i.
struct DuopolyParams {
  double market = 100.0;
  double response1 = 0.8;
  double response2 = 0.8;
  double decay1 = 0.1;
  double decay2 = 0.1;
  double sigma1 = 3.0;
  double sigma2 = 3.0;
  double revenue_slope = 0.5;
  double kappa1 = 2.0;
  double kappa2 = 2.0;
  std::vector<double> investments{10.0, 25.0, 50.0};
  std::size_t grid = 11;
  double gamma = 0.9;
  double cost_floor = 1.0;
  std::size_t quadrature_nodes = 32;

  std::size_t state_index(std::size_t i1, std::size_t i2) const {
    return i1 * grid + i2;
  }
  /// Share level of lattice index i.
  double level(std::size_t i) const;
};

nlohmann::json duopoly_to_json(const DuopolyParams& params);
/// Missing keys keep their defaults.
DuopolyParams duopoly_from_json(const nlohmann::json& doc);

/// Deterministic part of one step, clamped to [0, M].
std::pair<double, double> duopoly_step_mean(const DuopolyParams& params,
                                            double share1, double share2,
                                            double invest1, double invest2);

/// Mass on lattice points for a Gaussian around `mean`, clamped to [0, M] and
/// split between neighbouring points by linear interpolation.
std::vector<double> lattice_distribution(const DuopolyParams& params,
                                         double mean, double sigma);

/// Lattice game. Rewards are revenue_slope (S^1 - S^2); investing u costs
/// kappa_i + u.
ImpulseGame build_duopoly_game(const DuopolyParams& params);

}  // namespace impulse
