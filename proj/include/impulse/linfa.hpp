#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "impulse/game.hpp"
#include "impulse/game_io.hpp"
#include "impulse/solver.hpp"

namespace impulse {

/// |S| x p matrix of basis functions with linearly independent columns.
class FeatureBasis {
 public:
  /// Throws std::invalid_argument when the columns are rank deficient
  /// (rank tolerance 1e-10).
  explicit FeatureBasis(Eigen::MatrixXd phi);
  explicit FeatureBasis(const BasisMatrix& rows);

  static FeatureBasis identity(std::size_t num_states);
  static FeatureBasis constant(std::size_t num_states);

  const Eigen::MatrixXd& matrix() const { return phi_; }
  std::size_t num_states() const { return static_cast<std::size_t>(phi_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(phi_.cols()); }

  ValueField evaluate(const Eigen::VectorXd& r) const;

 private:
  Eigen::MatrixXd phi_;
};

/// How the intervention terms are combined at each state.
///   T: min(max(m1, noop), m2)  -- the exact Bellman operator
///   F: max(min(m1, noop), m2)  -- the approximation operator as written
/// A player without available actions drops out of either form.
enum class Combinator { F, T };

Combinator parse_combinator(const std::string& name);
const char* to_string(Combinator c);

/// Weighted least-squares projection onto span(Phi); weights must be > 0.
Eigen::VectorXd project_weights(const FeatureBasis& basis,
                                const std::vector<double>& weights,
                                const ValueField& target);
ValueField project(const FeatureBasis& basis, const std::vector<double>& weights,
                   const ValueField& target);

double weighted_norm(const std::vector<double>& weights, const ValueField& x);

/// One-step operator applied to an arbitrary value field.
ValueField apply_combinator(const ImpulseGame& game, const ValueField& values,
                            Combinator combinator);

/// The operator at Lambda = Phi r.
ValueField f_operator(const ImpulseGame& game, const FeatureBasis& basis,
                      const Eigen::VectorXd& r, Combinator combinator);

struct StationaryResult {
  std::vector<double> distribution;
  bool ergodic = true;  // false: fell back to uniform weights
  std::size_t iterations = 0;
};

/// Stationary distribution of the chain induced by the executed joint actions
/// of `policy`, by power iteration on the lazy chain.
StationaryResult stationary_distribution(const ImpulseGame& game,
                                         const EquilibriumPolicy& policy,
                                         double tol = 1e-12,
                                         std::size_t max_iterations = 1000000);

enum class Sampling {
  Trajectory,  // states visited by an epsilon-greedy behaviour trajectory
  Uniform,     // i.i.d. uniform states
};

struct FitConfig {
  std::size_t samples = 100000;
  double omega = 0.85;        // step size 1/(1+t)^omega
  std::uint64_t seed = 0;
  std::size_t epoch = 1000;   // behaviour refresh and stopping cadence
  std::optional<double> tol;  // stop once ||r_t - r_{t-epoch}|| <= tol
  double epsilon = 0.1;       // behaviour exploration
  Combinator combinator = Combinator::T;
  Sampling sampling = Sampling::Trajectory;
  std::size_t episode_length = 1000;
  double divergence_limit = 1e6;
};

struct FitReport {
  Eigen::VectorXd weights;
  std::size_t samples = 0;
  bool stopped_early = false;
  /// ||Phi r - v_hat|| (sup norm), when the exact value was supplied.
  std::optional<double> distance_to_solution;
};

class FitDivergence : public std::runtime_error {
 public:
  FitDivergence(const std::string& what, Eigen::VectorXd last, std::size_t at)
      : std::runtime_error(what), last_weights(std::move(last)), sample(at) {}
  Eigen::VectorXd last_weights;
  std::size_t sample;
};

/// Stochastic approximation r <- r + a_t phi(s)(F(Phi r)(s) - phi(s)^T r)
/// over sampled states.
FitReport fit(const ImpulseGame& game, const FeatureBasis& basis,
              const FitConfig& config,
              const std::optional<ValueField>& exact = std::nullopt,
              std::optional<Eigen::VectorXd> initial = std::nullopt);

struct BoundCheck {
  double lhs = 0.0;         // ||Phi r - v_hat||_w
  double rhs = 0.0;         // (1-gamma^2)^{-1/2} ||Pi v_hat - v_hat||_w
  double multiplier = 0.0;  // (1-gamma^2)^{-1/2}
  bool holds = false;
  bool ergodic = true;
  std::vector<double> weights;
};

/// Weighted by the stationary distribution of the equilibrium-policy chain
/// (uniform, with ergodic = false, if that chain is not ergodic).
BoundCheck verify_bound(const ImpulseGame& game, const FeatureBasis& basis,
                        const Eigen::VectorXd& r);

/// r_{k+1} = weights of Pi F(Phi r_k); returns every iterate including r_0.
std::vector<Eigen::VectorXd> projected_iteration(
    const ImpulseGame& game, const FeatureBasis& basis,
    const std::vector<double>& weights, Eigen::VectorXd r0,
    Combinator combinator, std::size_t iterations);

nlohmann::json fit_report_to_json(const FitReport& report,
                                  const BoundCheck& bound);

}  // namespace impulse
