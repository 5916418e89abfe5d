#include "impulse/linfa.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/random.hpp"

namespace impulse {
namespace {

double combine_at(const ImpulseGame& game, const ValueField& values,
                  std::size_t s, Combinator combinator) {
  const Intervention act1 = m1(game, values, s);
  const Intervention act2 = m2(game, values, s);
  const double noop = noop_value(game, values, s);
  if (combinator == Combinator::T) {
    const double inner = act1.available() ? std::max(act1.value, noop) : noop;
    return act2.available() ? std::min(inner, act2.value) : inner;
  }
  const double inner = act1.available() ? std::min(act1.value, noop) : noop;
  return act2.available() ? std::max(inner, act2.value) : inner;
}

// Every state reaches every other one through positive-probability edges.
bool strongly_connected(const Eigen::MatrixXd& chain) {
  const Eigen::Index n = chain.rows();
  for (bool forward : {true, false}) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index s = stack.back();
      stack.pop_back();
      for (Eigen::Index t = 0; t < n; ++t) {
        const double p = forward ? chain(s, t) : chain(t, s);
        if (p > 0.0 && !seen[static_cast<std::size_t>(t)]) {
          seen[static_cast<std::size_t>(t)] = true;
          stack.push_back(t);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

Eigen::VectorXd to_eigen(const std::vector<double>& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(),
                                           static_cast<Eigen::Index>(x.size()));
}

}  // namespace

FeatureBasis::FeatureBasis(Eigen::MatrixXd phi) : phi_(std::move(phi)) {
  if (phi_.rows() == 0 || phi_.cols() == 0)
    throw std::invalid_argument("FeatureBasis: empty basis");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi_);
  qr.setThreshold(1e-10);
  if (qr.rank() < phi_.cols())
    throw std::invalid_argument("FeatureBasis: columns are linearly dependent");
}

FeatureBasis::FeatureBasis(const BasisMatrix& rows)
    : FeatureBasis([&] {
        if (rows.empty()) throw std::invalid_argument("FeatureBasis: no rows");
        Eigen::MatrixXd phi(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows.front().size())
            throw std::invalid_argument("FeatureBasis: ragged rows");
          for (std::size_t k = 0; k < rows[i].size(); ++k)
            phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                rows[i][k];
        }
        return phi;
      }()) {}

FeatureBasis FeatureBasis::identity(std::size_t n) {
  return FeatureBasis(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n)));
}

FeatureBasis FeatureBasis::constant(std::size_t n) {
  return FeatureBasis(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1));
}

ValueField FeatureBasis::evaluate(const Eigen::VectorXd& r) const {
  const Eigen::VectorXd v = phi_ * r;
  return ValueField(v.data(), v.data() + v.size());
}

Combinator parse_combinator(const std::string& name) {
  if (name == "F") return Combinator::F;
  if (name == "T") return Combinator::T;
  throw std::invalid_argument("combinator must be F or T, got '" + name + "'");
}

const char* to_string(Combinator c) { return c == Combinator::F ? "F" : "T"; }

Eigen::VectorXd project_weights(const FeatureBasis& basis,
                                const std::vector<double>& weights,
                                const ValueField& target) {
  if (weights.size() != basis.num_states() || target.size() != basis.num_states())
    throw std::invalid_argument("project: size mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("project: weights must be > 0");
  const Eigen::MatrixXd& phi = basis.matrix();
  const Eigen::VectorXd d = to_eigen(weights);
  const Eigen::MatrixXd gram = phi.transpose() * d.asDiagonal() * phi;
  const Eigen::VectorXd rhs = phi.transpose() * (d.asDiagonal() * to_eigen(target));
  return gram.ldlt().solve(rhs);
}

ValueField project(const FeatureBasis& basis, const std::vector<double>& weights,
                   const ValueField& target) {
  return basis.evaluate(project_weights(basis, weights, target));
}

double weighted_norm(const std::vector<double>& weights, const ValueField& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += weights[i] * x[i] * x[i];
  return std::sqrt(acc);
}

ValueField apply_combinator(const ImpulseGame& game, const ValueField& values,
                            Combinator combinator) {
  ValueField out(game.num_states());
  for (std::size_t s = 0; s < out.size(); ++s)
    out[s] = combine_at(game, values, s, combinator);
  return out;
}

ValueField f_operator(const ImpulseGame& game, const FeatureBasis& basis,
                      const Eigen::VectorXd& r, Combinator combinator) {
  return apply_combinator(game, basis.evaluate(r), combinator);
}

StationaryResult stationary_distribution(const ImpulseGame& game,
                                         const EquilibriumPolicy& policy,
                                         double tol,
                                         std::size_t max_iterations) {
  const std::size_t n = game.num_states();
  Eigen::MatrixXd chain(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const JointAction e = policy.executed(s);
    const auto row = game.kernel(s, e.a, e.b);
    for (std::size_t t = 0; t < n; ++t)
      chain(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = row[t];
  }
  StationaryResult out;
  if (!strongly_connected(chain)) {
    out.ergodic = false;
    out.distribution.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }
  // The lazy chain has the same stationary law and is aperiodic.
  const Eigen::MatrixXd lazy =
      0.5 * (chain + Eigen::MatrixXd::Identity(chain.rows(), chain.cols()));
  const Eigen::MatrixXd lazy_t = lazy.transpose();
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                 1.0 / static_cast<double>(n));
  bool converged = false;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = lazy_t * mu;
    next /= next.sum();
    const double change = (next - mu).cwiseAbs().maxCoeff();
    mu = std::move(next);
    out.iterations = it + 1;
    if (change <= tol) {
      converged = true;
      break;
    }
  }
  const double min_mass = mu.minCoeff();
  if (!converged || !(min_mass > 1e-12)) {
    out.ergodic = false;
    out.distribution.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }
  out.distribution.assign(mu.data(), mu.data() + mu.size());
  return out;
}

FitReport fit(const ImpulseGame& game, const FeatureBasis& basis,
              const FitConfig& config, const std::optional<ValueField>& exact,
              std::optional<Eigen::VectorXd> initial) {
  const std::size_t n = game.num_states();
  if (basis.num_states() != n)
    throw std::invalid_argument("fit: basis has wrong number of rows");
  if (config.epoch == 0 || config.episode_length == 0)
    throw std::invalid_argument("fit: epoch and episode length must be > 0");
  const Eigen::MatrixXd& phi = basis.matrix();

  Eigen::VectorXd r =
      initial.value_or(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.dim())));
  Eigen::VectorXd epoch_start = r;
  Rng rng(config.seed);

  const auto behaviour_policy = [&] {
    const ValueField lambda = basis.evaluate(r);
    return extract_policy(game, lambda, lookahead_q(game, lambda));
  };
  EquilibriumPolicy policy = behaviour_policy();

  FitReport report;
  std::size_t s = rng.index(n);
  std::size_t in_episode = 0;
  for (std::size_t t = 0; t < config.samples; ++t) {
    if (config.sampling == Sampling::Uniform) s = rng.index(n);
    const auto row = phi.row(static_cast<Eigen::Index>(s));
    const ValueField lambda = basis.evaluate(r);
    const double target = combine_at(game, lambda, s, config.combinator);
    const double alpha = 1.0 / std::pow(1.0 + static_cast<double>(t), config.omega);
    r += alpha * (target - lambda[s]) * row.transpose();
    ++report.samples;
    if (!r.allFinite() || r.norm() > config.divergence_limit)
      throw FitDivergence("fit: weights diverged", r, t);

    if (config.sampling == Sampling::Trajectory) {
      JointAction e = policy.executed(s);
      if (config.epsilon > 0.0 && rng.uniform() < config.epsilon) {
        e = {};
        const std::size_t slot = rng.index(3);
        std::vector<int> options;
        if (slot == 0) {
          for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a)
            if (game.allowed1(s, a)) options.push_back(a);
          if (!options.empty()) e.a = options[rng.index(options.size())];
        } else if (slot == 1) {
          for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b)
            if (game.allowed2(s, b)) options.push_back(b);
          if (!options.empty()) e.b = options[rng.index(options.size())];
        }
      }
      if (++in_episode >= config.episode_length) {
        s = rng.index(n);
        in_episode = 0;
      } else {
        s = rng.categorical(game.kernel(s, e.a, e.b));
      }
    }

    if ((t + 1) % config.epoch == 0) {
      if (config.tol && (r - epoch_start).norm() <= *config.tol) {
        report.stopped_early = true;
        break;
      }
      epoch_start = r;
      if (config.sampling == Sampling::Trajectory) policy = behaviour_policy();
    }
  }
  report.weights = r;
  if (exact) report.distance_to_solution = sup_distance(basis.evaluate(r), *exact);
  return report;
}

BoundCheck verify_bound(const ImpulseGame& game, const FeatureBasis& basis,
                        const Eigen::VectorXd& r) {
  SolveOptions opts;
  opts.tol = 1e-12;
  const SolveReport solved = solve(game, opts);
  const StationaryResult stat = stationary_distribution(game, solved.policy);

  BoundCheck out;
  out.weights = stat.distribution;
  out.ergodic = stat.ergodic;
  const ValueField approx = basis.evaluate(r);
  const ValueField projected = project(basis, out.weights, solved.value);
  ValueField diff(approx.size());
  ValueField residual(approx.size());
  for (std::size_t s = 0; s < diff.size(); ++s) {
    diff[s] = approx[s] - solved.value[s];
    residual[s] = projected[s] - solved.value[s];
  }
  const double gamma = game.gamma();
  out.multiplier = 1.0 / std::sqrt(1.0 - gamma * gamma);
  out.lhs = weighted_norm(out.weights, diff);
  out.rhs = out.multiplier * weighted_norm(out.weights, residual);
  out.holds = out.lhs <= out.rhs + 1e-8;
  return out;
}

std::vector<Eigen::VectorXd> projected_iteration(
    const ImpulseGame& game, const FeatureBasis& basis,
    const std::vector<double>& weights, Eigen::VectorXd r0,
    Combinator combinator, std::size_t iterations) {
  std::vector<Eigen::VectorXd> out{std::move(r0)};
  for (std::size_t k = 0; k < iterations; ++k)
    out.push_back(project_weights(basis, weights,
                                  f_operator(game, basis, out.back(), combinator)));
  return out;
}

nlohmann::json fit_report_to_json(const FitReport& report,
                                  const BoundCheck& bound) {
  nlohmann::json doc = {
      {"r_hat", std::vector<double>(report.weights.data(),
                                    report.weights.data() + report.weights.size())},
      {"samples", report.samples},
      {"stopped_early", report.stopped_early},
      {"lhs", bound.lhs},
      {"rhs", bound.rhs},
      {"multiplier", bound.multiplier},
      {"holds", bound.holds},
      {"ergodic", bound.ergodic},
      {"weights", bound.weights}};
  if (report.distance_to_solution)
    doc["distance_to_solution"] = *report.distance_to_solution;
  return doc;
}

}  // namespace impulse
