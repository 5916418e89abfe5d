#include "impulse/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace impulse {

TabularEnv::TabularEnv(const ImpulseGame& game, std::uint64_t seed,
                       std::optional<std::size_t> start)
    : game_(&game), rng_(seed), start_(start) {
  if (start_ && *start_ >= game.num_states())
    throw std::out_of_range("TabularEnv: start state out of range");
}

std::size_t TabularEnv::reset() {
  if (start_) return *start_;
  return rng_.index(game_->num_states());
}

StepResult TabularEnv::step(std::size_t s, JointAction e) {
  StepResult out;
  out.next_state = rng_.categorical(game_->kernel(s, e.a, e.b));
  out.reward = game_->reward(s, e.a, e.b);
  out.payoff1 = effective_reward(*game_, s, e);
  out.payoff2 = -out.payoff1;
  return out;
}

double DuopolyParams::level(std::size_t i) const {
  return market * static_cast<double>(i) / static_cast<double>(grid - 1);
}

nlohmann::json duopoly_to_json(const DuopolyParams& p) {
  return {{"market", p.market},         {"response1", p.response1},
          {"response2", p.response2},   {"decay1", p.decay1},
          {"decay2", p.decay2},         {"sigma1", p.sigma1},
          {"sigma2", p.sigma2},         {"revenue_slope", p.revenue_slope},
          {"kappa1", p.kappa1},         {"kappa2", p.kappa2},
          {"investments", p.investments}, {"grid", p.grid},
          {"gamma", p.gamma},           {"cost_floor", p.cost_floor},
          {"quadrature_nodes", p.quadrature_nodes}};
}

DuopolyParams duopoly_from_json(const nlohmann::json& doc) {
  DuopolyParams p;
  auto get = [&](const char* key, auto& field) {
    if (auto it = doc.find(key); it != doc.end()) it->get_to(field);
  };
  get("market", p.market);
  get("response1", p.response1);
  get("response2", p.response2);
  get("decay1", p.decay1);
  get("decay2", p.decay2);
  get("sigma1", p.sigma1);
  get("sigma2", p.sigma2);
  get("revenue_slope", p.revenue_slope);
  get("kappa1", p.kappa1);
  get("kappa2", p.kappa2);
  get("investments", p.investments);
  get("grid", p.grid);
  get("gamma", p.gamma);
  get("cost_floor", p.cost_floor);
  get("quadrature_nodes", p.quadrature_nodes);
  return p;
}

std::pair<double, double> duopoly_step_mean(const DuopolyParams& p,
                                            double share1, double share2,
                                            double invest1, double invest2) {
  const double free_share = (p.market - share1 - share2) / p.market;
  const double next1 =
      share1 + p.response1 * invest1 * free_share - p.decay1 * share1;
  const double next2 =
      share2 + p.response2 * invest2 * free_share - p.decay2 * share2;
  return {std::clamp(next1, 0.0, p.market), std::clamp(next2, 0.0, p.market)};
}

namespace {

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for the standard normal (Golub-Welsch).
Quadrature gauss_hermite(std::size_t n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  Quadrature q;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    q.nodes.push_back(eig.eigenvalues()[i]);
    const double v0 = eig.eigenvectors()(0, i);
    q.weights.push_back(v0 * v0);
  }
  return q;
}

void deposit(const DuopolyParams& p, double x, double mass,
             std::vector<double>& out) {
  x = std::clamp(x, 0.0, p.market);
  const double pos = x / p.market * static_cast<double>(p.grid - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo >= p.grid - 1) {
    out[p.grid - 1] += mass;
    return;
  }
  const double frac = pos - static_cast<double>(lo);
  out[lo] += mass * (1.0 - frac);
  out[lo + 1] += mass * frac;
}

void check_params(const DuopolyParams& p) {
  if (p.grid < 2) throw std::invalid_argument("duopoly: grid must be >= 2");
  if (!(p.market > 0.0)) throw std::invalid_argument("duopoly: market must be > 0");
  for (double b : {p.response1, p.response2})
    if (!(b > 0.0 && b <= 1.0))
      throw std::invalid_argument("duopoly: response rates must lie in (0,1]");
  for (double k : {p.kappa1, p.kappa2})
    if (!(k >= p.cost_floor))
      throw std::invalid_argument("duopoly: kappa below cost floor");
  if (p.quadrature_nodes == 0)
    throw std::invalid_argument("duopoly: need at least one quadrature node");
  for (double u : p.investments)
    if (!(u >= 0.0)) throw std::invalid_argument("duopoly: negative investment");
}

}  // namespace

std::vector<double> lattice_distribution(const DuopolyParams& params,
                                         double mean, double sigma) {
  std::vector<double> out(params.grid, 0.0);
  if (sigma <= 0.0) {
    deposit(params, mean, 1.0, out);
    return out;
  }
  const Quadrature q = gauss_hermite(params.quadrature_nodes);
  for (std::size_t i = 0; i < q.nodes.size(); ++i)
    deposit(params, mean + sigma * q.nodes[i], q.weights[i], out);
  double total = 0.0;
  for (double m : out) total += m;
  for (double& m : out) m /= total;
  return out;
}

ImpulseGame build_duopoly_game(const DuopolyParams& params) {
  check_params(params);
  const std::size_t g = params.grid;
  const std::size_t levels = params.investments.size();
  ImpulseGame game(g * g, levels + 1, levels + 1, params.gamma,
                   params.cost_floor);
  const auto invest = [&](int x) {
    return x == kNull ? 0.0 : params.investments[static_cast<std::size_t>(x - 1)];
  };
  for (std::size_t i1 = 0; i1 < g; ++i1) {
    for (std::size_t i2 = 0; i2 < g; ++i2) {
      const std::size_t s = params.state_index(i1, i2);
      const double share1 = params.level(i1);
      const double share2 = params.level(i2);
      for (int a = 0; a <= static_cast<int>(levels); ++a) {
        for (int b = 0; b <= static_cast<int>(levels); ++b) {
          game.reward(s, a, b) = params.revenue_slope * (share1 - share2);
          const auto [mean1, mean2] =
              duopoly_step_mean(params, share1, share2, invest(a), invest(b));
          const auto d1 = lattice_distribution(params, mean1, params.sigma1);
          const auto d2 = lattice_distribution(params, mean2, params.sigma2);
          auto row = game.kernel(s, a, b);
          double total = 0.0;
          for (std::size_t j1 = 0; j1 < g; ++j1)
            for (std::size_t j2 = 0; j2 < g; ++j2) {
              const double m = d1[j1] * d2[j2];
              row[params.state_index(j1, j2)] = m;
              total += m;
            }
          for (double& m : row) m /= total;
        }
      }
      for (int a = 1; a <= static_cast<int>(levels); ++a)
        game.cost1(s, a) = params.kappa1 + invest(a);
      for (int b = 1; b <= static_cast<int>(levels); ++b)
        game.cost2(s, b) = params.kappa2 + invest(b);
    }
  }
  return game;
}

}  // namespace impulse
