#include "impulse/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "impulse/random.hpp"

namespace impulse {

std::string Violation::to_string() const {
  std::ostringstream out;
  out << what;
  if (!index.empty()) {
    out << " at (";
    for (std::size_t i = 0; i < index.size(); ++i)
      out << (i ? "," : "") << index[i];
    out << ")";
  }
  return out.str();
}

ImpulseGame::ImpulseGame(std::size_t num_states, std::size_t num_actions1,
                         std::size_t num_actions2, double gamma,
                         double cost_floor)
    : num_states_(num_states),
      num_actions1_(num_actions1),
      num_actions2_(num_actions2),
      gamma_(gamma),
      cost_floor_(cost_floor),
      reward_(num_states * num_actions1 * num_actions2, 0.0),
      kernel_(num_states * num_actions1 * num_actions2 * num_states, 0.0),
      cost1_(num_states * (num_actions1 > 0 ? num_actions1 - 1 : 0),
             cost_floor),
      cost2_(num_states * (num_actions2 > 0 ? num_actions2 - 1 : 0),
             cost_floor) {
  if (num_states == 0 || num_actions1 == 0 || num_actions2 == 0)
    throw std::invalid_argument(
        "game needs at least one state and the null action for each player");
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t a = 0; a < num_actions1; ++a)
      for (std::size_t b = 0; b < num_actions2; ++b)
        kernel(s, static_cast<int>(a), static_cast<int>(b))[s] = 1.0;
}

void ImpulseGame::set_allowed1(std::size_t s, int a, bool on) {
  if (a == kNull) throw std::invalid_argument("the null action cannot be masked");
  if (mask1_.empty()) mask1_.assign(num_states_ * num_actions1_, 1);
  mask1_[s * num_actions1_ + static_cast<std::size_t>(a)] = on ? 1 : 0;
}

void ImpulseGame::set_allowed2(std::size_t s, int b, bool on) {
  if (b == kNull) throw std::invalid_argument("the null action cannot be masked");
  if (mask2_.empty()) mask2_.assign(num_states_ * num_actions2_, 1);
  mask2_[s * num_actions2_ + static_cast<std::size_t>(b)] = on ? 1 : 0;
}

std::vector<Violation> validate(const ImpulseGame& game) {
  std::vector<Violation> out;
  const std::size_t n = game.num_states();
  if (n == 0) {
    out.push_back({"no states", {}});
    return out;
  }
  if (!(game.gamma() >= 0.0 && game.gamma() < 1.0))
    out.push_back({"discount must be < 1 and >= 0", {}});
  if (!(game.cost_floor() > 0.0) || !std::isfinite(game.cost_floor()))
    out.push_back({"cost floor must be positive", {}});

  for (std::size_t s = 0; s < n; ++s) {
    for (int a = 0; a < static_cast<int>(game.num_actions1()); ++a) {
      for (int b = 0; b < static_cast<int>(game.num_actions2()); ++b) {
        const std::vector<std::size_t> idx{s, static_cast<std::size_t>(a),
                                           static_cast<std::size_t>(b)};
        if (!std::isfinite(game.reward(s, a, b)))
          out.push_back({"reward not finite", idx});
        const auto row = game.kernel(s, a, b);
        bool negative = false;
        bool finite = true;
        double sum = 0.0;
        for (double p : row) {
          if (!std::isfinite(p)) finite = false;
          if (p < 0.0) negative = true;
          sum += p;
        }
        if (!finite)
          out.push_back({"kernel entry not finite", idx});
        else if (negative)
          out.push_back({"negative kernel entry", idx});
        else if (std::abs(sum - 1.0) > 1e-12)
          out.push_back({"kernel row does not sum to 1", idx});
      }
    }
    for (int a = 1; a < static_cast<int>(game.num_actions1()); ++a) {
      const double c = game.cost1(s, a);
      if (!std::isfinite(c) || c < game.cost_floor() || !(c > 0.0))
        out.push_back({"cost below floor (player 1)",
                       {s, static_cast<std::size_t>(a)}});
    }
    for (int b = 1; b < static_cast<int>(game.num_actions2()); ++b) {
      const double c = game.cost2(s, b);
      if (!std::isfinite(c) || c < game.cost_floor() || !(c > 0.0))
        out.push_back({"cost below floor (player 2)",
                       {s, static_cast<std::size_t>(b)}});
    }
  }
  return out;
}

void require_valid(const ImpulseGame& game) {
  const auto violations = validate(game);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid game:";
  for (const auto& v : violations) msg << "\n  " << v.to_string();
  throw std::invalid_argument(msg.str());
}

double effective_reward(const ImpulseGame& game, std::size_t s,
                        JointAction joint) {
  if (s >= game.num_states() || joint.a < 0 || joint.b < 0 ||
      static_cast<std::size_t>(joint.a) >= game.num_actions1() ||
      static_cast<std::size_t>(joint.b) >= game.num_actions2())
    throw std::out_of_range("effective_reward: index out of range");
  double r = game.reward(s, joint.a, joint.b);
  if (joint.a != kNull) r -= game.cost1(s, joint.a);
  if (joint.b != kNull) r += game.cost2(s, joint.b);
  return r;
}

ImpulseGame random_game(std::size_t num_states, std::size_t num_actions1,
                        std::size_t num_actions2, std::uint64_t seed,
                        RandomGameOptions options) {
  if (num_states == 0)
    throw std::invalid_argument("random_game: need at least one state");
  ImpulseGame game(num_states, num_actions1 + 1, num_actions2 + 1,
                   options.gamma, options.kappa);
  Rng rng(seed);
  const int na = static_cast<int>(game.num_actions1());
  const int nb = static_cast<int>(game.num_actions2());
  for (std::size_t s = 0; s < num_states; ++s) {
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < nb; ++b) {
        game.reward(s, a, b) = rng.uniform(-1.0, 1.0);
        auto row = game.kernel(s, a, b);
        double sum = 0.0;
        for (double& p : row) {
          p = rng.uniform();
          sum += p;
        }
        for (double& p : row) p /= sum;
        // Pin the row sum to 1 to within one ulp.
        double total = 0.0;
        for (double p : row) total += p;
        row[0] += 1.0 - total;
        row[0] = std::max(row[0], 0.0);
      }
    }
    for (int a = 1; a < na; ++a)
      game.cost1(s, a) = rng.uniform(options.kappa, 2.0 * options.kappa);
    for (int b = 1; b < nb; ++b)
      game.cost2(s, b) = rng.uniform(options.kappa, 2.0 * options.kappa);
  }
  return game;
}

double reward_sup(const ImpulseGame& game) {
  double m = 0.0;
  for (double r : game.rewards()) m = std::max(m, std::abs(r));
  return m;
}

double cost_sup(const ImpulseGame& game) {
  double m = 0.0;
  for (double c : game.costs1()) m = std::max(m, std::abs(c));
  for (double c : game.costs2()) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace impulse
