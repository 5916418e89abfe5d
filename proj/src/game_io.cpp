#include "impulse/game_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace impulse {
namespace {

using nlohmann::json;

const json& require_key(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end())
    throw GameFileError(std::string("missing key '") + key + "'");
  return *it;
}

std::string path_string(const std::string& key,
                        const std::vector<std::size_t>& idx) {
  std::ostringstream out;
  out << key;
  for (auto i : idx) out << '[' << i << ']';
  return out.str();
}

double finite_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw GameFileError(where + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw GameFileError(where + ": not finite");
  return x;
}

std::size_t positive_count(const json& doc, const char* key) {
  const json& v = require_key(doc, key);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw GameFileError(std::string("'") + key +
                        "' must be a positive integer");
  return v.get<std::size_t>();
}

const json& array_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n) {
    std::ostringstream msg;
    msg << where << ": expected an array of length " << n;
    throw GameFileError(msg.str());
  }
  return v;
}

}  // namespace

json game_to_json(const ImpulseGame& game) {
  const std::size_t n = game.num_states();
  const int na = static_cast<int>(game.num_actions1());
  const int nb = static_cast<int>(game.num_actions2());
  json rewards = json::array();
  json kernel = json::array();
  json costs1 = json::array();
  json costs2 = json::array();
  for (std::size_t s = 0; s < n; ++s) {
    json rs = json::array();
    json ks = json::array();
    for (int a = 0; a < na; ++a) {
      json ra = json::array();
      json ka = json::array();
      for (int b = 0; b < nb; ++b) {
        ra.push_back(game.reward(s, a, b));
        const auto row = game.kernel(s, a, b);
        ka.push_back(std::vector<double>(row.begin(), row.end()));
      }
      rs.push_back(std::move(ra));
      ks.push_back(std::move(ka));
    }
    rewards.push_back(std::move(rs));
    kernel.push_back(std::move(ks));
    json c1 = json::array();
    for (int a = 1; a < na; ++a) c1.push_back(game.cost1(s, a));
    json c2 = json::array();
    for (int b = 1; b < nb; ++b) c2.push_back(game.cost2(s, b));
    costs1.push_back(std::move(c1));
    costs2.push_back(std::move(c2));
  }
  json doc = {{"states", n},
              {"actions1", game.num_actions1()},
              {"actions2", game.num_actions2()},
              {"gamma", game.gamma()},
              {"cost_floor", game.cost_floor()},
              {"rewards", std::move(rewards)},
              {"costs1", std::move(costs1)},
              {"costs2", std::move(costs2)},
              {"kernel", std::move(kernel)}};
  if (game.has_masks()) {
    json m1 = json::array();
    json m2 = json::array();
    for (std::size_t s = 0; s < n; ++s) {
      json r1 = json::array();
      for (int a = 0; a < na; ++a) r1.push_back(game.allowed1(s, a) ? 1 : 0);
      json r2 = json::array();
      for (int b = 0; b < nb; ++b) r2.push_back(game.allowed2(s, b) ? 1 : 0);
      m1.push_back(std::move(r1));
      m2.push_back(std::move(r2));
    }
    doc["allowed1"] = std::move(m1);
    doc["allowed2"] = std::move(m2);
  }
  return doc;
}

ImpulseGame game_from_json(const json& doc) {
  if (!doc.is_object()) throw GameFileError("game spec must be a JSON object");
  const std::size_t n = positive_count(doc, "states");
  const std::size_t na = positive_count(doc, "actions1");
  const std::size_t nb = positive_count(doc, "actions2");
  const double gamma = finite_number(require_key(doc, "gamma"), "gamma");
  const double floor =
      finite_number(require_key(doc, "cost_floor"), "cost_floor");

  ImpulseGame game(n, na, nb, gamma, floor);

  // Costs may sit at top level or under a "costs" object.
  const json* costs_root = &doc;
  if (auto it = doc.find("costs"); it != doc.end() && it->is_object())
    costs_root = &*it;

  const json& rewards = array_of(require_key(doc, "rewards"), n, "rewards");
  const json& kernel = array_of(require_key(doc, "kernel"), n, "kernel");
  const json& costs1 =
      array_of(require_key(*costs_root, "costs1"), n, "costs1");
  const json& costs2 =
      array_of(require_key(*costs_root, "costs2"), n, "costs2");

  for (std::size_t s = 0; s < n; ++s) {
    const json& rs = array_of(rewards[s], na, path_string("rewards", {s}));
    const json& ks = array_of(kernel[s], na, path_string("kernel", {s}));
    for (std::size_t a = 0; a < na; ++a) {
      const json& ra =
          array_of(rs[a], nb, path_string("rewards", {s, a}));
      const json& ka = array_of(ks[a], nb, path_string("kernel", {s, a}));
      for (std::size_t b = 0; b < nb; ++b) {
        game.reward(s, static_cast<int>(a), static_cast<int>(b)) =
            finite_number(ra[b], path_string("rewards", {s, a, b}));
        const json& row =
            array_of(ka[b], n, path_string("kernel", {s, a, b}));
        auto dst = game.kernel(s, static_cast<int>(a), static_cast<int>(b));
        for (std::size_t t = 0; t < n; ++t)
          dst[t] = finite_number(row[t], path_string("kernel", {s, a, b, t}));
      }
    }
    const json& c1 = array_of(costs1[s], na - 1, path_string("costs1", {s}));
    for (std::size_t a = 1; a < na; ++a)
      game.cost1(s, static_cast<int>(a)) =
          finite_number(c1[a - 1], path_string("costs1", {s, a - 1}));
    const json& c2 = array_of(costs2[s], nb - 1, path_string("costs2", {s}));
    for (std::size_t b = 1; b < nb; ++b)
      game.cost2(s, static_cast<int>(b)) =
          finite_number(c2[b - 1], path_string("costs2", {s, b - 1}));
  }

  if (auto it = doc.find("allowed1"); it != doc.end()) {
    array_of(*it, n, "allowed1");
    for (std::size_t s = 0; s < n; ++s) {
      const json& row = array_of((*it)[s], na, path_string("allowed1", {s}));
      for (std::size_t a = 1; a < na; ++a)
        if (row[a].get<int>() == 0) game.set_allowed1(s, static_cast<int>(a), false);
    }
  }
  if (auto it = doc.find("allowed2"); it != doc.end()) {
    array_of(*it, n, "allowed2");
    for (std::size_t s = 0; s < n; ++s) {
      const json& row = array_of((*it)[s], nb, path_string("allowed2", {s}));
      for (std::size_t b = 1; b < nb; ++b)
        if (row[b].get<int>() == 0) game.set_allowed2(s, static_cast<int>(b), false);
    }
  }

  const auto violations = validate(game);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "validation failed:";
    for (const auto& v : violations) msg << "\n  " << v.to_string();
    throw GameFileError(msg.str());
  }
  return game;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GameFileError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw GameFileError(path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

ImpulseGame load_game(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    return game_from_json(doc);
  } catch (const GameFileError& e) {
    throw GameFileError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw GameFileError(path.string() + ": " + e.what());
  }
}

void save_game(const ImpulseGame& game, const std::filesystem::path& path,
               const std::optional<BasisMatrix>& basis) {
  json doc = game_to_json(game);
  if (basis) doc["basis"] = *basis;
  write_json(doc, path);
}

std::optional<BasisMatrix> load_basis(const std::filesystem::path& path) {
  const json doc = read_json(path);
  auto it = doc.find("basis");
  if (it == doc.end()) return std::nullopt;
  const std::size_t n = positive_count(doc, "states");
  array_of(*it, n, "basis");
  BasisMatrix basis;
  std::size_t p = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const json& row = (*it)[s];
    if (!row.is_array() || row.empty())
      throw GameFileError(path_string("basis", {s}) + ": expected a row");
    if (s == 0) p = row.size();
    array_of(row, p, path_string("basis", {s}));
    std::vector<double> r;
    for (std::size_t k = 0; k < p; ++k)
      r.push_back(finite_number(row[k], path_string("basis", {s, k})));
    basis.push_back(std::move(r));
  }
  return basis;
}

}  // namespace impulse
