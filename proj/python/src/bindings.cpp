#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "impulse/budget.hpp"
#include "impulse/envs.hpp"
#include "impulse/game_io.hpp"
#include "impulse/linfa.hpp"
#include "impulse/qlearn.hpp"
#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace impulse;

namespace {

// JSON crosses the boundary as text; the json module does the conversion.
py::object to_py(const json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

json from_py(const py::object& obj) {
  const std::string text = py::str(py::module_::import("json").attr("dumps")(obj));
  return json::parse(text);
}

py::object solve_py(const ImpulseGame& game, double tol, std::size_t max_sweeps,
                    std::optional<std::vector<double>> initial) {
  SolveOptions opts{.tol = tol, .max_sweeps = max_sweeps, .initial = std::move(initial)};
  return to_py(report_to_json(solve(game, opts)));
}

py::object oracle_py(const ImpulseGame& game, std::uint64_t max_enumeration, double tol) {
  const auto res = minimax_oracle(game, max_enumeration, tol);
  if (!res) return py::none();
  return to_py({{"upper", res->upper},
                {"lower", res->lower},
                {"gap", res->gap},
                {"distance_to_solution", res->distance_to_solution},
                {"certified", res->certified}});
}

py::object learn_py(const ImpulseGame& game, std::size_t steps, double epsilon,
                    double epsilon_end, double omega, std::uint64_t seed,
                    std::size_t episode_length, bool reference) {
  LearnConfig cfg;
  cfg.steps = steps;
  cfg.epsilon_start = epsilon;
  cfg.epsilon_end = epsilon_end;
  cfg.omega = omega;
  cfg.seed = seed;
  cfg.episode_length = episode_length;
  std::optional<JointQ> ref;
  if (reference) ref = solve(game, {.tol = 1e-12}).q;
  TabularEnv env(game, seed);
  const LearnResult res = learn(env, game, cfg, ref);
  json diag = json::array();
  for (const auto& row : res.diagnostics) {
    json r = {{"step", row.step},
              {"sup_norm_delta", row.sup_norm_delta},
              {"epsilon", row.epsilon},
              {"seed", row.seed}};
    r["dist_to_qhat"] = row.dist_to_qhat ? json(*row.dist_to_qhat) : json(nullptr);
    diag.push_back(std::move(r));
  }
  json out = {{"q", res.q.values()},
              {"shape", {res.q.num_states(), res.q.num_actions1(), res.q.num_actions2()}},
              {"visits", res.visits},
              {"steps_run", res.steps_run},
              {"diagnostics", std::move(diag)}};
  if (ref) out["dist_to_qhat"] = distance_on_reachable(res.q, *ref, game, res.visits);
  return to_py(out);
}

py::object budget_py(const ImpulseGame& game, std::size_t n1, std::size_t n2, double tol,
                     std::size_t steps, std::uint64_t seed, std::size_t start) {
  const AugmentedGame aug = augment(game, n1, n2);
  const SolveReport rep = solve_budgeted(aug, {.tol = tol});
  json out = report_to_json(rep, aug.labels());
  const BudgetTrajectory traj = simulate_budgeted(aug, rep.policy, steps, seed, start);
  out["taus"] = traj.taus;
  out["rhos"] = traj.rhos;
  out["interventions1"] = traj.interventions1;
  out["interventions2"] = traj.interventions2;
  return to_py(out);
}

py::object simulate_py(const ImpulseGame& game, std::size_t steps, std::uint64_t seed,
                       std::size_t start, double tol) {
  const SolveReport rep = solve(game, {.tol = tol});
  TabularEnv env(game, seed, start);
  const Simulation sim = simulate_policy(env, game, rep.policy, steps, start);
  json rows = json::array();
  for (const auto& st : sim.steps)
    rows.push_back({{"t", st.t},
                    {"s", st.state},
                    {"executed_a", st.executed.a},
                    {"executed_b", st.executed.b},
                    {"reward", st.reward},
                    {"cumulative_return", st.cumulative_return}});
  return to_py({{"trajectory", std::move(rows)}, {"taus", sim.taus}, {"rhos", sim.rhos}});
}

py::object fit_py(const ImpulseGame& game, std::optional<BasisMatrix> basis,
                  std::size_t samples, double omega, std::uint64_t seed,
                  const std::string& combinator, const std::string& sampling) {
  const FeatureBasis phi =
      basis ? FeatureBasis(*basis) : FeatureBasis::constant(game.num_states());
  FitConfig cfg;
  cfg.samples = samples;
  cfg.omega = omega;
  cfg.seed = seed;
  cfg.combinator = parse_combinator(combinator);
  if (sampling == "uniform") cfg.sampling = Sampling::Uniform;
  else if (sampling != "trajectory")
    throw std::invalid_argument("sampling must be 'trajectory' or 'uniform'");
  const FitReport rep = fit(game, phi, cfg, solve(game, {.tol = 1e-12}).value);
  return to_py(fit_report_to_json(rep, verify_bound(game, phi, rep.weights)));
}

}  // namespace

PYBIND11_MODULE(_impulse, m) {
  m.doc() = "Impulse-control stochastic games";

  py::register_exception<GameFileError>(m, "GameFileError", PyExc_ValueError);

  py::class_<ImpulseGame>(m, "Game")
      .def_property_readonly("num_states", &ImpulseGame::num_states)
      .def_property_readonly("num_actions1", &ImpulseGame::num_actions1)
      .def_property_readonly("num_actions2", &ImpulseGame::num_actions2)
      .def_property_readonly("gamma", &ImpulseGame::gamma)
      .def("reward", [](const ImpulseGame& g, std::size_t s, int a, int b) {
        return g.reward(s, a, b);
      })
      .def("kernel", [](const ImpulseGame& g, std::size_t s, int a, int b) {
        const auto row = g.kernel(s, a, b);
        return std::vector<double>(row.begin(), row.end());
      })
      .def("effective_reward", [](const ImpulseGame& g, std::size_t s, int a, int b) {
        return effective_reward(g, s, {a, b});
      })
      .def("validate", [](const ImpulseGame& g) {
        std::vector<std::string> out;
        for (const auto& v : validate(g)) out.push_back(v.to_string());
        return out;
      })
      .def("to_dict", [](const ImpulseGame& g) { return to_py(game_to_json(g)); })
      .def("save", [](const ImpulseGame& g, const std::string& path) { save_game(g, path); })
      .def("__eq__", [](const ImpulseGame& a, const ImpulseGame& b) { return a == b; });

  m.def("random_game",
        [](std::size_t s, std::size_t a, std::size_t b, std::uint64_t seed, double gamma,
           double kappa) { return random_game(s, a, b, seed, {.gamma = gamma, .kappa = kappa}); },
        py::arg("states"), py::arg("actions1"), py::arg("actions2"), py::arg("seed"),
        py::arg("gamma") = 0.9, py::arg("kappa") = 0.1);
  m.def("load_game", [](const std::string& path) { return load_game(path); });
  m.def("game_from_dict", [](const py::object& d) { return game_from_json(from_py(d)); });
  m.def("duopoly_game", [](const py::object& params) {
    return build_duopoly_game(duopoly_from_json(params.is_none() ? json::object() : from_py(params)));
  }, py::arg("params") = py::none());

  m.def("solve", &solve_py, py::arg("game"), py::arg("tol") = 1e-9,
        py::arg("max_sweeps") = 100000, py::arg("initial") = py::none());
  m.def("oracle", &oracle_py, py::arg("game"), py::arg("max_enumeration") = 10000000,
        py::arg("tol") = 1e-8);
  m.def("learn", &learn_py, py::arg("game"), py::arg("steps") = 200000,
        py::arg("epsilon") = 0.2, py::arg("epsilon_end") = 0.01, py::arg("omega") = 0.85,
        py::arg("seed") = 0, py::arg("episode_length") = 100, py::arg("reference") = true);
  m.def("solve_budgeted", &budget_py, py::arg("game"), py::arg("n1"), py::arg("n2"),
        py::arg("tol") = 1e-9, py::arg("steps") = 100, py::arg("seed") = 0,
        py::arg("start") = 0);
  m.def("simulate", &simulate_py, py::arg("game"), py::arg("steps") = 100,
        py::arg("seed") = 0, py::arg("start") = 0, py::arg("tol") = 1e-9);
  m.def("fit", &fit_py, py::arg("game"), py::arg("basis") = py::none(),
        py::arg("samples") = 100000, py::arg("omega") = 0.85, py::arg("seed") = 0,
        py::arg("combinator") = "T", py::arg("sampling") = "trajectory");
}
