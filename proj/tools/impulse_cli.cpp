// impulse: command-line front end for solving, learning and simulating
// impulse-control stochastic games.
//
// Exit codes: 0 ok, 1 input error (nothing written), 2 non-convergence or
// uncertified result (outputs written and flagged).

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "impulse/budget.hpp"
#include "impulse/envs.hpp"
#include "impulse/game_io.hpp"
#include "impulse/linfa.hpp"
#include "impulse/qlearn.hpp"
#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace impulse;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Outputs are staged in memory and only written once a run gets that far, so
// input errors leave nothing behind.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void json_file(const std::string& name, const json& doc) {
    files_[name] = doc.dump(2) + "\n";
  }
  void text_file(const std::string& name, std::string body) {
    files_[name] = std::move(body);
  }
  void flush() const {
    fs::create_directories(dir_);
    for (const auto& [name, body] : files_) {
      std::ofstream out(dir_ / name, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
      out << body;
      spdlog::info("wrote {}", (dir_ / name).string());
    }
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
};

struct GameSource {
  std::string game_path;
  std::string gen_spec;
  std::string duopoly_path;
  double gamma = 0.9;
  double kappa = 0.1;

  void attach(CLI::App* cmd) {
    auto* g = cmd->add_option("--game", game_path, "game-spec JSON file");
    auto* r = cmd->add_option("--gen", gen_spec, "random game \"S,A,B,seed\"");
    auto* d = cmd->add_option("--duopoly", duopoly_path,
                              "duopoly parameter JSON (optionally under \"duopoly\")");
    g->excludes(r)->excludes(d);
    r->excludes(d);
    cmd->add_option("--gamma", gamma, "discount for --gen")->capture_default_str();
    cmd->add_option("--kappa", kappa, "cost scale for --gen")->capture_default_str();
  }

  struct Loaded {
    ImpulseGame game;
    std::vector<std::string> labels;
    std::optional<BasisMatrix> basis;
  };

  Loaded load() const {
    const int given = !game_path.empty() + !gen_spec.empty() + !duopoly_path.empty();
    if (given != 1) throw InputError("exactly one of --game, --gen, --duopoly is required");
    if (!game_path.empty()) {
      Loaded out{load_game(game_path), {}, load_basis(game_path)};
      return out;
    }
    if (!gen_spec.empty()) {
      std::vector<long long> parts;
      std::stringstream in(gen_spec);
      std::string item;
      while (std::getline(in, item, ',')) {
        try {
          std::size_t used = 0;
          parts.push_back(std::stoll(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw InputError("--gen: bad integer '" + item + "'");
        }
      }
      if (parts.size() != 4 || parts[0] < 1 || parts[1] < 0 || parts[2] < 0 || parts[3] < 0)
        throw InputError("--gen expects \"S,A,B,seed\" with S >= 1 and A, B, seed >= 0");
      if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("--gamma must lie in [0, 1)");
      if (!(kappa > 0.0)) throw InputError("--kappa must be > 0");
      return {random_game(static_cast<std::size_t>(parts[0]),
                          static_cast<std::size_t>(parts[1]),
                          static_cast<std::size_t>(parts[2]),
                          static_cast<std::uint64_t>(parts[3]),
                          {.gamma = gamma, .kappa = kappa}),
              {},
              std::nullopt};
    }
    json doc = read_json(duopoly_path);
    if (auto it = doc.find("duopoly"); it != doc.end()) doc = *it;
    DuopolyParams params;
    try {
      params = duopoly_from_json(doc);
    } catch (const json::exception& e) {
      throw InputError(duopoly_path + ": " + e.what());
    }
    Loaded out;
    try {
      out.game = build_duopoly_game(params);
    } catch (const std::invalid_argument& e) {
      throw InputError(duopoly_path + ": " + e.what());
    }
    for (std::size_t i = 0; i < params.grid; ++i)
      for (std::size_t j = 0; j < params.grid; ++j)
        out.labels.push_back("(" + std::to_string(i) + "," + std::to_string(j) + ")");
    return out;
  }
};

void check_tol(double tol) {
  if (!(tol > 0.0)) throw InputError("--tol must be > 0");
}

std::string quote(const std::string& s) {
  return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

std::string policy_csv(const SolveReport& rep, const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "state,label,value,p1_acts,p1_action,p2_acts,p2_action,executed_a,executed_b\n";
  for (std::size_t s = 0; s < rep.value.size(); ++s) {
    const JointAction e = rep.policy.executed(s);
    out << s << ',' << quote(labels.empty() ? std::to_string(s) : labels[s]) << ','
        << num(rep.value[s]) << ',' << int(rep.policy.p1_acts[s]) << ','
        << rep.policy.p1_action[s] << ',' << int(rep.policy.p2_acts[s]) << ','
        << rep.policy.p2_action[s] << ',' << e.a << ',' << e.b << '\n';
  }
  return out.str();
}

json q_to_json(const JointQ& q) {
  json out = json::array();
  for (std::size_t s = 0; s < q.num_states(); ++s) {
    json qs = json::array();
    for (int a = 0; a < static_cast<int>(q.num_actions1()); ++a) {
      json qa = json::array();
      for (int b = 0; b < static_cast<int>(q.num_actions2()); ++b) qa.push_back(q(s, a, b));
      qs.push_back(std::move(qa));
    }
    out.push_back(std::move(qs));
  }
  return out;
}

// --- subcommands -----------------------------------------------------------

struct SolveArgs {
  GameSource src;
  double tol = 1e-9;
  std::size_t max_sweeps = 100000;
  std::string out = ".";
};

int run_solve(const SolveArgs& args) {
  check_tol(args.tol);
  const auto loaded = args.src.load();
  Outputs outputs(args.out);
  const SolveReport rep = solve(loaded.game, {.tol = args.tol, .max_sweeps = args.max_sweeps});
  outputs.json_file("report.json", report_to_json(rep, loaded.labels));
  outputs.text_file("policy.csv", policy_csv(rep, loaded.labels));
  outputs.flush();
  if (!rep.converged) {
    spdlog::warn("value iteration stopped after {} sweeps, residual {}", rep.sweeps,
                 rep.residual);
    return kNotConverged;
  }
  return kOk;
}

struct LearnArgs {
  GameSource src;
  LearnConfig cfg;
  std::optional<double> stop_tol;
  bool reference = true;
  double tol = 1e-9;
  std::string out = ".";
};

int run_learn(LearnArgs args) {
  if (!(args.cfg.omega > 0.5 && args.cfg.omega <= 1.0))
    throw InputError("--omega must lie in (0.5, 1]");
  for (double e : {args.cfg.epsilon_start, args.cfg.epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw InputError("--epsilon must lie in [0, 1]");
  if (args.cfg.epoch == 0 || args.cfg.episode_length == 0)
    throw InputError("--epoch and --episode-length must be > 0");
  args.cfg.stop_tol = args.stop_tol;
  const auto loaded = args.src.load();
  Outputs outputs(args.out);

  std::optional<JointQ> reference;
  if (args.reference) reference = solve(loaded.game, {.tol = args.tol}).q;
  TabularEnv env(loaded.game, args.cfg.seed);
  const LearnResult res = learn(env, loaded.game, args.cfg, reference);

  json doc = {{"q", q_to_json(res.q)},
              {"visits", res.visits},
              {"steps_run", res.steps_run},
              {"stopped_early", res.stopped_early},
              {"seed", args.cfg.seed}};
  if (reference)
    doc["dist_to_qhat"] = distance_on_reachable(res.q, *reference, loaded.game, res.visits);
  outputs.json_file("q.json", doc);

  std::ostringstream diag;
  diag << "step,sup_norm_delta,dist_to_qhat,epsilon,seed\n";
  for (const auto& row : res.diagnostics)
    diag << row.step << ',' << num(row.sup_norm_delta) << ','
         << (row.dist_to_qhat ? num(*row.dist_to_qhat) : "") << ',' << num(row.epsilon)
         << ',' << row.seed << '\n';
  outputs.text_file("diagnostics.csv", diag.str());
  outputs.flush();
  return kOk;
}

struct SimulateArgs {
  GameSource src;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::size_t start = 0;
  std::string policy_path;
  std::size_t rollouts = 0;
  double tol = 1e-9;
  std::string out = ".";
};

int run_simulate(const SimulateArgs& args) {
  check_tol(args.tol);
  const auto loaded = args.src.load();
  const ImpulseGame& game = loaded.game;
  if (args.start >= game.num_states()) throw InputError("--start is out of range");
  if (args.rollouts == 1) throw InputError("--rollouts needs at least 2 rollouts");

  std::optional<SolveReport> solved;
  EquilibriumPolicy policy;
  if (!args.policy_path.empty()) {
    policy = policy_from_json(read_json(args.policy_path), game);
  } else {
    solved = solve(game, {.tol = args.tol});
    policy = solved->policy;
  }
  Outputs outputs(args.out);

  TabularEnv env(game, args.seed, args.start);
  const Simulation sim = simulate_policy(env, game, policy, args.steps, args.start);
  std::ostringstream csv;
  csv << "t,s,executed_a,executed_b,reward,cumulative_return\n";
  for (const auto& st : sim.steps)
    csv << st.t << ',' << quote(loaded.labels.empty() ? std::to_string(st.state)
                                                        : loaded.labels[st.state])
        << ',' << st.executed.a << ',' << st.executed.b << ',' << num(st.reward) << ','
        << num(st.cumulative_return) << '\n';
  outputs.text_file("trajectory.csv", csv.str());
  json summary = {{"taus", sim.taus},
                  {"rhos", sim.rhos},
                  {"steps", args.steps},
                  {"start", args.start},
                  {"seed", args.seed},
                  {"cumulative_return",
                   sim.steps.empty() ? 0.0 : sim.steps.back().cumulative_return},
                  {"zero_sum_violations", sim.zero_sum_violations}};

  int code = kOk;
  if (args.rollouts >= 2) {
    if (!solved) solved = solve(game, {.tol = args.tol});
    const MonteCarloEstimate mc =
        monte_carlo_value(game, policy, args.start, args.rollouts, args.seed);
    const double v_hat = solved->value[args.start];
    summary["monte_carlo"] = {{"rollouts", mc.rollouts},
                              {"horizon", mc.horizon},
                              {"mean", mc.mean},
                              {"std_error", mc.std_error},
                              {"v_hat", v_hat},
                              {"within_3se", std::abs(mc.mean - v_hat) <= 3.0 * mc.std_error}};
  }
  if (solved && !solved->converged) code = kNotConverged;
  outputs.json_file("interventions.json", summary);
  outputs.flush();
  return code;
}

struct OracleArgs {
  GameSource src;
  std::uint64_t max_enumeration = 10000000;
  double tol = 1e-8;
  std::string out = ".";
};

int run_oracle(const OracleArgs& args) {
  check_tol(args.tol);
  const auto loaded = args.src.load();
  Outputs outputs(args.out);
  const std::uint64_t pairs = policy_pair_count(loaded.game);
  const auto res = minimax_oracle(loaded.game, args.max_enumeration, args.tol);
  json doc = {{"policy_pairs", pairs}, {"max_enumeration", args.max_enumeration}};
  if (!res) {
    doc["certified"] = false;
    doc["reason"] = "policy space exceeds --max-enum";
  } else {
    doc["upper"] = res->upper;
    doc["lower"] = res->lower;
    doc["gap"] = res->gap;
    doc["distance_to_solution"] = res->distance_to_solution;
    doc["certified"] = res->certified;
  }
  outputs.json_file("oracle.json", doc);
  outputs.flush();
  return res && res->certified ? kOk : kNotConverged;
}

struct BudgetArgs {
  GameSource src;
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  double tol = 1e-9;
  std::size_t max_sweeps = 100000;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::size_t start = 0;
  std::string out = ".";
};

int run_budget(const BudgetArgs& args) {
  check_tol(args.tol);
  const auto loaded = args.src.load();
  if (args.start >= loaded.game.num_states()) throw InputError("--start is out of range");
  Outputs outputs(args.out);
  const AugmentedGame aug = augment(loaded.game, args.n1, args.n2);
  const SolveReport rep =
      solve_budgeted(aug, {.tol = args.tol, .max_sweeps = args.max_sweeps});
  const auto labels = aug.labels();
  json report = report_to_json(rep, labels);
  report["n1"] = args.n1;
  report["n2"] = args.n2;
  outputs.json_file("report.json", report);
  outputs.text_file("policy.csv", policy_csv(rep, labels));

  const BudgetTrajectory traj = simulate_budgeted(aug, rep.policy, args.steps, args.seed, args.start);
  std::ostringstream csv;
  csv << "t,s,y,z,executed_a,executed_b,reward,cumulative_return\n";
  for (const auto& st : traj.steps)
    csv << st.t << ',' << st.state.s << ',' << st.state.y << ',' << st.state.z << ','
        << st.executed.a << ',' << st.executed.b << ',' << num(st.reward) << ','
        << num(st.cumulative_return) << '\n';
  outputs.text_file("trajectory.csv", csv.str());
  outputs.json_file("interventions.json",
                    {{"taus", traj.taus},
                     {"rhos", traj.rhos},
                     {"interventions1", traj.interventions1},
                     {"interventions2", traj.interventions2},
                     {"n1", args.n1},
                     {"n2", args.n2}});
  outputs.flush();
  return rep.converged ? kOk : kNotConverged;
}

struct GenArgs {
  GameSource src;
  std::string out = ".";
  std::string name = "game.json";
};

int run_gen(const GenArgs& args) {
  const auto loaded = args.src.load();
  Outputs outputs(args.out);
  json doc = game_to_json(loaded.game);
  if (loaded.basis) doc["basis"] = *loaded.basis;
  outputs.json_file(args.name, doc);
  outputs.flush();
  return kOk;
}

struct FitArgs {
  GameSource src;
  FitConfig cfg;
  std::string basis_path;
  std::string combinator = "T";
  std::string sampling = "trajectory";
  std::optional<double> stop_tol;
  std::string out = ".";
};

int run_fit(FitArgs args) {
  Combinator comb;
  try {
    comb = parse_combinator(args.combinator);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (args.sampling != "trajectory" && args.sampling != "uniform")
    throw InputError("--sampling must be trajectory or uniform");
  if (!(args.cfg.omega > 0.5 && args.cfg.omega <= 1.0))
    throw InputError("--omega must lie in (0.5, 1]");
  const auto loaded = args.src.load();
  const std::size_t n = loaded.game.num_states();
  std::optional<BasisMatrix> rows = loaded.basis;
  if (!args.basis_path.empty()) {
    rows = load_basis(args.basis_path);
    if (!rows) throw InputError(args.basis_path + ": no 'basis' matrix");
  }
  std::optional<FeatureBasis> basis;
  try {
    basis.emplace(rows ? FeatureBasis(*rows) : FeatureBasis::constant(n));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (basis->num_states() != n) throw InputError("basis has the wrong number of rows");

  args.cfg.combinator = comb;
  args.cfg.sampling = args.sampling == "uniform" ? Sampling::Uniform : Sampling::Trajectory;
  args.cfg.tol = args.stop_tol;
  Outputs outputs(args.out);
  const SolveReport exact = solve(loaded.game, {.tol = 1e-12});
  try {
    const FitReport rep = fit(loaded.game, *basis, args.cfg, exact.value);
    json doc = fit_report_to_json(rep, verify_bound(loaded.game, *basis, rep.weights));
    doc["combinator"] = args.combinator;
    doc["sampling"] = args.sampling;
    doc["seed"] = args.cfg.seed;
    outputs.json_file("fit.json", doc);
    outputs.flush();
    return kOk;
  } catch (const FitDivergence& e) {
    const Eigen::VectorXd& r = e.last_weights;
    outputs.json_file("fit.json", {{"diverged", true},
                                   {"sample", e.sample},
                                   {"last_weights", std::vector<double>(r.data(), r.data() + r.size())}});
    outputs.flush();
    spdlog::error("{}", e.what());
    return kNotConverged;
  }
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("impulse");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("IMPULSE_LOG_LEVEL"))
    spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Two-player zero-sum stochastic games with impulse control"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "value iteration; writes report.json and policy.csv");
  solve_args.src.attach(solve_cmd);
  solve_cmd->add_option("--tol", solve_args.tol)->capture_default_str();
  solve_cmd->add_option("--max-sweeps", solve_args.max_sweeps)->capture_default_str();
  solve_cmd->add_option("--out", solve_args.out, "output directory")->capture_default_str();

  LearnArgs learn_args;
  auto* learn_cmd = app.add_subcommand("learn", "Q-learning; writes q.json and diagnostics.csv");
  learn_args.src.attach(learn_cmd);
  learn_cmd->add_option("--steps", learn_args.cfg.steps)->capture_default_str();
  learn_cmd->add_option("--epsilon", learn_args.cfg.epsilon_start, "initial exploration rate")
      ->capture_default_str();
  learn_cmd->add_option("--epsilon-end", learn_args.cfg.epsilon_end)->capture_default_str();
  learn_cmd->add_option("--omega", learn_args.cfg.omega)->capture_default_str();
  learn_cmd->add_option("--seed", learn_args.cfg.seed)->capture_default_str();
  learn_cmd->add_option("--epoch", learn_args.cfg.epoch)->capture_default_str();
  learn_cmd->add_option("--episode-length", learn_args.cfg.episode_length)->capture_default_str();
  learn_cmd->add_option("--stop-tol", learn_args.stop_tol, "stop once an epoch moves Q by less");
  learn_cmd->add_option("--tol", learn_args.tol, "solver tolerance for the reference Q")
      ->capture_default_str();
  learn_cmd->add_flag("!--no-reference", learn_args.reference, "skip the exact reference Q");
  learn_cmd->add_option("--out", learn_args.out)->capture_default_str();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "play the equilibrium policy; writes trajectory.csv");
  sim_args.src.attach(sim_cmd);
  sim_cmd->add_option("--steps", sim_args.steps)->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed)->capture_default_str();
  sim_cmd->add_option("--start", sim_args.start)->capture_default_str();
  sim_cmd->add_option("--policy", sim_args.policy_path, "report.json from solve")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--rollouts", sim_args.rollouts, "Monte-Carlo check against v_hat");
  sim_cmd->add_option("--tol", sim_args.tol)->capture_default_str();
  sim_cmd->add_option("--out", sim_args.out)->capture_default_str();

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force saddle-point certificate");
  oracle_args.src.attach(oracle_cmd);
  oracle_cmd->add_option("--max-enum", oracle_args.max_enumeration)->capture_default_str();
  oracle_cmd->add_option("--tol", oracle_args.tol)->capture_default_str();
  oracle_cmd->add_option("--out", oracle_args.out)->capture_default_str();

  BudgetArgs budget_args;
  auto* budget_cmd = app.add_subcommand("budget", "solve and simulate with intervention budgets");
  budget_args.src.attach(budget_cmd);
  budget_cmd->add_option("--n1", budget_args.n1)->capture_default_str();
  budget_cmd->add_option("--n2", budget_args.n2)->capture_default_str();
  budget_cmd->add_option("--tol", budget_args.tol)->capture_default_str();
  budget_cmd->add_option("--max-sweeps", budget_args.max_sweeps)->capture_default_str();
  budget_cmd->add_option("--steps", budget_args.steps)->capture_default_str();
  budget_cmd->add_option("--seed", budget_args.seed)->capture_default_str();
  budget_cmd->add_option("--start", budget_args.start)->capture_default_str();
  budget_cmd->add_option("--out", budget_args.out)->capture_default_str();

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen", "write a game-spec file");
  gen_args.src.attach(gen_cmd);
  gen_cmd->add_option("--out", gen_args.out)->capture_default_str();
  gen_cmd->add_option("--name", gen_args.name, "file name inside --out")->capture_default_str();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "linear value approximation; writes fit.json");
  fit_args.src.attach(fit_cmd);
  fit_cmd->add_option("--basis", fit_args.basis_path, "file with a 'basis' matrix");
  fit_cmd->add_option("--steps,--samples", fit_args.cfg.samples)->capture_default_str();
  fit_cmd->add_option("--omega", fit_args.cfg.omega)->capture_default_str();
  fit_cmd->add_option("--seed", fit_args.cfg.seed)->capture_default_str();
  fit_cmd->add_option("--epsilon", fit_args.cfg.epsilon)->capture_default_str();
  fit_cmd->add_option("--combinator", fit_args.combinator)->capture_default_str();
  fit_cmd->add_option("--sampling", fit_args.sampling)->capture_default_str();
  fit_cmd->add_option("--stop-tol", fit_args.stop_tol);
  fit_cmd->add_option("--out", fit_args.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve_args);
    if (learn_cmd->parsed()) return run_learn(learn_args);
    if (sim_cmd->parsed()) return run_simulate(sim_args);
    if (oracle_cmd->parsed()) return run_oracle(oracle_args);
    if (budget_cmd->parsed()) return run_budget(budget_args);
    if (gen_cmd->parsed()) return run_gen(gen_args);
    if (fit_cmd->parsed()) return run_fit(fit_args);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const GameFileError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  }
  return kInputError;
}
