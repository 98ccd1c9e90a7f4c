// dagctrl: validate, synthesize, simulate and verify DAG-structured LQG
// controllers from a JSON problem file.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <random>

#include "dagctrl/errors.hpp"
#include "dagctrl/io.hpp"
#include "dagctrl/lti.hpp"
#include "dagctrl/runtime.hpp"
#include "dagctrl/synthesis.hpp"
#include "dagctrl/verify.hpp"

using namespace dagctrl;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dagctrl");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DAGCTRL_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

// Loading problems: every failure here is an input problem.
struct InputError {
  std::string message;
};

ProblemFile load_or_throw(const std::string& path) {
  try {
    return load_problem(path);
  } catch (const ParseError& e) {
    throw InputError{e.what()};
  } catch (const IndexError& e) {
    throw InputError{e.what()};
  } catch (const DimensionError& e) {
    throw InputError{e.what()};
  } catch (const CycleError& e) {
    throw InputError{e.what()};
  } catch (const InvalidArgument& e) {
    throw InputError{e.what()};
  }
}

int cmd_validate(const std::string& path, const std::string& out) {
  const ProblemFile file = load_or_throw(path);
  const ValidationReport rep = validate(file.problem, file.tol);
  std::cout << rep.summary();
  std::cout << (rep.ok() ? "all assumptions hold\n" : "assumption check failed\n");
  if (!out.empty()) write_text(out, validation_to_json(rep).dump(2) + "\n");
  return rep.ok() ? kOk : kFailed;
}

int cmd_synth(const std::string& path, const std::string& form_name, const std::string& out) {
  const ProblemFile file = load_or_throw(path);
  const ControllerForm form = parse_controller_form(form_name);
  const GainLibrary gains = compute_gains(file.problem, file.tol);
  const ControllerRealization K = synthesize(file.problem, gains, form);
  const StateSpaced cl = connect_feedback(file.problem.plant(), K.ss);
  std::optional<double> cost;
  if (is_hurwitz(cl.A)) cost = h2_norm_sq(cl);
  std::cout << "form " << to_string(form) << ", states " << K.ss.states() << ", closed-loop cost ";
  if (cost)
    std::cout << std::setprecision(12) << *cost << "\n";
  else
    std::cout << "unbounded (closed loop not Hurwitz)\n";
  const json doc = controller_to_json(K, file.problem, gains, file.source, cost);
  if (!out.empty())
    write_text(out, doc.dump(1) + "\n");
  else
    std::cout << doc.dump(1) << "\n";
  return cost ? kOk : kFailed;
}

struct SimulateArgs {
  std::string path, mode = "network", form = "minimal-state", out;
  double T = 20.0, dt = 1e-3;
  std::optional<std::uint64_t> seed;
  std::optional<int> impulse;
  std::vector<double> x0;
  std::optional<std::uint64_t> x0_seed;
  bool compare = false;
  int record_every = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  const ProblemFile file = load_or_throw(a.path);
  const Problem& problem = file.problem;
  const GainLibrary gains = compute_gains(problem, file.tol);

  SimOptions so;
  so.mode = a.mode == "network" ? SimMode::Network : SimMode::Monolithic;
  so.form = parse_controller_form(a.form);
  so.T = a.T;
  so.dt = a.dt;
  so.noise_seed = a.seed;
  so.record_every = a.record_every;
  const Index n = problem.dims().n.total();
  if (!a.x0.empty()) {
    if (static_cast<Index>(a.x0.size()) != n) throw InvalidArgument("--x0 needs " + std::to_string(n) + " values");
    // x0 is given in the file's agent order; the simulation runs relabeled.
    Eigen::VectorXd given = Eigen::Map<const Eigen::VectorXd>(a.x0.data(), n);
    so.x0.resize(n);
    const auto original = problem.graph().original_label();
    std::vector<Index> orig_sizes;
    for (int r = 0; r < problem.size(); ++r) orig_sizes.push_back(0);
    for (int r = 0; r < problem.size(); ++r)
      orig_sizes[static_cast<std::size_t>(original[static_cast<std::size_t>(r)])] = problem.dims().n.size(r);
    const BlockPartition orig(orig_sizes);
    for (int r = 0; r < problem.size(); ++r) {
      const int o = original[static_cast<std::size_t>(r)];
      so.x0.segment(problem.dims().n.offset(r), problem.dims().n.size(r)) = given.segment(orig.offset(o), orig.size(o));
    }
  } else if (a.x0_seed) {
    std::mt19937_64 rng(*a.x0_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    so.x0 = Eigen::VectorXd::NullaryExpr(n, [&]() { return normal(rng); });
  }
  if (a.impulse) so.impulse_channel = *a.impulse - 1;

  const SimTrace trace = simulate(problem, gains, so);
  json summary = {{"mode", a.mode},
                  {"form", so.mode == SimMode::Monolithic ? json(a.form) : json(nullptr)},
                  {"T", a.T},
                  {"dt", a.dt},
                  {"steps", trace.steps},
                  {"running_cost", trace.cost},
                  {"noise_seed", a.seed ? json(*a.seed) : json(nullptr)}};
  if (a.seed) {
    const StateSpaced cl = connect_feedback(problem.plant(), synthesize(problem, gains, so.form).ss);
    summary["h2_cost"] = h2_norm_sq(cl);
  }
  if (a.compare) {
    SimOptions other = so;
    other.mode = so.mode == SimMode::Network ? SimMode::Monolithic : SimMode::Network;
    const SimTrace counterpart = simulate(problem, gains, other);
    const double du = max_abs_deviation(trace.u, counterpart.u), dx = max_abs_deviation(trace.x, counterpart.x);
    summary["max_deviation"] = {{"u", du}, {"x", dx}};
    std::cout << "max deviation vs " << (other.mode == SimMode::Network ? "network" : "monolithic") << ": u "
              << du << ", x " << dx << "\n";
  }
  std::cout << "running cost " << std::setprecision(10) << trace.cost << " over " << trace.steps << " steps\n";
  if (!a.out.empty()) {
    write_text(a.out + ".csv", trace_to_csv(trace));
    write_text(a.out + ".json", summary.dump(2) + "\n");
  }
  return kOk;
}

int cmd_verify(const std::string& path, std::optional<int> grid_points, std::optional<double> rtol,
               std::optional<std::uint64_t> seed, const std::string& out) {
  json doc;
  try {
    doc = read_json(path);
  } catch (const ParseError& e) {
    throw InputError{e.what()};
  }
  const bool is_controller = doc.is_object() && doc.contains("form") && doc.contains("problem");
  std::optional<ControllerFile> controller;
  ProblemFile file = [&]() {
    try {
      if (is_controller) {
        controller = parse_controller(doc);
        return parse_problem(controller->problem_source);
      }
      return parse_problem(doc);
    } catch (const Error& e) {
      throw InputError{e.what()};
    }
  }();

  SuiteOptions so;
  so.tol = file.tol;
  so.grid = file.grid;
  if (grid_points) so.grid.log_points = *grid_points;
  if (rtol) {
    so.tol.equivalence_rtol = *rtol;
    so.tol.markov_rtol = *rtol;
    so.tol.appendix_rtol = *rtol;
  }
  if (seed) {
    so.seed = *seed;
    so.grid.seed = *seed;
  } else if (file.seed) {
    so.seed = *file.seed;
  }

  std::vector<CheckReport> reports = run_suite(file.problem, so);
  if (controller) {
    auto extra = check_controller_file(*controller, file.problem, so.tol, so.grid);
    reports.insert(reports.end(), extra.begin(), extra.end());
    std::sort(reports.begin(), reports.end(), [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
  }
  std::cout << format_table(reports);
  const bool ok = suite_passed(reports);
  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  if (!out.empty()) write_text(out, suite_to_json(reports).dump(2) + "\n");
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Optimal decentralized LQG control on information DAGs"};
  app.require_subcommand(1);

  const std::vector<std::string> forms{"lemma", "state", "innovation", "minimal-state", "minimal-innovation"};

  std::string path, out;
  auto* validate_cmd = app.add_subcommand("validate", "check the structural and Riccati assumptions");
  validate_cmd->add_option("problem", path, "problem JSON")->required();
  validate_cmd->add_option("--out", out, "write the report as JSON");

  std::string form = "minimal-state";
  auto* synth_cmd = app.add_subcommand("synth", "synthesize a controller realization");
  synth_cmd->add_option("problem", path, "problem JSON")->required();
  synth_cmd->add_option("--form", form, "realization")->check(CLI::IsMember(forms));
  synth_cmd->add_option("--out", out, "controller JSON");

  SimulateArgs sim;
  std::optional<std::uint64_t> sim_seed, sim_x0_seed;
  std::optional<int> sim_impulse;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate the closed loop");
  sim_cmd->add_option("problem", sim.path, "problem JSON")->required();
  sim_cmd->add_option("--mode", sim.mode, "network or monolithic")->check(CLI::IsMember({"network", "monolithic"}));
  sim_cmd->add_option("--form", sim.form, "realization for monolithic mode")->check(CLI::IsMember(forms));
  sim_cmd->add_option("--T", sim.T, "horizon")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dt", sim.dt, "step")->check(CLI::PositiveNumber);
  auto* seed_opt = sim_cmd->add_option("--seed", sim_seed, "white-noise seed (Euler-Maruyama)");
  sim_cmd->add_option("--impulse", sim_impulse, "unit impulse on this disturbance channel (1-based)")
      ->excludes(seed_opt)
      ->check(CLI::PositiveNumber);
  auto* x0_opt = sim_cmd->add_option("--x0", sim.x0, "initial plant state, file agent order")->delimiter(',');
  sim_cmd->add_option("--x0-seed", sim_x0_seed, "random initial plant state")->excludes(x0_opt);
  sim_cmd->add_flag("--compare", sim.compare, "also run the other mode and report the deviation");
  sim_cmd->add_option("--record-every", sim.record_every, "keep every k-th sample")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim.out, "output prefix for .csv and .json");

  std::optional<int> grid_points;
  std::optional<double> rtol;
  std::optional<std::uint64_t> verify_seed;
  auto* verify_cmd = app.add_subcommand("verify", "run the verification suite on a problem or controller file");
  verify_cmd->add_option("file", path, "problem or controller JSON")->required();
  verify_cmd->add_option("--grid-points", grid_points, "log-spaced frequency points")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--rtol", rtol, "relative tolerance for equivalence checks")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--seed", verify_seed, "seed for grid and simulation");
  verify_cmd->add_option("--out", out, "write results as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(path, out);
    if (synth_cmd->parsed()) return cmd_synth(path, form, out);
    if (sim_cmd->parsed()) {
      sim.seed = sim_seed;
      sim.impulse = sim_impulse;
      sim.x0_seed = sim_x0_seed;
      return cmd_simulate(sim);
    }
    if (verify_cmd->parsed()) return cmd_verify(path, grid_points, rtol, verify_seed, out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
