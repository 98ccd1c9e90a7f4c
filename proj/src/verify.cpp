#include "dagctrl/verify.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "dagctrl/errors.hpp"
#include "dagctrl/lti.hpp"

namespace dagctrl {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double norm2(const MatrixXcd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  return svd.singularValues()(0);
}

CheckReport named(std::string name) {
  CheckReport rep;
  rep.name = std::move(name);
  return rep;
}

std::string point(Complex s) {
  std::ostringstream os;
  os << "s = " << s.real() << (s.imag() < 0 ? "-" : "+") << std::abs(s.imag()) << "j";
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

int gramian_rank(const MatrixXd& W, double tol) {
  if (W.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  int r = 0;
  for (Index k = 0; k < ev.size(); ++k)
    if (ev(k) > tol * top) ++r;
  return r;
}

MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  return M;
}

// Real quasi-triangular T with the requested eigenvalue real parts, rotated
// by a random orthogonal matrix.
MatrixXd random_hurwitz(std::mt19937_64& rng, Index n, double re_min, double re_max) {
  std::uniform_real_distribution<double> re(re_min, re_max), im(0.2, 2.0), coin(0.0, 1.0);
  MatrixXd T = MatrixXd::Zero(n, n);
  Index k = 0;
  while (k < n) {
    if (k + 1 < n && coin(rng) < 0.4) {
      const double a = re(rng), b = im(rng);
      T(k, k) = a;
      T(k + 1, k + 1) = a;
      T(k, k + 1) = b;
      T(k + 1, k) = -b;
      k += 2;
    } else {
      T(k, k) = re(rng);
      k += 1;
    }
  }
  std::uniform_real_distribution<double> upper(-0.5, 0.5);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (T(i, j) == 0.0 && !(j == i + 1 && T(j, i) != 0.0)) T(i, j) = upper(rng);
  const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(random_matrix(rng, n, n)).householderQ();
  return Q * T * Q.transpose();
}

}  // namespace

double CheckReport::value(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  throw InvalidArgument("report '" + name + "' has no value '" + key + "'");
}

FrequencyGrid standard_grid(const GridOptions& opts) {
  FrequencyGrid grid;
  const double lo = std::log10(opts.log_min), hi = std::log10(opts.log_max);
  for (int k = 0; k < opts.log_points; ++k) {
    const double e = opts.log_points == 1 ? lo : lo + (hi - lo) * k / (opts.log_points - 1);
    grid.emplace_back(0.0, std::pow(10.0, e));
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> w(opts.random_min, opts.random_max);
  for (int k = 0; k < opts.random_points; ++k) grid.emplace_back(0.0, w(rng));
  return grid;
}

CheckReport check_equivalence(const StateSpaced& K1, const StateSpaced& K2, const FrequencyGrid& grid, double rtol,
                              const std::string& name) {
  CheckReport rep = named(name);
  rep.tolerance = rtol;
  if (K1.inputs() != K2.inputs() || K1.outputs() != K2.outputs()) {
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back("input/output dimensions differ");
    return rep;
  }
  Complex worst_at{};
  for (Complex s : grid) {
    const MatrixXcd T1 = eval_transfer(K1, s), T2 = eval_transfer(K2, s);
    const double e = norm2(T1 - T2) / std::max(1.0, norm2(T1));
    if (e > rep.metric || !std::isfinite(e)) {
      rep.metric = e;
      worst_at = s;
    }
  }
  rep.pass = rep.metric <= rtol;
  if (!rep.pass) rep.witnesses.push_back(point(worst_at) + ", relative error " + fmt(rep.metric));
  return rep;
}

CheckReport check_markov(const StateSpaced& K1, const StateSpaced& K2, int count, double rtol,
                         const std::string& name) {
  CheckReport rep = named(name);
  rep.tolerance = rtol;
  if (K1.inputs() != K2.inputs() || K1.outputs() != K2.outputs()) {
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back("input/output dimensions differ");
    return rep;
  }
  const auto M1 = markov_parameters(K1, count), M2 = markov_parameters(K2, count);
  std::string where;
  const auto consider = [&](const MatrixXd& a, const MatrixXd& b, const std::string& label) {
    const double e = (a - b).norm() / std::max(1.0, a.norm());
    if (e > rep.metric || !std::isfinite(e)) {
      rep.metric = e;
      where = label;
    }
  };
  consider(K1.D, K2.D, "D");
  for (int k = 0; k < count; ++k) consider(M1[static_cast<std::size_t>(k)], M2[static_cast<std::size_t>(k)], "C A^" + std::to_string(k) + " B");
  rep.pass = rep.metric <= rtol;
  if (!rep.pass) rep.witnesses.push_back(where + ", relative error " + fmt(rep.metric));
  return rep;
}

CheckReport check_sparsity(const StateSpaced& K, const Problem& problem, const FrequencyGrid& grid, double atol,
                           const std::string& name) {
  CheckReport rep = named(name);
  rep.tolerance = atol;
  const auto& dims = problem.dims();
  const auto& g = problem.graph();
  if (K.outputs() != dims.m.total() || K.inputs() != dims.p.total()) {
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back("controller is not m x p");
    return rep;
  }
  std::vector<std::pair<int, int>> zero_blocks;
  for (int i = 0; i < problem.size(); ++i)
    for (int j = 0; j < problem.size(); ++j)
      if (!g.reaches(j, i)) zero_blocks.emplace_back(i, j);
  rep.values.emplace_back("zero_blocks", static_cast<double>(zero_blocks.size()));

  std::string where;
  for (Complex s : grid) {
    const MatrixXcd T = eval_transfer(K, s);
    const double scale = 1.0 + norm2(T);
    for (const auto& [i, j] : zero_blocks) {
      const double e = norm2(MatrixXcd(T.block(dims.m.offset(i), dims.p.offset(j), dims.m.size(i), dims.p.size(j)))) / scale;
      if (e > rep.metric) {
        rep.metric = e;
        where = "block (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") at " + point(s);
      }
    }
  }
  rep.pass = rep.metric <= atol;
  if (!rep.pass) rep.witnesses.push_back(where + ", relative size " + fmt(rep.metric));
  return rep;
}

CheckReport check_stability_and_cost(const Problem& problem, const StateSpaced& K, const Tolerances& tol,
                                     const std::string& name) {
  CheckReport rep = named(name);
  rep.tolerance = 0.0 - tol.hurwitz_margin;
  const FourBlockPlant plant = problem.plant();
  const StateSpaced cl = connect_feedback(plant, K);
  const double abscissa = spectral_abscissa(cl.A);
  rep.metric = abscissa;
  rep.values.emplace_back("abscissa", abscissa);
  if (!(abscissa < -tol.hurwitz_margin)) {
    rep.witnesses.push_back("closed-loop eigenvalue with real part " + fmt(abscissa));
    return rep;
  }
  const double cost = h2_norm_sq(cl);
  const double central = h2_norm_sq(connect_feedback(plant, centralized_lqg(problem, tol)));
  rep.values.emplace_back("cost", cost);
  rep.values.emplace_back("centralized", central);
  rep.notes.push_back("cost " + fmt(cost) + ", centralized " + fmt(central));
  const double slack = tol.equivalence_rtol * std::max(1.0, central);
  rep.pass = cost >= central - slack;
  if (!rep.pass) rep.witnesses.push_back("cost below the centralized baseline by " + fmt(central - cost));
  return rep;
}

CheckReport check_appendix_identity(const Problem& problem, const GainLibrary& gains, const FrequencyGrid& grid,
                                    double rtol) {
  CheckReport rep = named("appendix identity P2 = P");
  rep.tolerance = rtol;
  const StateSpaced P = build_P(problem, gains), P2 = build_P2(problem, gains);
  Complex worst_at{};
  for (Complex s : grid) {
    const MatrixXcd a = eval_transfer(P, s), b = eval_transfer(P2, s);
    const double e = norm2(a - b) / (1.0 + norm2(a));
    if (e > rep.metric || !std::isfinite(e)) {
      rep.metric = e;
      worst_at = s;
    }
  }
  rep.pass = rep.metric <= rtol;
  if (!rep.pass) rep.witnesses.push_back(point(worst_at) + ", relative error " + fmt(rep.metric));
  return rep;
}

CheckReport check_minimality(const ControllerRealization& K, const Problem& problem, const Tolerances& tol) {
  CheckReport rep = named("minimality " + to_string(K.form));
  const Index dim = K.ss.states(), expected = problem.descendant_state_total();
  rep.values.emplace_back("dim", static_cast<double>(dim));
  rep.values.emplace_back("expected_dim", static_cast<double>(expected));
  rep.metric = static_cast<double>(std::abs(dim - expected));
  rep.tolerance = 0.0;
  bool ok = dim == expected;
  if (!ok) rep.witnesses.push_back("state dimension " + std::to_string(dim) + ", expected " + std::to_string(expected));

  // Block pattern of A between copies.
  const auto& g = problem.graph();
  double pattern = 0.0;
  std::string where;
  for (const auto& rb : K.blocks)
    for (const auto& cb : K.blocks) {
      if (rb.copy < 0 || cb.copy < 0 || g.reaches(cb.copy, rb.copy)) continue;
      const double v = K.ss.A.block(rb.offset, cb.offset, rb.size, cb.size).cwiseAbs().maxCoeff();
      if (v > pattern) {
        pattern = v;
        where = "copy " + std::to_string(rb.copy + 1) + " reads copy " + std::to_string(cb.copy + 1);
      }
    }
  rep.values.emplace_back("pattern_violation", pattern);
  if (pattern > tol.sparsity_atol) {
    ok = false;
    rep.witnesses.push_back(where + " with magnitude " + fmt(pattern));
  }

  const double scale_tol = tol.rank;
  const Index rc = controllable_basis(K.ss.A, K.ss.B, scale_tol).cols();
  const Index ro = controllable_basis(K.ss.A.transpose(), K.ss.C.transpose(), scale_tol).cols();
  rep.values.emplace_back("staircase_rank_c", static_cast<double>(rc));
  rep.values.emplace_back("staircase_rank_o", static_cast<double>(ro));
  if (is_hurwitz(K.ss.A)) {
    const int gc = gramian_rank(controllability_gramian(K.ss), tol.rank);
    const int go = gramian_rank(observability_gramian(K.ss), tol.rank);
    rep.values.emplace_back("gramian_rank_c", gc);
    rep.values.emplace_back("gramian_rank_o", go);
    rep.notes.push_back("Gramian ranks " + std::to_string(gc) + "/" + std::to_string(go) + " of " +
                        std::to_string(dim));
  } else {
    rep.notes.push_back("A is not Hurwitz; Gramian ranks not computed");
  }
  rep.notes.push_back("staircase ranks " + std::to_string(rc) + "/" + std::to_string(ro) + " of " +
                      std::to_string(dim));
  rep.pass = ok;
  return rep;
}

CheckReport check_staircase_minimality(const StateSpaced& K, double tol, const std::string& name) {
  CheckReport rep = named(name);
  rep.tolerance = tol;
  const Index n = K.states();
  const Index rc = controllable_basis(K.A, K.B, tol).cols();
  const Index ro = controllable_basis(K.A.transpose(), K.C.transpose(), tol).cols();
  rep.values.emplace_back("staircase_rank_c", static_cast<double>(rc));
  rep.values.emplace_back("staircase_rank_o", static_cast<double>(ro));
  rep.metric = static_cast<double>(2 * n - rc - ro);
  rep.pass = rc == n && ro == n;
  if (!rep.pass)
    rep.witnesses.push_back("controllable rank " + std::to_string(rc) + ", observable rank " + std::to_string(ro) +
                            " of " + std::to_string(n));
  return rep;
}

CheckReport check_edge_monotonicity(const Problem& problem, const Tolerances& tol, int max_edges) {
  CheckReport rep = named("cost monotonicity under added edges");
  rep.tolerance = tol.equivalence_rtol;
  const auto& g = problem.graph();
  const double base = h2_norm_sq(connect_feedback(problem.plant(), build_K_minimal(problem, compute_gains(problem, tol), ControllerForm::MinimalState).ss));
  rep.values.emplace_back("cost", base);
  int tried = 0;
  for (int a = 0; a < problem.size() && tried < max_edges; ++a)
    for (int b = a + 1; b < problem.size() && tried < max_edges; ++b) {
      if (g.reaches(a, b) || g.reaches(b, a)) continue;
      auto edges = g.closed_edges();
      edges.emplace_back(a, b);
      const Problem richer =
          Problem::from_original(problem.size(), edges, problem.agents(), problem.C1(), problem.D12());
      const double c = h2_norm_sq(connect_feedback(
          richer.plant(), build_K_minimal(richer, compute_gains(richer, tol), ControllerForm::MinimalState).ss));
      ++tried;
      const double excess = (c - base) / std::max(1.0, base);
      rep.notes.push_back("edge " + std::to_string(a + 1) + "->" + std::to_string(b + 1) + ": cost " + fmt(c));
      if (excess > rep.metric) rep.metric = excess;
      if (excess > tol.equivalence_rtol)
        rep.witnesses.push_back("adding " + std::to_string(a + 1) + "->" + std::to_string(b + 1) +
                                " raised the cost to " + fmt(c));
    }
  rep.values.emplace_back("edges_tried", tried);
  rep.pass = rep.witnesses.empty();
  if (tried == 0) rep.notes.push_back("graph is a total order; no edge can be added");
  return rep;
}

std::vector<CheckReport> run_suite(const Problem& problem, const SuiteOptions& opts) {
  const Tolerances& tol = opts.tol;
  std::vector<CheckReport> out;
  const FrequencyGrid grid = standard_grid(opts.grid);
  const GainLibrary gains = compute_gains(problem, tol);

  {
    CheckReport rep = named("riccati residuals");
    rep.tolerance = tol.are_residual;
    const auto& dims = problem.dims();
    bool stable = true;
    for (int i = 0; i < problem.size(); ++i) {
      const auto& gi = gains.agents[static_cast<std::size_t>(i)];
      rep.metric = std::max({rep.metric, gi.control_residual, gi.estimation_residual});
      const IndexSet d = problem.graph().descendants(i);
      const MatrixXd Acl = block_submatrix(problem.A(), dims.n, d, dims.n, d) +
                           block_submatrix(problem.B2(), dims.n, d, dims.m, d) * gi.F;
      const auto& a = problem.agent(i);
      if (!is_hurwitz(Acl) || !is_hurwitz(a.A + gi.L * a.C2)) {
        stable = false;
        rep.witnesses.push_back("agent " + std::to_string(i + 1) + " closed-loop gain is not stabilizing");
      }
    }
    rep.pass = stable && rep.metric <= tol.are_residual;
    if (rep.metric > tol.are_residual) rep.witnesses.push_back("residual " + fmt(rep.metric));
    out.push_back(std::move(rep));
  }

  std::vector<ControllerRealization> forms;
  for (ControllerForm f : all_controller_forms()) forms.push_back(synthesize(problem, gains, f));
  const ControllerRealization& reference = forms[1];  // state form
  for (const auto& K : forms) {
    const std::string tag = to_string(K.form);
    if (K.form != ControllerForm::State) {
      out.push_back(check_equivalence(reference.ss, K.ss, grid, tol.equivalence_rtol, "equivalence state~" + tag));
      out.push_back(check_markov(reference.ss, K.ss, opts.markov_count, tol.markov_rtol, "markov state~" + tag));
    }
    out.push_back(check_sparsity(K.ss, problem, grid, tol.sparsity_atol, "sparsity " + tag));
    out.push_back(check_stability_and_cost(problem, K.ss, tol, "stability and cost " + tag));
  }
  out.push_back(check_appendix_identity(problem, gains, grid, tol.appendix_rtol));
  for (const auto& K : forms)
    if (K.form == ControllerForm::MinimalState || K.form == ControllerForm::MinimalInnovation) {
      out.push_back(check_minimality(K, problem, tol));
      CheckReport sc = check_staircase_minimality(K.ss, tol.rank, "staircase rank " + to_string(K.form));
      sc.advisory = true;
      sc.notes.push_back("structured problems can be non-minimal; reported only");
      out.push_back(std::move(sc));
    }

  {
    const BarredSymbols s = build_barred(problem, gains);
    const MatrixXd lhs = s.S_n * local_estimator_gain(problem, gains) * s.ones_p, rhs = s.L * s.ones_p;
    CheckReport rep = named("lifted estimator identity");
    rep.tolerance = 1e-14;
    rep.metric = (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
    rep.pass = rep.metric <= rep.tolerance;
    if (!rep.pass) rep.witnesses.push_back("max entry difference " + fmt(rep.metric));
    out.push_back(std::move(rep));

    CheckReport sim = named("innovation similarity");
    sim.tolerance = 1e-10;
    const MatrixXd expected = s.S_n_inv * forms[1].ss.A * s.S_n;
    sim.metric = (forms[2].ss.A - expected).norm() / std::max(1.0, expected.norm());
    sim.pass = sim.metric <= sim.tolerance;
    if (!sim.pass) sim.witnesses.push_back("relative difference " + fmt(sim.metric));
    out.push_back(std::move(sim));
  }

  {
    CheckReport rep = named("network trace equivalence");
    rep.tolerance = tol.trace_atol;
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SimOptions so;
    so.T = opts.sim_T;
    so.dt = opts.sim_dt;
    so.x0 = VectorXd::NullaryExpr(problem.dims().n.total(), [&]() { return normal(rng); });
    so.record_every = 10;
    try {
      const SimTrace net = simulate(problem, gains, so);
      so.mode = SimMode::Monolithic;
      so.form = ControllerForm::MinimalState;
      const SimTrace mono = simulate(problem, gains, so);
      const double du = max_abs_deviation(net.u, mono.u), dx = max_abs_deviation(net.x, mono.x);
      rep.metric = std::max(du, dx);
      rep.values.emplace_back("u_deviation", du);
      rep.values.emplace_back("x_deviation", dx);
      rep.pass = rep.metric <= rep.tolerance;
      if (!rep.pass) rep.witnesses.push_back("u deviation " + fmt(du) + ", x deviation " + fmt(dx));
    } catch (const DivergenceError& e) {
      rep.metric = std::numeric_limits<double>::infinity();
      rep.witnesses.push_back(e.what());
    }
    out.push_back(std::move(rep));
  }

  if (opts.include_monotonicity) out.push_back(check_edge_monotonicity(problem, tol));

  std::sort(out.begin(), out.end(), [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
  return out;
}

bool suite_passed(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass || r.advisory; });
}

std::string format_table(const std::vector<CheckReport>& reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "check" << "  result    metric      tolerance\n";
  for (const auto& r : reports) {
    const char* result = r.pass ? "pass    " : (r.advisory ? "advisory" : "FAIL    ");
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << result << "  " << std::setw(10)
       << fmt(r.metric) << "  " << fmt(r.tolerance) << "\n";
    for (const auto& w : r.witnesses) os << "    witness: " << w << "\n";
    for (const auto& n : r.notes) os << "    note: " << n << "\n";
  }
  return os.str();
}

RandomFixture random_problem(std::uint64_t seed, const RandomProblemOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> agents(opts.min_agents, opts.max_agents);
  std::uniform_int_distribution<int> states(1, opts.max_state), inputs(1, opts.max_input), outputs(1, opts.max_output);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    const int N = agents(rng);
    // Edges are drawn along a hidden order, then the labels are shuffled.
    std::vector<int> label(static_cast<std::size_t>(N));
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b)
        if (unit(rng) < opts.edge_probability)
          edges.emplace_back(label[static_cast<std::size_t>(a)], label[static_cast<std::size_t>(b)]);

    std::vector<AgentModel> models;
    Index n = 0, m = 0;
    for (int i = 0; i < N; ++i) {
      const Index ni = states(rng), mi = inputs(rng), pi = outputs(rng);
      AgentModel a;
      a.A = random_hurwitz(rng, ni, opts.eig_min, opts.eig_max);
      a.B2 = random_matrix(rng, ni, mi);
      a.C2 = random_matrix(rng, pi, ni);
      a.B1 = MatrixXd::Zero(ni, ni + pi);
      a.B1.leftCols(ni) = random_matrix(rng, ni, ni);
      a.D21 = MatrixXd::Zero(pi, ni + pi);
      a.D21.rightCols(pi) = MatrixXd::Identity(pi, pi) + 0.3 * random_matrix(rng, pi, pi);
      models.push_back(std::move(a));
      n += ni;
      m += mi;
    }
    const Index nz = n + m;
    const MatrixXd D12 = random_matrix(rng, nz, m);
    const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(D12).householderQ() * MatrixXd::Identity(nz, m);
    const MatrixXd C1 = (MatrixXd::Identity(nz, nz) - Q * Q.transpose()) * random_matrix(rng, nz, n);

    try {
      Problem problem = Problem::from_original(N, edges, models, C1, D12);
      if (!validate(problem).ok()) continue;
      compute_gains(problem);
      spdlog::debug("random_problem: seed {} accepted after {} attempt(s)", seed, attempt);
      return {std::move(problem), attempt};
    } catch (const Error& e) {
      spdlog::debug("random_problem: rejected attempt {}: {}", attempt, e.what());
    }
  }
  throw NumericalError("random_problem: no valid problem after " + std::to_string(opts.max_attempts) + " attempts");
}

}  // namespace dagctrl
