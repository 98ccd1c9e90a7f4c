#include "dagctrl/synthesis.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <spdlog/spdlog.h>

#include <sstream>

#include "dagctrl/errors.hpp"

namespace dagctrl {

using Eigen::MatrixXd;

namespace {

template <typename Getter>
MatrixXd block_diag_of(const std::vector<AgentModel>& agents, Getter get) {
  Index rows = 0, cols = 0;
  for (const auto& a : agents) {
    rows += get(a).rows();
    cols += get(a).cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& a : agents) {
    const MatrixXd& M = get(a);
    out.block(r, c, M.rows(), M.cols()) = M;
    r += M.rows();
    c += M.cols();
  }
  return out;
}

MatrixXd block_diag_of(const std::vector<MatrixXd>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& M : blocks) {
    rows += M.rows();
    cols += M.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& M : blocks) {
    out.block(r, c, M.rows(), M.cols()) = M;
    r += M.rows();
    c += M.cols();
  }
  return out;
}

template <typename E>
[[noreturn]] void rethrow_as(const E& e, const std::string& context) {
  throw E(context + ": " + e.what());
}

RiccatiSolution annotated_are(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D,
                              const Tolerances& tol, const AreOptions& opts, const std::string& context) {
  try {
    return solve_are(A, B, C, D, tol, opts);
  } catch (const AssumptionError& e) {
    rethrow_as(e, context);
  } catch (const ImaginaryAxisError& e) {
    rethrow_as(e, context);
  } catch (const NumericalError& e) {
    rethrow_as(e, context);
  } catch (const NotHurwitzError& e) {
    rethrow_as(e, context);
  }
}

BlockPartition partition_of(const BlockPartition& dims, const IndexSet& idx) {
  std::vector<Index> sizes;
  for (int j : idx) sizes.push_back(dims.size(j));
  return BlockPartition(std::move(sizes));
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) { return Eigen::kroneckerProduct(a, b).eval(); }

// Lifted realization in state coordinates.
StateSpaced lifted_state(const BarredSymbols& s) {
  return {s.A + s.L * s.C + s.B * s.S_m * s.F * s.S_n_inv, -s.L * s.ones_p, s.ones_m.transpose() * s.F * s.S_n_inv,
          MatrixXd::Zero(s.ones_m.cols(), s.ones_p.cols())};
}

StateSpaced lifted_innovation(const BarredSymbols& s) {
  return {s.A + s.S_n_inv * s.L * s.S_p * s.C + s.B * s.F, -s.S_n_inv * s.L * s.ones_p, s.ones_m.transpose() * s.F,
          MatrixXd::Zero(s.ones_m.cols(), s.ones_p.cols())};
}

std::vector<StateBlock> lifted_blocks(const Problem& problem) {
  std::vector<StateBlock> blocks;
  const auto& n = problem.dims().n;
  for (int copy = 0; copy < problem.size(); ++copy)
    for (int j = 0; j < problem.size(); ++j)
      blocks.push_back({"xi", copy, j, copy * n.total() + n.offset(j), n.size(j)});
  return blocks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(InfoGraph graph, std::vector<AgentModel> agents, MatrixXd C1, MatrixXd D12)
    : graph_(std::move(graph)), agents_(std::move(agents)), C1_(std::move(C1)), D12_(std::move(D12)) {
  if (static_cast<int>(agents_.size()) != graph_.size())
    throw DimensionError("problem has " + std::to_string(agents_.size()) + " agents but the graph has " +
                         std::to_string(graph_.size()) + " nodes");
  std::vector<Index> n, m, p, q;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    const Index ni = a.A.rows(), mi = a.B2.cols(), pi = a.C2.rows(), qi = a.B1.cols();
    if (a.A.cols() != ni || a.B1.rows() != ni || a.B2.rows() != ni || a.C2.cols() != ni || a.D21.rows() != pi ||
        a.D21.cols() != qi)
      throw DimensionError("agent " + std::to_string(i + 1) + " has inconsistent matrix dimensions");
    n.push_back(ni);
    m.push_back(mi);
    p.push_back(pi);
    q.push_back(qi);
  }
  dims_ = {BlockPartition(n), BlockPartition(m), BlockPartition(p), BlockPartition(q)};
  if (C1_.cols() != dims_.n.total() || D12_.cols() != dims_.m.total() || C1_.rows() != D12_.rows())
    throw DimensionError("cost matrices C1 (" + std::to_string(C1_.rows()) + "x" + std::to_string(C1_.cols()) +
                         ") and D12 (" + std::to_string(D12_.rows()) + "x" + std::to_string(D12_.cols()) +
                         ") do not conform to the agents");
}

Problem Problem::from_original(int num_nodes, const std::vector<std::pair<int, int>>& edges,
                               const std::vector<AgentModel>& agents, const MatrixXd& C1, const MatrixXd& D12) {
  InfoGraph graph = InfoGraph::from_edges(num_nodes, edges);
  if (static_cast<int>(agents.size()) != num_nodes)
    throw DimensionError("expected " + std::to_string(num_nodes) + " agents, got " + std::to_string(agents.size()));
  const auto original = graph.original_label();

  std::vector<Index> n_orig, m_orig;
  for (const auto& a : agents) {
    n_orig.push_back(a.A.rows());
    m_orig.push_back(a.B2.cols());
  }
  const BlockPartition n_part(n_orig), m_part(m_orig);
  if (C1.cols() != n_part.total() || D12.cols() != m_part.total())
    throw DimensionError("cost matrices do not conform to the agents");

  std::vector<AgentModel> relabeled;
  for (int r = 0; r < num_nodes; ++r) relabeled.push_back(agents[static_cast<std::size_t>(original[static_cast<std::size_t>(r)])]);
  const IndexSet order(original.begin(), original.end());
  MatrixXd C1r = C1(Eigen::all, n_part.positions(order));
  MatrixXd D12r = D12(Eigen::all, m_part.positions(order));
  return Problem(std::move(graph), std::move(relabeled), std::move(C1r), std::move(D12r));
}

MatrixXd Problem::A() const { return block_diag_of(agents_, [](const AgentModel& a) -> const MatrixXd& { return a.A; }); }
MatrixXd Problem::B1() const { return block_diag_of(agents_, [](const AgentModel& a) -> const MatrixXd& { return a.B1; }); }
MatrixXd Problem::B2() const { return block_diag_of(agents_, [](const AgentModel& a) -> const MatrixXd& { return a.B2; }); }
MatrixXd Problem::C2() const { return block_diag_of(agents_, [](const AgentModel& a) -> const MatrixXd& { return a.C2; }); }
MatrixXd Problem::D21() const { return block_diag_of(agents_, [](const AgentModel& a) -> const MatrixXd& { return a.D21; }); }

FourBlockPlant Problem::plant() const { return {A(), B1(), B2(), C1_, C2(), D12_, D21()}; }

Index Problem::descendant_state_total() const {
  Index total = 0;
  for (int i = 0; i < size(); ++i) total += dims_.n.total(graph_.descendants(i));
  return total;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
  for (const auto& item : items)
    if (!item.pass) return false;
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& item : items)
    os << (item.pass ? "  pass  " : "  FAIL  ") << item.name << "  [" << item.detail << "]\n";
  return os.str();
}

ValidationReport validate(const Problem& problem, const Tolerances& tol) {
  ValidationReport rep;
  const auto& S = problem.graph().adjacency();
  {
    const bool lower = S.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cast<int>().sum() == 0;
    bool closed = true;
    const Eigen::MatrixXi Si = S.cast<int>();
    const Eigen::MatrixXi S2 = Si * Si;
    for (Index i = 0; i < S.rows(); ++i)
      for (Index j = 0; j < S.cols(); ++j)
        if ((S2(i, j) > 0) != S(i, j)) closed = false;
    rep.items.push_back({"assumption 1: information graph", lower && closed && S.diagonal().all(), 0.0, 0.0,
                         std::string("transitively closed: ") + (closed ? "yes" : "no") +
                             ", lower triangular: " + (lower ? "yes" : "no")});
  }
  for (int i = 0; i < problem.size(); ++i) {
    const double abscissa = spectral_abscissa(problem.agent(i).A);
    std::ostringstream os;
    os << "max Re eig(A_ii) = " << abscissa;
    rep.items.push_back({"assumption 2.2: agent " + std::to_string(i + 1) + " A_ii Hurwitz",
                         abscissa < -tol.hurwitz_margin, abscissa, -tol.hurwitz_margin, os.str()});
  }
  const auto add = [&rep](const std::string& prefix, const RiccatiAssumptions& ra) {
    for (const CheckItem* item : {&ra.r1, &ra.r2, &ra.r3}) {
      CheckItem copy = *item;
      copy.name = prefix + " " + item->name;
      rep.items.push_back(std::move(copy));
    }
  };
  add("assumption 2.3: control tuple (A, B2, C1, D12)",
      check_riccati_assumptions(problem.A(), problem.B2(), problem.C1(), problem.D12(), tol));
  for (int i = 0; i < problem.size(); ++i) {
    const auto& a = problem.agent(i);
    add("assumption 2.3: agent " + std::to_string(i + 1) + " estimation tuple",
        check_riccati_assumptions(a.A.transpose(), a.C2.transpose(), a.B1.transpose(), a.D21.transpose(), tol));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gains

GainLibrary compute_gains(const Problem& problem, const Tolerances& tol, const AreOptions& opts) {
  const auto& dims = problem.dims();
  const auto& g = problem.graph();
  const MatrixXd A = problem.A(), B2 = problem.B2();
  GainLibrary lib;
  for (int i = 0; i < problem.size(); ++i) {
    const IndexSet desc = g.descendants(i);
    const std::string who = "agent " + std::to_string(i + 1);
    const RiccatiSolution ctrl = annotated_are(
        block_submatrix(A, dims.n, desc, dims.n, desc), block_submatrix(B2, dims.n, desc, dims.m, desc),
        problem.C1()(Eigen::all, dims.n.positions(desc)), problem.D12()(Eigen::all, dims.m.positions(desc)), tol,
        opts, who + " control ARE");
    const auto& a = problem.agent(i);
    const RiccatiSolution est = annotated_are(a.A.transpose(), a.C2.transpose(), a.B1.transpose(),
                                              a.D21.transpose(), tol, opts, who + " estimation ARE");
    lib.agents.push_back({ctrl.X, ctrl.F, est.X, est.F.transpose(), ctrl.residual, est.residual});
    spdlog::debug("{}: control residual {:.2e}, estimation residual {:.2e}", who, ctrl.residual, est.residual);
  }
  for (int i = 0; i < problem.size(); ++i) {
    const IndexSet desc = g.descendants(i), anc = g.ancestors(i);
    lib.F_padded.push_back(selector(dims.m, desc) * lib.agents[static_cast<std::size_t>(i)].F *
                           selector(dims.n, desc).transpose());
    std::vector<MatrixXd> Ls;
    for (int j : anc) Ls.push_back(lib.agents[static_cast<std::size_t>(j)].L);
    lib.L_padded.push_back(selector(dims.n, anc) * block_diag_of(Ls) * selector(dims.p, anc).transpose());
  }
  return lib;
}

BarredSymbols build_barred(const Problem& problem, const GainLibrary& gains) {
  const int N = problem.size();
  const auto& dims = problem.dims();
  const MatrixXd I_N = MatrixXd::Identity(N, N);
  const MatrixXd S = problem.graph().real_adjacency();
  const MatrixXd S_inv = problem.graph().inverse_adjacency().cast<double>();
  const MatrixXd ones = MatrixXd::Ones(N, 1);
  const MatrixXd I_n = MatrixXd::Identity(dims.n.total(), dims.n.total());
  const MatrixXd I_m = MatrixXd::Identity(dims.m.total(), dims.m.total());
  const MatrixXd I_p = MatrixXd::Identity(dims.p.total(), dims.p.total());

  BarredSymbols s;
  s.A = kron(I_N, problem.A());
  s.B = kron(I_N, problem.B2());
  s.C = kron(I_N, problem.C2());
  s.S_m = kron(S, I_m);
  s.S_n = kron(S, I_n);
  s.S_p = kron(S, I_p);
  s.S_n_inv = kron(S_inv, I_n);
  s.ones_m = kron(ones, I_m);
  s.ones_p = kron(ones, I_p);
  s.F = block_diag_of(gains.F_padded);
  s.L = block_diag_of(gains.L_padded);
  return s;
}

// ---------------------------------------------------------------------------
// Controller forms

std::string to_string(ControllerForm form) {
  switch (form) {
    case ControllerForm::Lemma: return "lemma";
    case ControllerForm::State: return "state";
    case ControllerForm::Innovation: return "innovation";
    case ControllerForm::MinimalState: return "minimal-state";
    case ControllerForm::MinimalInnovation: return "minimal-innovation";
  }
  return "unknown";
}

ControllerForm parse_controller_form(const std::string& name) {
  for (ControllerForm f : all_controller_forms())
    if (to_string(f) == name) return f;
  throw InvalidArgument("unknown controller form '" + name + "'");
}

const std::vector<ControllerForm>& all_controller_forms() {
  static const std::vector<ControllerForm> forms{ControllerForm::Lemma, ControllerForm::State,
                                                 ControllerForm::Innovation, ControllerForm::MinimalState,
                                                 ControllerForm::MinimalInnovation};
  return forms;
}

std::vector<StateSpaced> build_P_columns(const Problem& problem, const GainLibrary& gains) {
  const auto& dims = problem.dims();
  const auto& g = problem.graph();
  const MatrixXd A = problem.A(), B2 = problem.B2(), C2 = problem.C2();
  std::vector<StateSpaced> cols;
  for (int i = 0; i < problem.size(); ++i) {
    const IndexSet desc = g.descendants(i);
    const auto& gi = gains.agents[static_cast<std::size_t>(i)];
    // i is the smallest member of its descendant set, so it sits first.
    const BlockPartition local = partition_of(dims.n, desc);
    const MatrixXd L_embedded = selector(local, {0}) * gi.L;
    const MatrixXd Ai = block_submatrix(A, dims.n, desc, dims.n, desc) +
                        block_submatrix(B2, dims.n, desc, dims.m, desc) * gi.F +
                        L_embedded * block_submatrix(C2, dims.p, {i}, dims.n, desc);
    cols.emplace_back(Ai, -L_embedded, selector(dims.m, desc) * gi.F,
                      MatrixXd::Zero(dims.m.total(), dims.p.size(i)));
  }
  return cols;
}

StateSpaced build_P(const Problem& problem, const GainLibrary& gains) {
  const auto cols = build_P_columns(problem, gains);
  StateSpaced stacked = block_diagonal(cols);
  // Columns share the output u: sum the stacked output rows.
  const Index m = problem.dims().m.total();
  MatrixXd C = MatrixXd::Zero(m, stacked.states());
  Index x = 0;
  for (const auto& c : cols) {
    C.middleCols(x, c.states()) = c.C;
    x += c.states();
  }
  return {stacked.A, stacked.B, C, MatrixXd::Zero(m, stacked.inputs())};
}

ControllerRealization build_K_lemma(const Problem& problem, const GainLibrary& gains) {
  const auto& dims = problem.dims();
  const auto cols = build_P_columns(problem, gains);
  const StateSpaced P = build_P(problem, gains);
  const StateSpaced G = problem.plant().g();
  const StateSpaced GP = series(G, P);

  // diag(GP): G is block diagonal and column i of P owns its own states, so
  // block (i, i) of GP is G_ii times the i-th output block of column i.
  std::vector<StateSpaced> diag_parts;
  for (int i = 0; i < problem.size(); ++i) {
    const auto& a = problem.agent(i);
    const StateSpaced Gi(a.A, a.B2, a.C2, MatrixXd::Zero(a.C2.rows(), a.B2.cols()));
    std::vector<Index> all_inputs(static_cast<std::size_t>(dims.p.size(i)));
    for (Index k = 0; k < dims.p.size(i); ++k) all_inputs[static_cast<std::size_t>(k)] = k;
    const StateSpaced Pii = select_io(cols[static_cast<std::size_t>(i)], dims.m.positions({i}), all_inputs);
    diag_parts.push_back(series(Gi, Pii));
  }
  const StateSpaced diagGP = block_diagonal(diag_parts);

  const Index p = dims.p.total();
  const StateSpaced M =
      parallel(parallel(StateSpaced::gain(MatrixXd::Identity(p, p)), GP), scaled(diagGP, -1.0));
  const StateSpaced K = series(P, inverse(M));

  ControllerRealization out{K, ControllerForm::Lemma, {}};
  Index offset = 0;
  const auto push = [&](const std::string& role, int copy, Index size) {
    out.blocks.push_back({role, copy, -1, offset, size});
    offset += size;
  };
  for (int i = 0; i < problem.size(); ++i) push("GP.P", i, cols[static_cast<std::size_t>(i)].states());
  push("GP.G", -1, G.states());
  for (int i = 0; i < problem.size(); ++i) push("diagGP", i, diag_parts[static_cast<std::size_t>(i)].states());
  for (int i = 0; i < problem.size(); ++i) push("P", i, cols[static_cast<std::size_t>(i)].states());
  return out;
}

ControllerRealization build_K_state(const Problem& problem, const GainLibrary& gains) {
  return {lifted_state(build_barred(problem, gains)), ControllerForm::State, lifted_blocks(problem)};
}

ControllerRealization build_K_innovation(const Problem& problem, const GainLibrary& gains) {
  return {lifted_innovation(build_barred(problem, gains)), ControllerForm::Innovation, lifted_blocks(problem)};
}

MatrixXd minimal_embedding(const Problem& problem) {
  std::vector<MatrixXd> parts;
  for (int i = 0; i < problem.size(); ++i) parts.push_back(selector(problem.dims().n, problem.graph().descendants(i)));
  return block_diag_of(parts);
}

ControllerRealization build_K_minimal(const Problem& problem, const GainLibrary& gains, ControllerForm form) {
  const BarredSymbols s = build_barred(problem, gains);
  StateSpaced full;
  if (form == ControllerForm::MinimalState)
    full = lifted_state(s);
  else if (form == ControllerForm::MinimalInnovation)
    full = lifted_innovation(s);
  else
    throw InvalidArgument("build_K_minimal: form must be minimal-state or minimal-innovation");

  const MatrixXd E = minimal_embedding(problem);
  ControllerRealization out{{E.transpose() * full.A * E, E.transpose() * full.B, full.C * E, full.D}, form, {}};
  Index offset = 0;
  for (int i = 0; i < problem.size(); ++i)
    for (int j : problem.graph().descendants(i)) {
      out.blocks.push_back({"xi", i, j, offset, problem.dims().n.size(j)});
      offset += problem.dims().n.size(j);
    }
  return out;
}

ControllerRealization synthesize(const Problem& problem, const GainLibrary& gains, ControllerForm form) {
  switch (form) {
    case ControllerForm::Lemma: return build_K_lemma(problem, gains);
    case ControllerForm::State: return build_K_state(problem, gains);
    case ControllerForm::Innovation: return build_K_innovation(problem, gains);
    case ControllerForm::MinimalState:
    case ControllerForm::MinimalInnovation: return build_K_minimal(problem, gains, form);
  }
  throw InvalidArgument("synthesize: unknown form");
}

MatrixXd local_estimator_gain(const Problem& problem, const GainLibrary& gains) {
  const auto& dims = problem.dims();
  std::vector<MatrixXd> parts;
  for (int i = 0; i < problem.size(); ++i)
    parts.push_back(selector(dims.n, {i}) * gains.agents[static_cast<std::size_t>(i)].L *
                    selector(dims.p, {i}).transpose());
  return block_diag_of(parts);
}

StateSpaced build_P2(const Problem& problem, const GainLibrary& gains) {
  const BarredSymbols s = build_barred(problem, gains);
  const auto& dims = problem.dims();
  const Index p = dims.p.total();
  const int N = problem.size();

  // Block-diagonal part of 1_p^T viewed with agent rows and copy columns.
  MatrixXd diag_ones = MatrixXd::Zero(p, p * N);
  for (int k = 0; k < N; ++k) {
    const MatrixXd Ek = selector(dims.p, {k});
    diag_ones.middleCols(k * p, p) = Ek * Ek.transpose();
  }
  const MatrixXd L_x = s.S_n_inv * s.L * (s.S_p - s.ones_p * (s.ones_p.transpose() - diag_ones));
  const MatrixXd L_tilde = local_estimator_gain(problem, gains);
  return {s.A + s.B * s.F + L_x * s.C, -L_tilde * s.ones_p, s.ones_m.transpose() * s.F,
          MatrixXd::Zero(dims.m.total(), p)};
}

StateSpaced centralized_lqg(const Problem& problem, const Tolerances& tol, const AreOptions& opts) {
  const MatrixXd A = problem.A(), B1 = problem.B1(), B2 = problem.B2(), C2 = problem.C2(), D21 = problem.D21();
  const RiccatiSolution ctrl = annotated_are(A, B2, problem.C1(), problem.D12(), tol, opts, "centralized control ARE");
  const RiccatiSolution est =
      annotated_are(A.transpose(), C2.transpose(), B1.transpose(), D21.transpose(), tol, opts,
                    "centralized estimation ARE");
  const MatrixXd F = ctrl.F, L = est.F.transpose();
  return {A + B2 * F + L * C2, -L, F, MatrixXd::Zero(F.rows(), L.cols())};
}

}  // namespace dagctrl
