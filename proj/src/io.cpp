#include "dagctrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <sstream>
#include <utility>

#include "dagctrl/errors.hpp"
#include "dagctrl/lti.hpp"

namespace dagctrl {

using Eigen::MatrixXd;

namespace {

struct TolField {
  const char* key;
  double Tolerances::*member;
};

constexpr TolField kTolFields[] = {
    {"rank", &Tolerances::rank},
    {"hurwitz_margin", &Tolerances::hurwitz_margin},
    {"r1_cross", &Tolerances::r1_cross},
    {"r1_definite", &Tolerances::r1_definite},
    {"pbh_eig_band", &Tolerances::pbh_eig_band},
    {"pbh_sigma", &Tolerances::pbh_sigma},
    {"imaginary_axis", &Tolerances::imaginary_axis},
    {"are_residual", &Tolerances::are_residual},
    {"lyapunov_residual", &Tolerances::lyapunov_residual},
    {"psd", &Tolerances::psd},
    {"transfer_condition", &Tolerances::transfer_condition},
    {"equivalence_rtol", &Tolerances::equivalence_rtol},
    {"sparsity_atol", &Tolerances::sparsity_atol},
    {"appendix_rtol", &Tolerances::appendix_rtol},
    {"markov_rtol", &Tolerances::markov_rtol},
    {"trace_atol", &Tolerances::trace_atol},
};

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + " is missing \"" + key + "\"");
  return *it;
}

AgentModel parse_agent(const json& j, int label) {
  const std::string where = "agent " + std::to_string(label);
  AgentModel a;
  a.A = matrix_from_json(field(j, "A", where), where + " A");
  a.B1 = matrix_from_json(field(j, "B1", where), where + " B1");
  a.B2 = matrix_from_json(field(j, "B2", where), where + " B2");
  a.C2 = matrix_from_json(field(j, "C2", where), where + " C2");
  a.D21 = matrix_from_json(field(j, "D21", where), where + " D21");
  return a;
}

json agent_to_json(const AgentModel& a) {
  return {{"A", matrix_to_json(a.A)},
          {"B1", matrix_to_json(a.B1)},
          {"B2", matrix_to_json(a.B2)},
          {"C2", matrix_to_json(a.C2)},
          {"D21", matrix_to_json(a.D21)}};
}

CheckReport compare_matrices(const std::string& name, const MatrixXd& stored, const MatrixXd& fresh, double rtol) {
  CheckReport rep;
  rep.name = name;
  rep.tolerance = rtol;
  if (stored.rows() != fresh.rows() || stored.cols() != fresh.cols()) {
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back("shape " + std::to_string(stored.rows()) + "x" + std::to_string(stored.cols()) +
                            ", expected " + std::to_string(fresh.rows()) + "x" + std::to_string(fresh.cols()));
    return rep;
  }
  rep.metric = stored.size() == 0 ? 0.0 : (stored - fresh).norm() / std::max(1.0, fresh.norm());
  rep.pass = rep.metric <= rtol;
  if (!rep.pass) {
    Index r = 0, c = 0;
    (stored - fresh).cwiseAbs().maxCoeff(&r, &c);
    std::ostringstream os;
    os << "entry (" << r + 1 << "," << c + 1 << ") stored " << stored(r, c) << ", recomputed " << fresh(r, c);
    rep.witnesses.push_back(os.str());
  }
  return rep;
}

}  // namespace

json matrix_to_json(const MatrixXd& M) {
  json data = json::array();
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

MatrixXd matrix_from_json(const json& j, const std::string& what) {
  try {
    if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
    if (j.is_object()) {
      const auto rows = field(j, "rows", what).get<Index>(), cols = field(j, "cols", what).get<Index>();
      const json& data = field(j, "data", what);
      if (rows < 0 || cols < 0) throw ParseError(what + ": negative dimensions");
      if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols)
        throw ParseError(what + ": data must hold rows*cols = " + std::to_string(rows * cols) + " numbers");
      MatrixXd M(rows, cols);
      for (Index i = 0; i < rows; ++i)
        for (Index k = 0; k < cols; ++k) M(i, k) = data.at(static_cast<std::size_t>(i * cols + k)).get<double>();
      return M;
    }
    if (j.is_array()) {
      if (j.empty()) return MatrixXd(0, 0);
      const Index rows = static_cast<Index>(j.size());
      const Index cols = j.front().is_array() ? static_cast<Index>(j.front().size()) : 1;
      MatrixXd M(rows, cols);
      for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (row.is_number() && cols == 1) {
          M(i, 0) = row.get<double>();
          continue;
        }
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ParseError(what + ": ragged rows");
        for (Index k = 0; k < cols; ++k) M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
      }
      return M;
    }
  } catch (const json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
  throw ParseError(what + ": expected a number, an array of rows or {rows, cols, data}");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

ProblemFile parse_problem(const json& doc) {
  try {
    const json& graph = field(doc, "graph", "problem");
    const int N = field(graph, "N", "graph").get<int>();
    if (N <= 0) throw ParseError("graph.N must be positive");
    std::vector<std::pair<int, int>> edges;
    if (graph.contains("edges")) {
      for (const json& e : graph.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be a pair [i, j]");
        const int from = e[0].get<int>(), to = e[1].get<int>();
        if (from < 1 || from > N || to < 1 || to > N)
          throw IndexError("edge [" + std::to_string(from) + "," + std::to_string(to) + "] outside 1.." +
                           std::to_string(N));
        edges.emplace_back(from - 1, to - 1);
      }
    }
    const json& agents_doc = field(doc, "agents", "problem");
    if (!agents_doc.is_array() || static_cast<int>(agents_doc.size()) != N)
      throw ParseError("agents must be an array of N = " + std::to_string(N) + " entries");
    std::vector<AgentModel> agents;
    for (int i = 0; i < N; ++i) agents.push_back(parse_agent(agents_doc[static_cast<std::size_t>(i)], i + 1));
    const json& cost = field(doc, "cost", "problem");
    const MatrixXd C1 = matrix_from_json(field(cost, "C1", "cost"), "C1");
    const MatrixXd D12 = matrix_from_json(field(cost, "D12", "cost"), "D12");

    ProblemFile file{Problem::from_original(N, edges, agents, C1, D12), {}, {}, std::nullopt, doc};
    if (doc.contains("options")) {
      const json& opts = doc.at("options");
      if (opts.contains("tolerances"))
        for (const auto& [key, value] : opts.at("tolerances").items()) {
          bool known = false;
          for (const auto& f : kTolFields)
            if (key == f.key) {
              file.tol.*(f.member) = value.get<double>();
              known = true;
            }
          if (!known) throw ParseError("unknown tolerance \"" + key + "\"");
        }
      if (opts.contains("grid")) {
        const json& g = opts.at("grid");
        file.grid.log_points = g.value("log_points", file.grid.log_points);
        file.grid.log_min = g.value("log_min", file.grid.log_min);
        file.grid.log_max = g.value("log_max", file.grid.log_max);
        file.grid.random_points = g.value("random_points", file.grid.random_points);
        file.grid.random_min = g.value("random_min", file.grid.random_min);
        file.grid.random_max = g.value("random_max", file.grid.random_max);
        file.grid.seed = g.value("seed", file.grid.seed);
      }
      if (opts.contains("seed")) file.seed = opts.at("seed").get<std::uint64_t>();
    }
    return file;
  } catch (const json::exception& e) {
    throw ParseError(std::string("problem document: ") + e.what());
  }
}

ProblemFile load_problem(const std::string& path) { return parse_problem(read_json(path)); }

json problem_to_json(const Problem& problem) {
  json edges = json::array();
  for (const auto& [from, to] : problem.graph().closed_edges()) edges.push_back({from + 1, to + 1});
  json agents = json::array();
  for (const auto& a : problem.agents()) agents.push_back(agent_to_json(a));
  return {{"graph", {{"N", problem.size()}, {"edges", std::move(edges)}}},
          {"agents", std::move(agents)},
          {"cost", {{"C1", matrix_to_json(problem.C1())}, {"D12", matrix_to_json(problem.D12())}}}};
}

json controller_to_json(const ControllerRealization& K, const Problem& problem, const GainLibrary& gains,
                        const json& problem_source, std::optional<double> closed_loop_cost) {
  const auto original = problem.graph().original_label();
  const auto label = [&](int id) { return id < 0 ? json(nullptr) : json(original[static_cast<std::size_t>(id)] + 1); };

  json order = json::array();
  for (int o : original) order.push_back(o + 1);
  json blocks = json::array();
  for (const auto& b : K.blocks)
    blocks.push_back({{"role", b.role}, {"copy", label(b.copy)}, {"agent", label(b.agent)}, {"offset", b.offset},
                      {"size", b.size}});
  json gain_doc = json::array();
  for (int i = 0; i < problem.size(); ++i) {
    const auto& g = gains.agents[static_cast<std::size_t>(i)];
    gain_doc.push_back({{"agent", label(i)},
                        {"X", matrix_to_json(g.X)},
                        {"F", matrix_to_json(g.F)},
                        {"Y", matrix_to_json(g.Y)},
                        {"L", matrix_to_json(g.L)}});
  }
  json doc = {{"form", to_string(K.form)},
              {"states", K.ss.states()},
              {"agent_order", std::move(order)},
              {"A", matrix_to_json(K.ss.A)},
              {"B", matrix_to_json(K.ss.B)},
              {"C", matrix_to_json(K.ss.C)},
              {"D", matrix_to_json(K.ss.D)},
              {"blocks", std::move(blocks)},
              {"gains", std::move(gain_doc)},
              {"problem", problem_source}};
  if (closed_loop_cost) doc["closed_loop_cost"] = *closed_loop_cost;
  return doc;
}

ControllerFile parse_controller(const json& doc) {
  try {
    ControllerFile f;
    f.form = parse_controller_form(field(doc, "form", "controller").get<std::string>());
    f.ss = StateSpaced(matrix_from_json(field(doc, "A", "controller"), "A"),
                       matrix_from_json(field(doc, "B", "controller"), "B"),
                       matrix_from_json(field(doc, "C", "controller"), "C"),
                       matrix_from_json(field(doc, "D", "controller"), "D"));
    for (const json& g : field(doc, "gains", "controller")) {
      AgentGains a;
      a.X = matrix_from_json(field(g, "X", "gain"), "X");
      a.F = matrix_from_json(field(g, "F", "gain"), "F");
      a.Y = matrix_from_json(field(g, "Y", "gain"), "Y");
      a.L = matrix_from_json(field(g, "L", "gain"), "L");
      f.gains.push_back(std::move(a));
    }
    f.problem_source = field(doc, "problem", "controller");
    return f;
  } catch (const json::exception& e) {
    throw ParseError(std::string("controller document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

std::vector<CheckReport> check_controller_file(const ControllerFile& file, const Problem& problem,
                                               const Tolerances& tol, const GridOptions& grid) {
  std::vector<CheckReport> out;
  const GainLibrary gains = compute_gains(problem, tol);
  const double rtol = tol.equivalence_rtol;
  if (file.gains.size() != gains.agents.size()) {
    CheckReport rep;
    rep.name = "stored gains";
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back(std::to_string(file.gains.size()) + " stored gain sets for " +
                            std::to_string(gains.agents.size()) + " agents");
    out.push_back(std::move(rep));
  } else {
    const auto original = problem.graph().original_label();
    for (std::size_t i = 0; i < gains.agents.size(); ++i) {
      const std::string who = "stored gains agent " + std::to_string(original[i] + 1);
      out.push_back(compare_matrices(who + " X", file.gains[i].X, gains.agents[i].X, rtol));
      out.push_back(compare_matrices(who + " F", file.gains[i].F, gains.agents[i].F, rtol));
      out.push_back(compare_matrices(who + " Y", file.gains[i].Y, gains.agents[i].Y, rtol));
      out.push_back(compare_matrices(who + " L", file.gains[i].L, gains.agents[i].L, rtol));
    }
  }
  const ControllerRealization fresh = synthesize(problem, gains, file.form);
  const FrequencyGrid g = standard_grid(grid);
  out.push_back(check_equivalence(fresh.ss, file.ss, g, rtol, "stored controller transfer"));
  out.push_back(check_sparsity(file.ss, problem, g, tol.sparsity_atol, "stored controller sparsity"));
  try {
    out.push_back(check_stability_and_cost(problem, file.ss, tol, "stored controller stability and cost"));
  } catch (const Error& e) {
    CheckReport rep;
    rep.name = "stored controller stability and cost";
    rep.metric = std::numeric_limits<double>::infinity();
    rep.witnesses.push_back(e.what());
    out.push_back(std::move(rep));
  }
  std::sort(out.begin(), out.end(), [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
  return out;
}

json report_to_json(const CheckReport& r) {
  json values = json::object();
  for (const auto& [k, v] : r.values) values[k] = v;
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"name", r.name},           {"pass", r.pass},         {"advisory", r.advisory},
          {"metric", finite_or_null(r.metric)}, {"tolerance", r.tolerance}, {"witnesses", r.witnesses},
          {"notes", r.notes},         {"values", std::move(values)}};
}

json suite_to_json(const std::vector<CheckReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return {{"passed", suite_passed(reports)}, {"checks", std::move(arr)}};
}

json validation_to_json(const ValidationReport& rep) {
  json items = json::array();
  for (const auto& it : rep.items)
    items.push_back({{"name", it.name}, {"pass", it.pass}, {"metric", it.metric}, {"tolerance", it.tolerance},
                     {"detail", it.detail}});
  return {{"ok", rep.ok()}, {"items", std::move(items)}};
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto header = [&](const char* prefix, const std::vector<Eigen::VectorXd>& series) {
    const Index len = series.empty() ? 0 : series.front().size();
    for (Index k = 0; k < len; ++k) os << ',' << prefix << k + 1;
  };
  os << 't';
  header("x", trace.x);
  header("xi", trace.xi);
  header("u", trace.u);
  header("y", trace.y);
  header("z", trace.z);
  os << '\n';
  for (std::size_t r = 0; r < trace.t.size(); ++r) {
    os << trace.t[r];
    for (const auto* series : {&trace.x, &trace.xi, &trace.u, &trace.y, &trace.z})
      for (Index k = 0; k < (*series)[r].size(); ++k) os << ',' << (*series)[r](k);
    os << '\n';
  }
  return os.str();
}

}  // namespace dagctrl
