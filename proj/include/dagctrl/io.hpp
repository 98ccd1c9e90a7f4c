#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagctrl/config.hpp"
#include "dagctrl/runtime.hpp"
#include "dagctrl/synthesis.hpp"
#include "dagctrl/verify.hpp"

namespace dagctrl {

using json = nlohmann::json;

/// {"rows": r, "cols": c, "data": [row-major]}.
json matrix_to_json(const Eigen::MatrixXd& M);
/// Accepts the tagged form above, a nested array of rows, or a bare number.
/// Throws ParseError.
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what = "matrix");

/// A problem document together with its options block.
struct ProblemFile {
  Problem problem;
  Tolerances tol;
  GridOptions grid;
  std::optional<std::uint64_t> seed;
  json source;  // the document as read
};

/// Agent ids in the file are 1-based; edges [i, j] mean i's information
/// reaches j. Throws ParseError for malformed documents; dimension and graph
/// errors propagate with their own types.
ProblemFile parse_problem(const json& doc);
ProblemFile load_problem(const std::string& path);
json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Document for `problem`, agents in relabeled order with 1-based ids.
json problem_to_json(const Problem& problem);

json controller_to_json(const ControllerRealization& K, const Problem& problem, const GainLibrary& gains,
                        const json& problem_source, std::optional<double> closed_loop_cost = std::nullopt);

struct ControllerFile {
  ControllerForm form = ControllerForm::MinimalState;
  StateSpaced ss;
  std::vector<AgentGains> gains;  // relabeled order
  json problem_source;
};

ControllerFile parse_controller(const json& doc);

/// Recomputes gains and the realization from the embedded problem and
/// compares them with the stored ones; also checks the stored K directly.
std::vector<CheckReport> check_controller_file(const ControllerFile& file, const Problem& problem,
                                               const Tolerances& tol, const GridOptions& grid);

json report_to_json(const CheckReport& r);
json suite_to_json(const std::vector<CheckReport>& reports);
json validation_to_json(const ValidationReport& rep);

/// One headered row per recorded sample.
std::string trace_to_csv(const SimTrace& trace);

}  // namespace dagctrl
