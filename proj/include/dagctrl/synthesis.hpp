#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "dagctrl/config.hpp"
#include "dagctrl/graph.hpp"
#include "dagctrl/lti.hpp"
#include "dagctrl/riccati.hpp"
#include "dagctrl/state_space.hpp"

namespace dagctrl {

/// Local dynamics of one agent:
///   x_i' = A x_i + B1 w_i + B2 u_i,  y_i = C2 x_i + D21 w_i.
struct AgentModel {
  Eigen::MatrixXd A, B1, B2, C2, D21;
};

/// Dynamically decoupled agents on an information DAG with a shared quadratic
/// cost z = C1 x + D12 u. Agents are stored in the graph's topological order.
class Problem {
 public:
  /// Agents and cost columns must already be in the graph's relabeled order.
  Problem(InfoGraph graph, std::vector<AgentModel> agents, Eigen::MatrixXd C1, Eigen::MatrixXd D12);

  /// Closes and relabels the graph, then permutes agents and the column
  /// blocks of C1 and D12 to match. Edges are 0-based (from, to) pairs in
  /// the caller's labeling; agents are listed in that labeling too.
  static Problem from_original(int num_nodes, const std::vector<std::pair<int, int>>& edges,
                               const std::vector<AgentModel>& agents, const Eigen::MatrixXd& C1,
                               const Eigen::MatrixXd& D12);

  int size() const { return graph_.size(); }
  const InfoGraph& graph() const { return graph_; }
  const BlockDims& dims() const { return dims_; }
  const std::vector<AgentModel>& agents() const { return agents_; }
  const AgentModel& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  const Eigen::MatrixXd& C1() const { return C1_; }
  const Eigen::MatrixXd& D12() const { return D12_; }

  Eigen::MatrixXd A() const;
  Eigen::MatrixXd B1() const;
  Eigen::MatrixXd B2() const;
  Eigen::MatrixXd C2() const;
  Eigen::MatrixXd D21() const;
  FourBlockPlant plant() const;

  /// Sum over agents of the state dimension of their descendant sets.
  Index descendant_state_total() const;

 private:
  InfoGraph graph_;
  BlockDims dims_;
  std::vector<AgentModel> agents_;
  Eigen::MatrixXd C1_, D12_;
};

struct ValidationReport {
  std::vector<CheckItem> items;

  bool ok() const;
  std::string summary() const;
};

/// Checks nominal stability of every agent and the Riccati assumptions on the
/// global control tuple and on each agent's estimation tuple.
ValidationReport validate(const Problem& problem, const Tolerances& tol = {});

struct AgentGains {
  Eigen::MatrixXd X, F;  // control, on the agent's descendant subsystem
  Eigen::MatrixXd Y, L;  // estimation, local
  double control_residual = 0.0;
  double estimation_residual = 0.0;
};

struct GainLibrary {
  std::vector<AgentGains> agents;
  /// F^i zero-padded to m x n on the descendant blocks.
  std::vector<Eigen::MatrixXd> F_padded;
  /// blkdiag of L^j over the ancestors j, zero-padded to n x p.
  std::vector<Eigen::MatrixXd> L_padded;
};

GainLibrary compute_gains(const Problem& problem, const Tolerances& tol = {}, const AreOptions& opts = {});

/// Kronecker-lifted symbols of the global realizations.
struct BarredSymbols {
  Eigen::MatrixXd A, B, C;           // I_N (x) A, B2, C2
  Eigen::MatrixXd S_m, S_n, S_p;     // S (x) I
  Eigen::MatrixXd S_n_inv;           // S^{-1} (x) I_n
  Eigen::MatrixXd ones_m, ones_p;    // 1_N (x) I
  Eigen::MatrixXd F, L;              // blkdiag of the padded gains
};

BarredSymbols build_barred(const Problem& problem, const GainLibrary& gains);

enum class ControllerForm { Lemma, State, Innovation, MinimalState, MinimalInnovation };

std::string to_string(ControllerForm form);
/// Throws InvalidArgument on an unknown name.
ControllerForm parse_controller_form(const std::string& name);
const std::vector<ControllerForm>& all_controller_forms();

/// Where a contiguous range of controller states comes from. For the lifted
/// forms `copy` is the agent holding the estimate and `agent` the agent whose
/// state is estimated; other forms use `role` and set copy/agent to -1 where
/// they do not apply.
struct StateBlock {
  std::string role;
  int copy = -1;
  int agent = -1;
  Index offset = 0;
  Index size = 0;
};

struct ControllerRealization {
  StateSpaced ss;
  ControllerForm form = ControllerForm::State;
  std::vector<StateBlock> blocks;
};

/// Column realizations P_{desc(i), i}, each mapping y_i into the full u.
std::vector<StateSpaced> build_P_columns(const Problem& problem, const GainLibrary& gains);
/// All columns side by side, one state block per column.
StateSpaced build_P(const Problem& problem, const GainLibrary& gains);

/// K = P (I + GP - diag(GP))^{-1}, assembled from realization algebra and not
/// reduced.
ControllerRealization build_K_lemma(const Problem& problem, const GainLibrary& gains);
/// Lifted realization in state coordinates, nN states.
ControllerRealization build_K_state(const Problem& problem, const GainLibrary& gains);
/// Lifted realization in innovation coordinates, nN states.
ControllerRealization build_K_innovation(const Problem& problem, const GainLibrary& gains);
/// Compressed realization with one block per (agent, descendant) pair.
/// `form` must be MinimalState or MinimalInnovation.
ControllerRealization build_K_minimal(const Problem& problem, const GainLibrary& gains, ControllerForm form);

ControllerRealization synthesize(const Problem& problem, const GainLibrary& gains, ControllerForm form);

/// blkdiag over agents of the descendant selectors, nN x sum_i n_desc(i).
Eigen::MatrixXd minimal_embedding(const Problem& problem);

/// blkdiag_i(E_{n_i} L^i E_{p_i}^T), nN x pN.
Eigen::MatrixXd local_estimator_gain(const Problem& problem, const GainLibrary& gains);

/// The modified realization P2 with L_x replacing the local injection; its
/// transfer function equals that of P.
StateSpaced build_P2(const Problem& problem, const GainLibrary& gains);

/// Classical two-Riccati LQG controller with access to all measurements.
StateSpaced centralized_lqg(const Problem& problem, const Tolerances& tol = {}, const AreOptions& opts = {});

}  // namespace dagctrl
