#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dagctrl/synthesis.hpp"

namespace dagctrl {

/// Everything agent i stores to run its part of the controller. The local
/// state xi_i estimates the states of the descendants of i, with agent i's own
/// block first.
struct AgentController {
  int id = 0;
  IndexSet descendants, ancestors, strict_ancestors, strict_descendants;
  Index n_own = 0, m_own = 0, p_own = 0;

  Eigen::MatrixXd A;          // A restricted to the descendants
  Eigen::MatrixXd B2;         // B2 restricted to the descendants
  Eigen::MatrixXd injection;  // L^i placed at the own block, n_desc x p_i
  Eigen::MatrixXd C2;         // C2_ii
  Eigen::MatrixXd F;          // F^i

  /// Row i of S^{-1} over the ancestors, aligned with `ancestors`.
  std::vector<int> s_inv;
  /// E_{n_desc(i)}^T E_{n_desc(k)} for each ancestor k.
  std::vector<Eigen::MatrixXd> state_maps;
  /// E_{m_desc(i)}^T E_{m_desc(k)} for each strict ancestor k.
  std::vector<Eigen::MatrixXd> input_maps;

  Index local_states() const { return A.rows(); }
  Index local_inputs() const { return B2.cols(); }
  /// Numbers sent to each strict descendant per exchange.
  Index message_size() const { return local_states() + local_inputs(); }
};

/// What agent `sender` posts to its strict descendants.
struct Message {
  int sender = -1;
  Eigen::VectorXd xi;
  Eigen::VectorXd nu_tilde;
};

/// Payloads indexed by agent id; empty where nothing was received.
using Payloads = std::vector<std::optional<Eigen::VectorXd>>;

std::vector<AgentController> derive_agent_controllers(const Problem& problem, const GainLibrary& gains);

/// nu~_i = F^i sum_k S^{-1}(i, k) E^T E xi_k over the ancestors k, own state
/// included. Throws MissingAncestorError if an ancestor's state is absent.
Eigen::VectorXd compute_partial_input(const AgentController& c, const Payloads& states);

struct AssembledInput {
  Eigen::VectorXd nu;
  Eigen::VectorXd u;
};

/// nu_i = nu~_i + E^T sum_k E nu~_k over the strict ancestors k; u_i is the
/// own block of nu_i. Throws MissingAncestorError.
AssembledInput assemble_input(const AgentController& c, const Eigen::VectorXd& own_nu_tilde,
                              const Payloads& partial_inputs);

struct NetworkEval {
  Eigen::VectorXd dx;
  std::vector<Eigen::VectorXd> dxi;
  Eigen::VectorXd u, y, z;
  std::vector<Message> messages;  // in posting order
};

/// One synchronous exchange: y from the plant, a topological sweep of the
/// agents posting (xi, nu~) to their strict descendants, then all derivatives.
/// `y_offset` (optional, length p) is added to the measurements.
NetworkEval network_rhs(const Problem& problem, const std::vector<AgentController>& controllers,
                        const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& xi, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& y_offset = Eigen::VectorXd());

enum class SimMode { Network, Monolithic };

struct SimOptions {
  SimMode mode = SimMode::Network;
  ControllerForm form = ControllerForm::MinimalState;  // monolithic only
  double T = 20.0;
  double dt = 1e-3;
  Eigen::VectorXd x0;  // plant initial state; empty means zero
  /// Deterministic disturbance w(t); unset means w = 0.
  std::function<Eigen::VectorXd(double)> disturbance;
  /// When set, w is white noise and Euler-Maruyama replaces RK4.
  std::optional<std::uint64_t> noise_seed;
  /// Unit impulse on this disturbance channel at t = 0, applied as an
  /// initial condition of plant and controller.
  std::optional<Index> impulse_channel;
  /// Additive perturbation of the measurement path y(t).
  std::function<Eigen::VectorXd(double)> measurement_offset;
  int record_every = 1;
  double divergence_bound = 1e9;
};

struct SimTrace {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x, xi, u, y, z;
  /// Where each agent's local state sits inside xi (network mode), or the
  /// controller realization's blocks (monolithic mode).
  std::vector<StateBlock> xi_blocks;
  /// (1/T) * integral of |z|^2.
  double cost = 0.0;
  std::size_t steps = 0;
};

/// Fixed-step simulation of the plant in feedback with either the agent
/// network or a monolithic controller realization. Throws DivergenceError
/// when a state norm exceeds the bound, InvalidArgument on bad options.
SimTrace simulate(const Problem& problem, const GainLibrary& gains, const SimOptions& opts);

/// Largest absolute entrywise difference of two equally long series.
double max_abs_deviation(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

}  // namespace dagctrl
