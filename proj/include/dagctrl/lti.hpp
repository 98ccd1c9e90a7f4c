#pragma once

#include <Eigen/Dense>

#include "dagctrl/config.hpp"
#include "dagctrl/state_space.hpp"

namespace dagctrl {

/// True iff every eigenvalue of A has real part < -margin. An empty matrix is
/// Hurwitz.
bool is_hurwitz(const Eigen::MatrixXd& A, double margin = 0.0);

/// Largest real part over eig(A); -inf for an empty matrix.
double spectral_abscissa(const Eigen::MatrixXd& A);

/// Solves A^T P + P A + Q = 0 (Bartels-Stewart on the complex Schur form).
/// Throws NotHurwitzError unless A is Hurwitz.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// ||A^T P + P A + Q||_F.
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);

/// A Wc + Wc A^T + B B^T = 0.
Eigen::MatrixXd controllability_gramian(const StateSpaced& sys);
/// A^T Wo + Wo A + C^T C = 0.
Eigen::MatrixXd observability_gramian(const StateSpaced& sys);

/// Squared H2 norm trace(B^T Wo B). Requires D = 0 and A Hurwitz.
double h2_norm_sq(const StateSpaced& sys);

/// Orthonormal basis of the controllable subspace of (A, B), computed by
/// orthogonal block-Krylov (staircase) iteration. Directions whose residual
/// norm falls below tol * max(1, ||B||, ||A||) are treated as zero.
Eigen::MatrixXd controllable_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol);

/// Removes modes that are uncontrollable or unobservable. The transfer
/// function is unchanged; the result is a minimal realization up to tol.
StateSpaced remove_uncontrollable_unobservable(const StateSpaced& sys, double tol = 1e-8);

/// Open-loop generalized plant (w, u) -> (z, y) with D11 = 0 and D22 = 0.
struct FourBlockPlant {
  Eigen::MatrixXd A, B1, B2, C1, C2, D12, D21;

  Index states() const { return A.rows(); }
  Index disturbances() const { return B1.cols(); }
  Index controls() const { return B2.cols(); }
  Index regulated() const { return C1.rows(); }
  Index measurements() const { return C2.rows(); }

  void check() const;

  /// The full (w, u) -> (z, y) realization.
  StateSpaced full() const;
  /// u -> y, the map the controller closes around.
  StateSpaced g() const;
};

/// w -> z closed loop with u = K y. K must be strictly proper.
StateSpaced connect_feedback(const FourBlockPlant& plant, const StateSpaced& K);

}  // namespace dagctrl
