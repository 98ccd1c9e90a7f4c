#pragma once

#include <Eigen/Dense>

#include <string>

#include "dagctrl/config.hpp"

namespace dagctrl {

/// One pass/fail line of a diagnostic report.
struct CheckItem {
  std::string name;
  bool pass = false;
  double metric = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Outcome of testing the Riccati assumptions on (A, B, C, D):
///   R1  C^T D = 0 and D^T D > 0
///   R2  (A, B) stabilizable
///   R3  [A - jwI, B; C, D] full column rank for every real w
struct RiccatiAssumptions {
  CheckItem r1, r2, r3;

  bool ok() const { return r1.pass && r2.pass && r3.pass; }
  std::string summary() const;
};

RiccatiAssumptions check_riccati_assumptions(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                             const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                             const Tolerances& tol = {});

/// Stabilizing solution (X, F) of
///   A^T X + X A + C^T C - X B (D^T D)^{-1} B^T X = 0,  F = -(D^T D)^{-1} B^T X.
struct RiccatiSolution {
  Eigen::MatrixXd X;
  Eigen::MatrixXd F;
  /// ||residual||_F / scale, see riccati_residual.
  double residual = 0.0;
  /// False when X is only semidefinite (allowed, but flagged).
  bool strictly_positive = true;
};

/// Relative residual of the Riccati equation at X.
double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                        const Eigen::MatrixXd& D, const Eigen::MatrixXd& X);

/// ric(A, B, C, D). Solved from the stable invariant subspace of the
/// Hamiltonian [A, -B R^{-1} B^T; -C^T C, -A^T], optionally refined by Newton
/// (Kleinman) steps.
///
/// Throws AssumptionError when R1-R3 fail, ImaginaryAxisError when the
/// Hamiltonian has eigenvalues on the imaginary axis, NumericalError when the
/// computed X is not symmetric PSD and stabilizing within tolerance.
RiccatiSolution solve_are(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                          const Eigen::MatrixXd& D, const Tolerances& tol = {}, const AreOptions& opts = {});

/// Complex Schur form H = U T U^* reordered so that eigenvalues with negative
/// real part lead the diagonal. Exposed for testing.
struct OrderedSchur {
  Eigen::MatrixXcd T, U;
  Eigen::Index stable_count = 0;
};

OrderedSchur ordered_schur(const Eigen::MatrixXd& H);

}  // namespace dagctrl
