#include "dagctrl/lti.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace dagctrl {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

double spectral_abscissa(const MatrixXd& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const MatrixXd& A, double margin) {
  if (A.rows() != A.cols()) throw DimensionError("is_hurwitz: matrix is not square");
  return spectral_abscissa(A) < -margin;
}

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols())
    throw DimensionError("solve_lyapunov: A and Q must be square and conforming");
  const Index n = A.rows();
  if (n == 0) return MatrixXd(0, 0);
  if (!is_hurwitz(A)) throw NotHurwitzError("solve_lyapunov: A is not Hurwitz");

  // A = U T U^*, so A^T = U T^* U^* and the equation becomes
  // T^* P~ + P~ T = -U^* Q U with P = U P~ U^*.
  Eigen::ComplexSchur<MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("solve_lyapunov: Schur iteration did not converge");
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd& U = schur.matrixU();
  const MatrixXcd Qt = U.adjoint() * Q.cast<std::complex<double>>() * U;
  const MatrixXcd Th = T.adjoint();

  MatrixXcd P(n, n);
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = -Qt.col(j);
    if (j > 0) rhs.noalias() -= P.leftCols(j) * T.col(j).head(j);
    MatrixXcd L = Th;
    L.diagonal().array() += T(j, j);
    P.col(j) = L.triangularView<Eigen::Lower>().solve(rhs);
  }
  MatrixXd X = (U * P * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

double lyapunov_residual(const MatrixXd& A, const MatrixXd& P, const MatrixXd& Q) {
  return (A.transpose() * P + P * A + Q).norm();
}

MatrixXd controllability_gramian(const StateSpaced& sys) {
  return solve_lyapunov(sys.A.transpose(), sys.B * sys.B.transpose());
}

MatrixXd observability_gramian(const StateSpaced& sys) {
  return solve_lyapunov(sys.A, sys.C.transpose() * sys.C);
}

double h2_norm_sq(const StateSpaced& sys) {
  if (sys.D.size() > 0 && sys.D.cwiseAbs().maxCoeff() != 0.0)
    throw NonzeroFeedthroughError("h2_norm_sq: feedthrough must be zero");
  if (sys.states() == 0) return 0.0;
  if (!is_hurwitz(sys.A)) throw NotHurwitzError("h2_norm_sq: A is not Hurwitz");
  const MatrixXd Wo = observability_gramian(sys);
  return (sys.B.transpose() * Wo * sys.B).trace();
}

MatrixXd controllable_basis(const MatrixXd& A, const MatrixXd& B, double tol) {
  const Index n = A.rows();
  const double scale = std::max({1.0, A.norm(), B.norm()});
  MatrixXd basis(n, 0);
  MatrixXd V = B;
  while (basis.cols() < n && V.cols() > 0) {
    // Two passes of classical Gram-Schmidt against the current basis.
    for (int pass = 0; pass < 2; ++pass) V -= basis * (basis.transpose() * V);
    Eigen::JacobiSVD<MatrixXd> svd(V, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Index k = 0;
    while (k < s.size() && s(k) > tol * scale) ++k;
    k = std::min(k, n - basis.cols());
    if (k == 0) break;
    MatrixXd next(n, basis.cols() + k);
    next << basis, svd.matrixU().leftCols(k);
    basis = std::move(next);
    V = A * basis.rightCols(k);
  }
  return basis;
}

StateSpaced remove_uncontrollable_unobservable(const StateSpaced& sys, double tol) {
  const MatrixXd Qc = controllable_basis(sys.A, sys.B, tol);
  const StateSpaced reach(Qc.transpose() * sys.A * Qc, Qc.transpose() * sys.B, sys.C * Qc, sys.D);
  const MatrixXd Qo = controllable_basis(reach.A.transpose(), reach.C.transpose(), tol);
  return {Qo.transpose() * reach.A * Qo, Qo.transpose() * reach.B, reach.C * Qo, reach.D};
}

void FourBlockPlant::check() const {
  const Index n = A.rows();
  if (A.cols() != n || B1.rows() != n || B2.rows() != n || C1.cols() != n || C2.cols() != n ||
      D12.rows() != C1.rows() || D12.cols() != B2.cols() || D21.rows() != C2.rows() || D21.cols() != B1.cols())
    throw DimensionError("FourBlockPlant: inconsistent dimensions");
}

StateSpaced FourBlockPlant::full() const {
  check();
  MatrixXd B(states(), disturbances() + controls());
  B << B1, B2;
  MatrixXd C(regulated() + measurements(), states());
  C << C1, C2;
  MatrixXd D = MatrixXd::Zero(C.rows(), B.cols());
  D.topRightCorner(regulated(), controls()) = D12;
  D.bottomLeftCorner(measurements(), disturbances()) = D21;
  return {A, std::move(B), std::move(C), std::move(D)};
}

StateSpaced FourBlockPlant::g() const {
  check();
  return {A, B2, C2, MatrixXd::Zero(measurements(), controls())};
}

StateSpaced connect_feedback(const FourBlockPlant& plant, const StateSpaced& K) {
  plant.check();
  if (K.inputs() != plant.measurements() || K.outputs() != plant.controls())
    throw DimensionError("connect_feedback: controller is " + std::to_string(K.outputs()) + "x" +
                         std::to_string(K.inputs()) + ", plant expects " + std::to_string(plant.controls()) +
                         "x" + std::to_string(plant.measurements()));
  if (K.D.size() > 0 && K.D.cwiseAbs().maxCoeff() != 0.0)
    throw WellPosednessError("connect_feedback: controller must be strictly proper");
  const Index n = plant.states(), nk = K.states();
  MatrixXd A(n + nk, n + nk);
  A << plant.A, plant.B2 * K.C, K.B * plant.C2, K.A;
  MatrixXd B(n + nk, plant.disturbances());
  B << plant.B1, K.B * plant.D21;
  MatrixXd C(plant.regulated(), n + nk);
  C << plant.C1, plant.D12 * K.C;
  return {std::move(A), std::move(B), std::move(C), MatrixXd::Zero(plant.regulated(), plant.disturbances())};
}

}  // namespace dagctrl
