#include "dagctrl/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "dagctrl/errors.hpp"
#include "dagctrl/lti.hpp"

namespace dagctrl {

using Complex = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

double min_singular_value(const MatrixXcd& M) {
  // Rank-deficient by shape when there are more columns than rows.
  if (M.rows() < M.cols()) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  return svd.singularValues().minCoeff();
}

double min_eigenvalue(const MatrixXd& S) {
  if (S.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Givens rotation with LAPACK zlartg conventions:
// [c s; -conj(s) c] [f; g] = [r; 0], c real.
void make_rotation(Complex f, Complex g, double& c, Complex& s) {
  if (g == Complex(0.0)) {
    c = 1.0;
    s = 0.0;
  } else if (f == Complex(0.0)) {
    c = 0.0;
    s = std::conj(g) / std::abs(g);
  } else {
    const double af = std::abs(f), d = std::hypot(af, std::abs(g));
    c = af / d;
    s = (f / af) * std::conj(g) / d;
  }
}

// Swaps the adjacent diagonal entries k, k+1 of the upper triangular T and
// updates U so that U T U^* is preserved.
void swap_adjacent(MatrixXcd& T, MatrixXcd& U, Index k) {
  const Index n = T.rows();
  const Complex t11 = T(k, k), t22 = T(k + 1, k + 1);
  double c;
  Complex s;
  make_rotation(T(k, k + 1), t22 - t11, c, s);
  for (Index col = k + 2; col < n; ++col) {
    const Complex x = T(k, col), y = T(k + 1, col);
    T(k, col) = c * x + s * y;
    T(k + 1, col) = c * y - std::conj(s) * x;
  }
  for (Index row = 0; row < k; ++row) {
    const Complex x = T(row, k), y = T(row, k + 1);
    T(row, k) = c * x + std::conj(s) * y;
    T(row, k + 1) = c * y - s * x;
  }
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  for (Index row = 0; row < n; ++row) {
    const Complex x = U(row, k), y = U(row, k + 1);
    U(row, k) = c * x + std::conj(s) * y;
    U(row, k + 1) = c * y - s * x;
  }
}

}  // namespace

std::string RiccatiAssumptions::summary() const {
  std::ostringstream os;
  for (const CheckItem* item : {&r1, &r2, &r3})
    os << item->name << ": " << (item->pass ? "pass" : "FAIL") << " (" << item->detail << ")\n";
  return os.str();
}

OrderedSchur ordered_schur(const MatrixXd& H) {
  Eigen::ComplexSchur<MatrixXd> schur(H);
  if (schur.info() != Eigen::Success) throw NumericalError("ordered_schur: Schur iteration did not converge");
  OrderedSchur out{schur.matrixT(), schur.matrixU(), 0};
  const Index n = H.rows();
  for (Index i = 0; i < n; ++i) {
    if (out.T(i, i).real() >= 0.0) continue;
    for (Index k = i; k > out.stable_count; --k) swap_adjacent(out.T, out.U, k - 1);
    ++out.stable_count;
  }
  return out;
}

RiccatiAssumptions check_riccati_assumptions(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C,
                                             const MatrixXd& D, const Tolerances& tol) {
  const Index n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != m)
    throw DimensionError("check_riccati_assumptions: nonconforming (A, B, C, D)");

  RiccatiAssumptions rep;

  // R1
  {
    const double scale = std::max(1.0, C.norm() * D.norm());
    const double cross = (C.transpose() * D).norm() / scale;
    const double definite = m == 0 ? 0.0 : min_eigenvalue(D.transpose() * D);
    rep.r1.name = "R1";
    rep.r1.tolerance = tol.r1_cross;
    rep.r1.metric = cross;
    rep.r1.pass = cross <= tol.r1_cross && definite > tol.r1_definite;
    std::ostringstream os;
    os << "||C^T D||/scale = " << cross << ", min eig(D^T D) = " << definite;
    rep.r1.detail = os.str();
  }

  // R2, PBH test on the eigenvalues that are not safely stable.
  {
    MatrixXd AB(n, n + m);
    AB << A, B;
    const double scale = std::max(1.0, AB.norm());
    rep.r2.name = "R2";
    rep.r2.tolerance = tol.pbh_sigma;
    rep.r2.metric = 1.0;
    rep.r2.pass = true;
    int tested = 0;
    if (n > 0) {
      Eigen::EigenSolver<MatrixXd> es(A, false);
      for (Index k = 0; k < n; ++k) {
        const Complex lambda = es.eigenvalues()(k);
        if (lambda.real() < -tol.pbh_eig_band) continue;
        ++tested;
        MatrixXcd M(n, n + m);
        M << A.cast<Complex>() - lambda * MatrixXcd::Identity(n, n), B.cast<Complex>();
        Eigen::JacobiSVD<MatrixXcd> svd(M);
        const double sigma = svd.singularValues()(n - 1) / scale;
        rep.r2.metric = std::min(rep.r2.metric, sigma);
        if (sigma <= tol.pbh_sigma) rep.r2.pass = false;
      }
    }
    std::ostringstream os;
    os << tested << " eigenvalue(s) tested, min sigma/scale = " << rep.r2.metric;
    rep.r2.detail = os.str();
  }

  // R3 via the Hamiltonian spectrum, cross-checked on a frequency grid.
  {
    rep.r3.name = "R3";
    rep.r3.tolerance = tol.imaginary_axis;
    double pencil = std::numeric_limits<double>::infinity();
    MatrixXd ABCD(n + C.rows(), n + m);
    ABCD << A, B, C, D;
    const double scale = std::max(1.0, ABCD.norm());
    for (int k = -1; k <= 200; ++k) {
      const double w = k < 0 ? 0.0 : std::pow(10.0, -4.0 + 8.0 * k / 200.0);
      MatrixXcd M(n + C.rows(), n + m);
      M << A.cast<Complex>() - Complex(0.0, w) * MatrixXcd::Identity(n, n), B.cast<Complex>(), C.cast<Complex>(),
          D.cast<Complex>();
      pencil = std::min(pencil, min_singular_value(M) / scale);
    }

    const double definite = m == 0 ? 0.0 : min_eigenvalue(D.transpose() * D);
    std::ostringstream os;
    if (definite > tol.r1_definite) {
      Eigen::LLT<MatrixXd> R(D.transpose() * D);
      MatrixXd H(2 * n, 2 * n);
      H << A, -B * R.solve(B.transpose()), -C.transpose() * C, -A.transpose();
      const double hscale = std::max(1.0, H.norm());
      double dist = std::numeric_limits<double>::infinity();
      if (n > 0) {
        Eigen::EigenSolver<MatrixXd> es(H, false);
        dist = es.eigenvalues().real().cwiseAbs().minCoeff() / hscale;
      }
      rep.r3.metric = std::isfinite(dist) ? dist : 1.0;
      rep.r3.pass = dist > tol.imaginary_axis;
      os << "min |Re eig(H)|/scale = " << rep.r3.metric << ", grid min sigma/scale = " << pencil;
      if (rep.r3.pass != (pencil > tol.imaginary_axis)) os << " (grid disagrees)";
    } else {
      rep.r3.metric = pencil;
      rep.r3.pass = pencil > tol.imaginary_axis;
      os << "D^T D singular; grid min sigma/scale = " << pencil;
    }
    rep.r3.detail = os.str();
  }
  return rep;
}

double riccati_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D,
                        const MatrixXd& X) {
  Eigen::LLT<MatrixXd> R(D.transpose() * D);
  const MatrixXd Q = C.transpose() * C;
  const MatrixXd AX = A.transpose() * X;
  const MatrixXd XGX = X * B * R.solve(B.transpose() * X);
  const double scale = std::max({1.0, Q.norm(), AX.norm(), XGX.norm()});
  return (AX + AX.transpose() + Q - XGX).norm() / scale;
}

RiccatiSolution solve_are(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D,
                          const Tolerances& tol, const AreOptions& opts) {
  const auto assumptions = check_riccati_assumptions(A, B, C, D, tol);
  if (!assumptions.ok()) throw AssumptionError("Riccati assumptions violated:\n" + assumptions.summary());

  const Index n = A.rows();
  const MatrixXd R = D.transpose() * D;
  Eigen::LLT<MatrixXd> Rllt(R);
  const MatrixXd G = B * Rllt.solve(B.transpose());
  const MatrixXd Q = C.transpose() * C;

  MatrixXd H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();
  const OrderedSchur schur = ordered_schur(H);
  const double hscale = std::max(1.0, H.norm());
  for (Index k = 0; k < 2 * n; ++k)
    if (std::abs(schur.T(k, k).real()) <= tol.imaginary_axis * hscale)
      throw ImaginaryAxisError("Hamiltonian eigenvalue " + std::to_string(schur.T(k, k).real()) + "+" +
                               std::to_string(schur.T(k, k).imag()) + "j is on the imaginary axis");
  if (schur.stable_count != n)
    throw NumericalError("Hamiltonian has " + std::to_string(schur.stable_count) + " stable eigenvalues, expected " +
                         std::to_string(n));

  const MatrixXcd U11 = schur.U.topLeftCorner(n, n);
  const MatrixXcd U21 = schur.U.bottomLeftCorner(n, n);
  Eigen::PartialPivLU<MatrixXcd> lu(U11.transpose());
  MatrixXd X = lu.solve(U21.transpose()).transpose().real();
  X = 0.5 * (X + X.transpose());

  double residual = riccati_residual(A, B, C, D, X);
  if (opts.newton_polish) {
    for (int step = 0; step < opts.newton_steps; ++step) {
      const MatrixXd F = -Rllt.solve(B.transpose() * X);
      const MatrixXd Acl = A + B * F;
      if (!is_hurwitz(Acl)) break;
      MatrixXd Xn = solve_lyapunov(Acl, Q + F.transpose() * R * F);
      Xn = 0.5 * (Xn + Xn.transpose());
      const double rn = riccati_residual(A, B, C, D, Xn);
      if (!(rn < residual)) break;
      X = std::move(Xn);
      residual = rn;
    }
  }

  RiccatiSolution sol;
  sol.X = X;
  sol.F = -Rllt.solve(B.transpose() * X);
  sol.residual = residual;
  spdlog::debug("solve_are: n={} residual={:.3e}", n, residual);

  if (residual > tol.are_residual)
    throw NumericalError("solve_are: residual " + std::to_string(residual) + " exceeds tolerance");
  if (!is_hurwitz(A + B * sol.F)) throw NumericalError("solve_are: A + B F is not Hurwitz");
  const double xscale = std::max(1.0, X.norm());
  const double lam = min_eigenvalue(X);
  if (lam < -tol.psd * xscale) throw NumericalError("solve_are: X is not positive semidefinite");
  sol.strictly_positive = lam > tol.psd * xscale;
  return sol;
}

}  // namespace dagctrl
