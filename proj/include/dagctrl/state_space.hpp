#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

#include "dagctrl/errors.hpp"
#include "dagctrl/graph.hpp"

namespace dagctrl {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Realization (A, B, C, D) of D + C (sI - A)^{-1} B.
template <typename Scalar = double>
struct StateSpace {
  using Matrix = MatrixX<Scalar>;

  Matrix A, B, C, D;

  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
    check();
  }

  /// Static gain, no states.
  static StateSpace gain(const Matrix& d) {
    return StateSpace(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
  }

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }

  void check() const {
    if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows() || D.rows() != C.rows() ||
        D.cols() != B.cols())
      throw DimensionError("inconsistent realization: A " + shape(A) + ", B " + shape(B) + ", C " + shape(C) +
                           ", D " + shape(D));
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
      throw NumericalError("realization has non-finite entries");
  }

 private:
  static std::string shape(const Matrix& M) { return std::to_string(M.rows()) + "x" + std::to_string(M.cols()); }
};

using StateSpaced = StateSpace<double>;

/// G2 * G1: the output of g1 feeds the input of g2.
template <typename Scalar>
StateSpace<Scalar> series(const StateSpace<Scalar>& g2, const StateSpace<Scalar>& g1) {
  if (g2.inputs() != g1.outputs())
    throw DimensionError("series: " + std::to_string(g1.outputs()) + " outputs into " +
                         std::to_string(g2.inputs()) + " inputs");
  const Index n1 = g1.states(), n2 = g2.states();
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = g1.A;
  A.bottomLeftCorner(n2, n1) = g2.B * g1.C;
  A.bottomRightCorner(n2, n2) = g2.A;
  MatrixX<Scalar> B(n1 + n2, g1.inputs());
  B << g1.B, g2.B * g1.D;
  MatrixX<Scalar> C(g2.outputs(), n1 + n2);
  C << g2.D * g1.C, g2.C;
  return {std::move(A), std::move(B), std::move(C), g2.D * g1.D};
}

/// G1 + G2 with shared input.
template <typename Scalar>
StateSpace<Scalar> parallel(const StateSpace<Scalar>& g1, const StateSpace<Scalar>& g2) {
  if (g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs())
    throw DimensionError("parallel: mismatched input/output dimensions");
  const Index n1 = g1.states(), n2 = g2.states();
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = g1.A;
  A.bottomRightCorner(n2, n2) = g2.A;
  MatrixX<Scalar> B(n1 + n2, g1.inputs());
  B << g1.B, g2.B;
  MatrixX<Scalar> C(g1.outputs(), n1 + n2);
  C << g1.C, g2.C;
  return {std::move(A), std::move(B), std::move(C), g1.D + g2.D};
}

template <typename Scalar>
StateSpace<Scalar> scaled(const StateSpace<Scalar>& g, Scalar k) {
  return {g.A, g.B, k * g.C, k * g.D};
}

/// blkdiag(G_1, ..., G_k): stacked inputs and outputs, no coupling.
template <typename Scalar>
StateSpace<Scalar> block_diagonal(const std::vector<StateSpace<Scalar>>& parts) {
  Index n = 0, m = 0, p = 0;
  for (const auto& g : parts) {
    n += g.states();
    m += g.inputs();
    p += g.outputs();
  }
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(n, n), B = MatrixX<Scalar>::Zero(n, m);
  MatrixX<Scalar> C = MatrixX<Scalar>::Zero(p, n), D = MatrixX<Scalar>::Zero(p, m);
  Index x = 0, u = 0, y = 0;
  for (const auto& g : parts) {
    A.block(x, x, g.states(), g.states()) = g.A;
    B.block(x, u, g.states(), g.inputs()) = g.B;
    C.block(y, x, g.outputs(), g.states()) = g.C;
    D.block(y, u, g.outputs(), g.inputs()) = g.D;
    x += g.states();
    u += g.inputs();
    y += g.outputs();
  }
  return {std::move(A), std::move(B), std::move(C), std::move(D)};
}

/// G^{-1} for a system with square invertible feedthrough.
template <typename Scalar>
StateSpace<Scalar> inverse(const StateSpace<Scalar>& g) {
  if (g.inputs() != g.outputs()) throw DimensionError("inverse: system is not square");
  Eigen::FullPivLU<MatrixX<Scalar>> lu(g.D);
  if (!lu.isInvertible()) throw WellPosednessError("inverse: feedthrough is singular");
  const MatrixX<Scalar> Dinv = lu.inverse();
  return {g.A - g.B * Dinv * g.C, g.B * Dinv, -Dinv * g.C, Dinv};
}

/// Keeps only the listed output and input positions.
template <typename Scalar>
StateSpace<Scalar> select_io(const StateSpace<Scalar>& g, const std::vector<Index>& outputs,
                             const std::vector<Index>& inputs) {
  return {g.A, g.B(Eigen::all, inputs), g.C(outputs, Eigen::all), g.D(outputs, inputs)};
}

/// Similarity transform x = T z.
template <typename Scalar>
StateSpace<Scalar> transformed(const StateSpace<Scalar>& g, const MatrixX<Scalar>& T) {
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(T);
  return {lu.solve(g.A * T), lu.solve(g.B), g.C * T, g.D};
}

/// D + C (sI - A)^{-1} B by a linear solve. Throws SingularError when the
/// reciprocal condition estimate of sI - A is below 1 / max_condition.
template <typename Scalar>
MatrixX<std::complex<double>> eval_transfer(const StateSpace<Scalar>& g, std::complex<double> s,
                                            double max_condition = 1e12) {
  using Complex = std::complex<double>;
  MatrixX<Complex> out = g.D.template cast<Complex>();
  if (g.states() == 0) return out;
  MatrixX<Complex> M = -g.A.template cast<Complex>();
  M.diagonal().array() += s;
  Eigen::PartialPivLU<MatrixX<Complex>> lu(M);
  if (!(lu.rcond() * max_condition >= 1.0))
    throw SingularError("eval_transfer: sI - A is numerically singular at s = (" + std::to_string(s.real()) +
                        ", " + std::to_string(s.imag()) + ")");
  out.noalias() += g.C.template cast<Complex>() * lu.solve(g.B.template cast<Complex>());
  return out;
}

/// C A^k B for k = 0 .. count-1.
template <typename Scalar>
std::vector<MatrixX<Scalar>> markov_parameters(const StateSpace<Scalar>& g, int count) {
  std::vector<MatrixX<Scalar>> out;
  MatrixX<Scalar> AkB = g.B;
  for (int k = 0; k < count; ++k) {
    out.push_back(g.C * AkB);
    AkB = g.A * AkB;
  }
  return out;
}

}  // namespace dagctrl
