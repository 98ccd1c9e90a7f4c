#pragma once

#include <cstdint>

namespace dagctrl {

/// Every rank, sign and residual decision made by the toolkit reads its
/// threshold from here. Values are relative to the Frobenius scale of the
/// data involved unless the field name says otherwise.
struct Tolerances {
  double rank = 1e-8;               // rank / positivity decisions
  double hurwitz_margin = 0.0;      // absolute: Hurwitz iff max Re(eig) < -margin
  double r1_cross = 1e-10;          // ||C^T D|| relative bound for R1
  double r1_definite = 1e-10;       // min eig(D^T D) for R1
  double pbh_eig_band = 1e-10;      // eigenvalues with Re >= -band enter the PBH test
  double pbh_sigma = 1e-8;          // PBH smallest singular value threshold
  double imaginary_axis = 1e-8;     // Hamiltonian eigenvalue distance to jR
  double are_residual = 1e-8;
  double lyapunov_residual = 1e-9;
  double psd = 1e-10;               // X >= -psd * max(1, ||X||)
  double transfer_condition = 1e12; // eval_transfer refuses cond(sI - A) above this
  double equivalence_rtol = 1e-7;
  double sparsity_atol = 1e-9;
  double appendix_rtol = 1e-7;
  double markov_rtol = 1e-7;
  double trace_atol = 1e-6;
};

/// The frequency grid every equivalence check uses: log-spaced points plus a
/// few seeded uniform draws.
struct GridOptions {
  int log_points = 60;
  double log_min = 1e-3;
  double log_max = 1e3;
  int random_points = 10;
  double random_min = 1e-2;
  double random_max = 1e2;
  std::uint64_t seed = 20190401;
};

struct AreOptions {
  bool newton_polish = true;
  int newton_steps = 2;
};

}  // namespace dagctrl
