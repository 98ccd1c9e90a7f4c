#include <gtest/gtest.h>

#include <cmath>

#include "dagctrl/lti.hpp"
#include "dagctrl/synthesis.hpp"
#include "dagctrl/verify.hpp"
#include "test_support.hpp"

using namespace dagctrl;
using dagtest::scalar;
using Complex = std::complex<double>;

namespace {

StateSpaced first_order() { return {scalar(-1), scalar(1), scalar(1), scalar(0)}; }

// (1/2pi) int trace(G* G) dw over [-1e4, 1e4], trapezoid on a log-dense grid.
double h2_by_trapezoid(const StateSpaced& g) {
  std::vector<double> w{0.0};
  const int n = 4000;
  for (int k = 0; k <= n; ++k) w.push_back(std::pow(10.0, -5.0 + 9.0 * k / n));
  auto f = [&](double x) { return eval_transfer(g, Complex(0, x)).squaredNorm(); };
  double total = 0;
  for (std::size_t k = 1; k < w.size(); ++k) total += 0.5 * (f(w[k - 1]) + f(w[k])) * (w[k] - w[k - 1]);
  return 2 * total / (2 * M_PI);
}

StateSpaced random_stable(unsigned seed, Index n, Index m, Index p) {
  std::srand(seed);
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(n, n);
  A -= (spectral_abscissa(A) + 0.5) * Eigen::MatrixXd::Identity(n, n);
  return {A, Eigen::MatrixXd::Random(n, m), Eigen::MatrixXd::Random(p, n), Eigen::MatrixXd::Zero(p, m)};
}

FourBlockPlant scalar_plant(double a) {
  FourBlockPlant P;
  P.A = scalar(a);
  P.B1 = Eigen::MatrixXd(1, 2);
  P.B1 << 1, 0;
  P.B2 = scalar(1);
  P.C1 = Eigen::MatrixXd(2, 1);
  P.C1 << 1, 0;
  P.D12 = Eigen::MatrixXd(2, 1);
  P.D12 << 0, 1;
  P.C2 = scalar(1);
  P.D21 = Eigen::MatrixXd(1, 2);
  P.D21 << 0, 1;
  return P;
}

}  // namespace

TEST(EvalTransfer, FirstOrderAtZero) {
  EXPECT_NEAR(std::abs(eval_transfer(first_order(), Complex(0, 0))(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(EvalTransfer, FirstOrderAtJ) {
  const auto& e = dagtest::expected()["tf_example_s_j"];
  const Complex v = eval_transfer(first_order(), Complex(0, 1))(0, 0);
  EXPECT_NEAR(v.real(), e["re"].get<double>(), 1e-15);
  EXPECT_NEAR(v.imag(), e["im"].get<double>(), 1e-15);
}

TEST(EvalTransfer, FeedthroughOnly) {
  Eigen::MatrixXd D(2, 3);
  D << 1, 2, 3, 4, 5, 6;
  const auto v = eval_transfer(StateSpaced::gain(D), Complex(0.3, 7));
  EXPECT_EQ(v.real(), D);
  EXPECT_EQ(v.imag(), Eigen::MatrixXd::Zero(2, 3));
}

TEST(EvalTransfer, SingularAtPole) {
  EXPECT_THROW(eval_transfer(first_order(), Complex(-1, 0)), SingularError);
}

TEST(Hurwitz, Examples) {
  EXPECT_TRUE(is_hurwitz(scalar(-1)));
  EXPECT_FALSE(is_hurwitz(scalar(0)));
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -1, -1;
  EXPECT_TRUE(is_hurwitz(A));
  EXPECT_TRUE(is_hurwitz(Eigen::MatrixXd(0, 0)));
  EXPECT_FALSE(is_hurwitz(scalar(-0.5), 1.0));
  EXPECT_THROW(is_hurwitz(Eigen::MatrixXd::Zero(2, 3)), DimensionError);
}

TEST(Lyapunov, Examples) {
  EXPECT_NEAR(solve_lyapunov(scalar(-1), scalar(1))(0, 0), 0.5, 1e-15);
  EXPECT_LE((solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)) -
             0.5 * Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(solve_lyapunov(scalar(-2), scalar(4))(0, 0), 1.0, 1e-15);
}

TEST(Lyapunov, ResidualOnRandomSystems) {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const StateSpaced g = random_stable(seed, 5, 2, 2);
    const Eigen::MatrixXd Q = g.C.transpose() * g.C;
    const Eigen::MatrixXd P = solve_lyapunov(g.A, Q);
    EXPECT_LE(lyapunov_residual(g.A, P, Q), 1e-9 * std::max(1.0, Q.norm()));
    EXPECT_LE((P - P.transpose()).norm(), 1e-12 * P.norm());
  }
}

TEST(Lyapunov, RejectsUnstable) {
  EXPECT_THROW(solve_lyapunov(scalar(0.1), scalar(1)), NotHurwitzError);
}

TEST(H2, Examples) {
  EXPECT_NEAR(h2_norm_sq(first_order()), dagtest::expected()["h2_a1_b1_c1"].get<double>(), 1e-14);
  EXPECT_NEAR(h2_norm_sq(StateSpaced(scalar(-2), scalar(2), scalar(1), scalar(0))),
              dagtest::expected()["h2_a2_b2_c1"].get<double>(), 1e-14);
  EXPECT_EQ(h2_norm_sq(StateSpaced(scalar(-1), scalar(1), scalar(0), scalar(0))), 0.0);
}

TEST(H2, Errors) {
  EXPECT_THROW(h2_norm_sq(StateSpaced(scalar(-1), scalar(1), scalar(1), scalar(1))), NonzeroFeedthroughError);
  EXPECT_THROW(h2_norm_sq(StateSpaced(scalar(1), scalar(1), scalar(1), scalar(0))), NotHurwitzError);
}

TEST(H2, AgreesWithFrequencyIntegration) {
  std::vector<StateSpaced> systems{first_order(), StateSpaced(scalar(-2), scalar(2), scalar(1), scalar(0))};
  for (unsigned seed = 1; seed <= 4; ++seed) systems.push_back(random_stable(seed, 4, 2, 3));
  for (const auto& g : systems) {
    const double exact = h2_norm_sq(g);
    EXPECT_NEAR(h2_by_trapezoid(g), exact, 0.01 * exact);
  }
}

TEST(Gramians, ScalarValues) {
  const StateSpaced g(scalar(-2), scalar(2), scalar(3), scalar(0));
  EXPECT_NEAR(controllability_gramian(g)(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(observability_gramian(g)(0, 0), 2.25, 1e-15);
}

TEST(ConnectFeedback, ZeroControllerGivesOpenLoop) {
  const FourBlockPlant P = scalar_plant(-1);
  const StateSpaced cl = connect_feedback(P, StateSpaced::gain(Eigen::MatrixXd::Zero(1, 1)));
  const StateSpaced open(P.A, P.B1, P.C1, Eigen::MatrixXd::Zero(2, 2));
  for (double w : {0.0, 0.5, 3.0})
    EXPECT_LE((eval_transfer(cl, Complex(0, w)) - eval_transfer(open, Complex(0, w))).norm(), 1e-14);
}

TEST(ConnectFeedback, StabilizingControllerOnUnstablePlant) {
  const StateSpaced K(scalar(-10), scalar(1), scalar(-30), scalar(0));
  const StateSpaced cl = connect_feedback(scalar_plant(1), K);
  EXPECT_EQ(cl.states(), 2);
  EXPECT_TRUE(is_hurwitz(cl.A));
}

TEST(ConnectFeedback, ChainTwoOptimalControllerStabilizes) {
  const Problem pb = dagtest::fixture("fix_chain2");
  const GainLibrary g = compute_gains(pb);
  for (ControllerForm form : all_controller_forms())
    EXPECT_TRUE(is_hurwitz(connect_feedback(pb.plant(), synthesize(pb, g, form).ss).A)) << to_string(form);
}

TEST(ConnectFeedback, Errors) {
  EXPECT_THROW(connect_feedback(scalar_plant(-1), StateSpaced::gain(Eigen::MatrixXd::Zero(2, 1))), DimensionError);
  EXPECT_THROW(connect_feedback(scalar_plant(-1), StateSpaced(scalar(-1), scalar(1), scalar(1), scalar(1))),
               WellPosednessError);
}

TEST(ConnectFeedback, CentralizedCostMatchesTwoRiccatiFormula) {
  // trace(B1^T X B1) + trace(R F Y F^T) for the two-Riccati controller.
  const Problem pb = dagtest::fixture("fix_chain2_coupled");
  const RiccatiSolution ctl = solve_are(pb.A(), pb.B2(), pb.C1(), pb.D12());
  const RiccatiSolution est = solve_are(pb.A().transpose(), pb.C2().transpose(), pb.B1().transpose(),
                                        pb.D21().transpose());
  const Eigen::MatrixXd R = pb.D12().transpose() * pb.D12();
  const double formula = (pb.B1().transpose() * ctl.X * pb.B1()).trace() + (R * ctl.F * est.X * ctl.F.transpose()).trace();
  const double cost = h2_norm_sq(connect_feedback(pb.plant(), centralized_lqg(pb)));
  EXPECT_NEAR(cost, formula, 1e-10 * formula);
  EXPECT_NEAR(cost, dagtest::expected()["fix_chain2_coupled"]["centralized_cost"].get<double>(), 1e-10);
}

TEST(Reduce, DropsUnreachableUnobservableBlock) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A.diagonal() << -1, -2, -3;
  Eigen::MatrixXd B(3, 1), C(1, 3);
  B << 1, 0, 1;
  C << 1, 1, 0;
  const StateSpaced g(A, B, C, Eigen::MatrixXd::Zero(1, 1));
  const StateSpaced r = remove_uncontrollable_unobservable(g);
  EXPECT_EQ(r.states(), 1);
  EXPECT_NEAR(r.A(0, 0), -1.0, 1e-12);
  for (double w : {0.0, 1.0, 10.0})
    EXPECT_LE((eval_transfer(r, Complex(0, w)) - eval_transfer(g, Complex(0, w))).norm(), 1e-12);
}

TEST(Reduce, MinimalSystemUnchanged) {
  const StateSpaced g = random_stable(3, 4, 2, 2);
  EXPECT_EQ(remove_uncontrollable_unobservable(g).states(), 4);
}

TEST(Reduce, PreservesTransferOnStandardGrid) {
  const Problem pb = dagtest::fixture("fix_fig1");
  const StateSpaced K = build_K_state(pb, compute_gains(pb)).ss;
  const StateSpaced r = remove_uncontrollable_unobservable(K);
  EXPECT_TRUE(check_equivalence(K, r, standard_grid(), 1e-8).pass);
}

TEST(Reduce, LiftedFigureOneRealization) {
  // Identical decoupled agents: the optimal K is the diagonal LQG controller
  // (its cost equals the centralized one, see the oracle), one state per agent.
  const Problem pb = dagtest::fixture("fix_fig1");
  const StateSpaced K = build_K_state(pb, compute_gains(pb)).ss;
  EXPECT_EQ(K.states(), 25);
  EXPECT_EQ(remove_uncontrollable_unobservable(K).states(), 5);
  const auto& e = dagtest::expected()["fix_fig1"];
  EXPECT_NEAR(e["cost_closed_form"].get<double>(), e["centralized_cost"].get<double>(), 1e-12);
}

TEST(Reduce, CoupledChainStaysAtThree) {
  const Problem pb = dagtest::fixture("fix_chain2_coupled");
  const StateSpaced K = build_K_minimal(pb, compute_gains(pb), ControllerForm::MinimalState).ss;
  EXPECT_EQ(remove_uncontrollable_unobservable(K).states(), 3);
}

TEST(Reduce, UnstableModesAreKept) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A.diagonal() << 1, 2;
  Eigen::MatrixXd B(2, 1), C(1, 2);
  B << 1, 0;
  C << 1, 1;
  const StateSpaced r = remove_uncontrollable_unobservable(StateSpaced(A, B, C, Eigen::MatrixXd::Zero(1, 1)));
  ASSERT_EQ(r.states(), 1);
  EXPECT_NEAR(r.A(0, 0), 1.0, 1e-12);
}

TEST(Interconnect, SeriesParallelInverse) {
  const StateSpaced g = first_order();
  const Complex s(0, 2);
  const Complex gs = eval_transfer(g, s)(0, 0);
  EXPECT_NEAR(std::abs(eval_transfer(series(g, g), s)(0, 0) - gs * gs), 0, 1e-15);
  EXPECT_NEAR(std::abs(eval_transfer(parallel(g, g), s)(0, 0) - 2.0 * gs), 0, 1e-15);
  const StateSpaced h(scalar(-1), scalar(1), scalar(1), scalar(2));
  EXPECT_NEAR(std::abs(eval_transfer(inverse(h), s)(0, 0) * eval_transfer(h, s)(0, 0) - 1.0), 0, 1e-14);
  EXPECT_THROW(inverse(g), WellPosednessError);
  EXPECT_THROW(series(g, StateSpaced::gain(Eigen::MatrixXd::Zero(2, 1))), DimensionError);
  EXPECT_THROW(StateSpaced(scalar(1), Eigen::MatrixXd::Zero(2, 1), scalar(1), scalar(0)), DimensionError);
}

TEST(Interconnect, MarkovParameters) {
  const auto M = markov_parameters(StateSpaced(scalar(-2), scalar(3), scalar(5), scalar(0)), 3);
  EXPECT_EQ(M[0](0, 0), 15);
  EXPECT_EQ(M[1](0, 0), -30);
  EXPECT_EQ(M[2](0, 0), 60);
}
