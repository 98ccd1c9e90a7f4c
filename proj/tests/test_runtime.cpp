#include <gtest/gtest.h>

#include <random>

#include "dagctrl/runtime.hpp"
#include "test_support.hpp"

using namespace dagctrl;
using Eigen::VectorXd;

namespace {

struct Rig {
  Problem pb;
  GainLibrary gains;
  std::vector<AgentController> agents;
};

Rig setup(const std::string& name) {
  Problem pb = dagtest::fixture(name);
  GainLibrary g = compute_gains(pb);
  auto agents = derive_agent_controllers(pb, g);
  return {std::move(pb), std::move(g), std::move(agents)};
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

std::vector<VectorXd> zero_xi(const std::vector<AgentController>& agents) {
  std::vector<VectorXd> xi;
  for (const auto& c : agents) xi.push_back(VectorXd::Zero(c.local_states()));
  return xi;
}

std::vector<VectorXd> random_xi(const std::vector<AgentController>& agents, unsigned seed) {
  std::srand(seed);
  std::vector<VectorXd> xi;
  for (const auto& c : agents) xi.push_back(VectorXd::Random(c.local_states()));
  return xi;
}

std::vector<VectorXd> block(const std::vector<VectorXd>& series, Index offset, Index size) {
  std::vector<VectorXd> out;
  for (const auto& v : series) out.push_back(v.segment(offset, size));
  return out;
}

}  // namespace

TEST(Agents, ChainTwoDimensions) {
  const Rig s = setup("fix_chain2");
  ASSERT_EQ(s.agents.size(), 2u);
  const auto& a1 = s.agents[0];
  EXPECT_EQ(a1.local_states(), 2);
  EXPECT_EQ(a1.injection.rows(), 2);
  EXPECT_NEAR(a1.injection(0, 0), s.gains.agents[0].L(0, 0), 0);
  EXPECT_EQ(a1.injection(1, 0), 0.0);
  const auto& a2 = s.agents[1];
  EXPECT_EQ(a2.local_states(), 1);
  EXPECT_EQ(a2.strict_ancestors, IndexSet{0});
  EXPECT_EQ(a2.s_inv, (std::vector<int>{-1, 1}));
}

TEST(Agents, FigureOneAgentFiveSources) {
  const Rig s = setup("fix_fig1");
  EXPECT_EQ(s.agents[4].strict_ancestors, (IndexSet{0, 3}));
  EXPECT_EQ(s.agents[4].local_states(), 1);
  EXPECT_EQ(s.agents[0].local_states(), 5);
  EXPECT_EQ(s.agents[3].local_states(), 2);
}

TEST(Agents, MessageSizeContract) {
  const Rig s = setup("fix_fig1");
  const auto ev = network_rhs(s.pb, s.agents, VectorXd::Ones(5), random_xi(s.agents, 2), VectorXd::Zero(10));
  ASSERT_EQ(ev.messages.size(), 5u);
  for (const Message& m : ev.messages) {
    const auto& c = s.agents[static_cast<std::size_t>(m.sender)];
    const Index dn = s.pb.dims().n.total(c.descendants), dm = s.pb.dims().m.total(c.descendants);
    EXPECT_EQ(m.xi.size(), dn);
    EXPECT_EQ(m.nu_tilde.size(), dm);
    EXPECT_EQ(c.message_size(), dn + dm);
  }
}

TEST(PartialInput, RootUsesOwnStateOnly) {
  const Rig s = setup("fix_chain2");
  Payloads states(2);
  states[0] = vec({0.3, -0.7});
  const VectorXd nt = compute_partial_input(s.agents[0], states);
  EXPECT_LE((nt - s.gains.agents[0].F * *states[0]).norm(), 1e-15);
}

TEST(PartialInput, ChainTwoSubtractsAncestorCopy) {
  const Rig s = setup("fix_chain2");
  Payloads states(2);
  states[0] = vec({0.3, -0.7});
  states[1] = vec({0.5});
  const VectorXd nt = compute_partial_input(s.agents[1], states);
  EXPECT_NEAR(nt(0), s.gains.agents[1].F(0, 0) * (0.5 - (-0.7)), 1e-15);
}

TEST(PartialInput, ZeroPayloadsGiveZero) {
  const Rig s = setup("fix_fig1");
  for (const auto& c : s.agents) {
    Payloads states(5);
    for (int k : c.ancestors) states[static_cast<std::size_t>(k)] = VectorXd::Zero(s.agents[static_cast<std::size_t>(k)].local_states());
    EXPECT_EQ(compute_partial_input(c, states).norm(), 0.0);
  }
}

TEST(PartialInput, MissingAncestor) {
  const Rig s = setup("fix_fig1");
  Payloads states(5);
  states[4] = VectorXd::Zero(1);
  states[3] = VectorXd::Zero(2);
  EXPECT_THROW(compute_partial_input(s.agents[4], states), MissingAncestorError);
  states[0] = VectorXd::Zero(3);
  EXPECT_THROW(compute_partial_input(s.agents[4], states), DimensionError);
}

TEST(AssembleInput, RootPassesThrough) {
  const Rig s = setup("fix_chain2");
  const AssembledInput in = assemble_input(s.agents[0], vec({0.2, 0.4}), Payloads(2));
  EXPECT_EQ(in.nu, vec({0.2, 0.4}));
  EXPECT_EQ(in.u, vec({0.2}));
}

TEST(AssembleInput, ChainTwoAddsOverlap) {
  const Rig s = setup("fix_chain2");
  Payloads partial(2);
  partial[0] = vec({0.2, 0.4});
  const AssembledInput in = assemble_input(s.agents[1], vec({0.1}), partial);
  EXPECT_NEAR(in.u(0), 0.1 + 0.4, 1e-15);
}

TEST(AssembleInput, ZeroPayloads) {
  const Rig s = setup("fix_fig1");
  Payloads partial(5);
  partial[0] = VectorXd::Zero(5);
  partial[3] = VectorXd::Zero(2);
  EXPECT_EQ(assemble_input(s.agents[4], VectorXd::Zero(1), partial).u.norm(), 0.0);
}

TEST(AssembleInput, MissingAncestor) {
  const Rig s = setup("fix_fig1");
  Payloads partial(5);
  partial[0] = VectorXd::Zero(5);
  EXPECT_THROW(assemble_input(s.agents[4], VectorXd::Zero(1), partial), MissingAncestorError);
  EXPECT_THROW(assemble_input(s.agents[4], VectorXd::Zero(2), partial), DimensionError);
}

TEST(NetworkRhs, Equilibrium) {
  const Rig s = setup("fix_fig1");
  const auto ev = network_rhs(s.pb, s.agents, VectorXd::Zero(5), zero_xi(s.agents), VectorXd::Zero(10));
  EXPECT_EQ(ev.dx.norm(), 0.0);
  for (const auto& d : ev.dxi) EXPECT_EQ(d.norm(), 0.0);
  EXPECT_EQ(ev.u.norm(), 0.0);
}

TEST(NetworkRhs, ZeroEstimatesOnlyInjectMeasurements) {
  const Rig s = setup("fix_chain2");
  const VectorXd x = vec({1.0, -2.0});
  const auto ev = network_rhs(s.pb, s.agents, x, zero_xi(s.agents), VectorXd::Zero(4));
  EXPECT_EQ(ev.u.norm(), 0.0);
  EXPECT_LE((ev.dx - s.pb.A() * x).norm(), 1e-15);
  for (int i = 0; i < 2; ++i)
    EXPECT_LE((ev.dxi[static_cast<std::size_t>(i)] + s.agents[static_cast<std::size_t>(i)].injection * x.segment(i, 1)).norm(), 1e-15);
}

TEST(NetworkRhs, SingleAgentMatchesObserverController) {
  const Rig s = setup("fix_single");
  const StateSpaced K = centralized_lqg(s.pb);
  const VectorXd x = vec({0.7}), w = vec({0.1, -0.3});
  const std::vector<VectorXd> xi{vec({-0.4})};
  const auto ev = network_rhs(s.pb, s.agents, x, xi, w);
  EXPECT_LE((ev.u - K.C * xi[0]).norm(), 1e-15);
  EXPECT_LE((ev.dxi[0] - (K.A * xi[0] + K.B * ev.y)).norm(), 1e-15);
}

TEST(NetworkRhs, MatchesMonolithicStateForm) {
  // Agent i's local state is the descendant part of copy i in the lifted form.
  const Rig s = setup("fix_chain2_coupled");
  const ControllerRealization K = build_K_minimal(s.pb, s.gains, ControllerForm::MinimalState);
  const auto xi = random_xi(s.agents, 9);
  VectorXd stacked(K.ss.states());
  stacked << xi[0], xi[1];
  const VectorXd x = vec({0.3, -1.1}), w = vec({0.2, 0.1, -0.5, 0.4});
  const auto ev = network_rhs(s.pb, s.agents, x, xi, w);
  EXPECT_LE((ev.u - K.ss.C * stacked).norm(), 1e-14);
  VectorXd d(K.ss.states());
  d << ev.dxi[0], ev.dxi[1];
  EXPECT_LE((d - (K.ss.A * stacked + K.ss.B * ev.y)).norm(), 1e-14);
}

TEST(NetworkRhs, DimensionErrors) {
  const Rig s = setup("fix_chain2");
  EXPECT_THROW(network_rhs(s.pb, s.agents, VectorXd::Zero(3), zero_xi(s.agents), VectorXd::Zero(4)), DimensionError);
  EXPECT_THROW(network_rhs(s.pb, s.agents, VectorXd::Zero(2), zero_xi(s.agents), VectorXd::Zero(4), VectorXd::Zero(1)),
               DimensionError);
}

TEST(Simulate, ZeroInputZeroTrace) {
  const Rig s = setup("fix_chain2");
  SimOptions o;
  o.T = 1.0;
  const SimTrace tr = simulate(s.pb, s.gains, o);
  EXPECT_EQ(tr.cost, 0.0);
  EXPECT_EQ(tr.steps, 1000u);
  EXPECT_EQ(tr.t.size(), 1001u);
  for (const auto& u : tr.u) EXPECT_EQ(u.norm(), 0.0);
}

TEST(Simulate, NetworkMatchesMonolithic) {
  for (const char* name : {"fix_chain2", "fix_chain2_coupled"}) {
    const Rig s = setup(name);
    SimOptions o;
    o.x0 = vec({1.0, 1.0});
    const SimTrace net = simulate(s.pb, s.gains, o);
    for (ControllerForm f : all_controller_forms()) {
      o.mode = SimMode::Monolithic;
      o.form = f;
      const SimTrace mono = simulate(s.pb, s.gains, o);
      EXPECT_LE(max_abs_deviation(net.u, mono.u), 1e-6) << name << " " << to_string(f);
      EXPECT_LE(max_abs_deviation(net.x, mono.x), 1e-6) << name << " " << to_string(f);
    }
  }
}

TEST(Simulate, DeterministicDisturbanceAndImpulse) {
  const Rig s = setup("fix_chain2_coupled");
  SimOptions o;
  o.T = 5;
  o.disturbance = [](double t) { return vec({std::sin(t), 0.1, std::cos(2 * t), 0.0}); };
  SimOptions m = o;
  m.mode = SimMode::Monolithic;
  EXPECT_LE(max_abs_deviation(simulate(s.pb, s.gains, o).u, simulate(s.pb, s.gains, m).u), 1e-6);
  o.disturbance = nullptr;
  m.disturbance = nullptr;
  o.impulse_channel = m.impulse_channel = 1;
  const SimTrace a = simulate(s.pb, s.gains, o), b = simulate(s.pb, s.gains, m);
  EXPECT_GT(a.cost, 0.0);
  EXPECT_LE(max_abs_deviation(a.u, b.u), 1e-6);
}

TEST(Simulate, SingleAgentNetworkEqualsCentralized) {
  const Rig s = setup("fix_single");
  SimOptions o;
  o.T = 2;
  o.noise_seed = 4;
  const SimTrace net = simulate(s.pb, s.gains, o);
  o.mode = SimMode::Monolithic;
  o.form = ControllerForm::State;
  const SimTrace mono = simulate(s.pb, s.gains, o);
  EXPECT_LE(max_abs_deviation(net.u, mono.u), 1e-12);
}

TEST(Simulate, SeededNoiseIsReproducible) {
  const Rig s = setup("fix_chain2");
  SimOptions o;
  o.T = 1;
  o.noise_seed = 3;
  const SimTrace a = simulate(s.pb, s.gains, o), b = simulate(s.pb, s.gains, o);
  EXPECT_EQ(max_abs_deviation(a.x, b.x), 0.0);
  EXPECT_EQ(a.cost, b.cost);
  o.noise_seed = 4;
  EXPECT_NE(simulate(s.pb, s.gains, o).cost, a.cost);
}

TEST(Simulate, RecordEvery) {
  const Rig s = setup("fix_chain2");
  SimOptions o;
  o.T = 1;
  o.record_every = 100;
  const SimTrace tr = simulate(s.pb, s.gains, o);
  EXPECT_EQ(tr.t.size(), 11u);
  EXPECT_NEAR(tr.t.back(), 1.0, 1e-12);
}

TEST(Simulate, InformationLocality) {
  // Agent 4 (index 3) does not see agent 2's (index 1) measurement.
  const Rig s = setup("fix_fig1");
  SimOptions o;
  o.T = 3;
  o.x0 = vec({0.5, -0.2, 0.9, 0.1, -0.6});
  const SimTrace base = simulate(s.pb, s.gains, o);
  o.measurement_offset = [](double t) { return vec({0, std::sin(3 * t) + 1, 0, 0, 0}); };
  const SimTrace pert = simulate(s.pb, s.gains, o);
  EXPECT_LE(max_abs_deviation(block(base.u, 3, 1), block(pert.u, 3, 1)), 1e-9);
  EXPECT_GT(max_abs_deviation(block(base.u, 1, 1), block(pert.u, 1, 1)), 1e-3);
}

TEST(Simulate, Errors) {
  const Rig s = setup("fix_chain2");
  SimOptions o;
  o.T = 1.0005;
  EXPECT_THROW(simulate(s.pb, s.gains, o), InvalidArgument);
  o.T = 1;
  o.dt = 0;
  EXPECT_THROW(simulate(s.pb, s.gains, o), InvalidArgument);
  o.dt = 1e-3;
  o.x0 = VectorXd::Zero(3);
  EXPECT_THROW(simulate(s.pb, s.gains, o), DimensionError);
  o.x0 = VectorXd();
  o.impulse_channel = 9;
  EXPECT_THROW(simulate(s.pb, s.gains, o), InvalidArgument);
  // RK4 is unstable at this step size.
  SimOptions big;
  big.x0 = vec({1, 1});
  big.dt = 5;
  big.T = 5000;
  EXPECT_THROW(simulate(s.pb, s.gains, big), DivergenceError);
}

TEST(MaxAbsDeviation, Basics) {
  EXPECT_EQ(max_abs_deviation({vec({1, 2})}, {vec({1, 2.5})}), 0.5);
  EXPECT_THROW(max_abs_deviation({vec({1})}, {}), DimensionError);
}
