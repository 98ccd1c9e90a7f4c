#include "dagctrl/runtime.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <random>
#include <string>

#include "dagctrl/errors.hpp"

namespace dagctrl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

BlockPartition partition_of(const BlockPartition& dims, const IndexSet& idx) {
  std::vector<Index> sizes;
  for (int j : idx) sizes.push_back(dims.size(j));
  return BlockPartition(std::move(sizes));
}

const VectorXd& require_payload(const Payloads& payloads, int k, int recipient, const char* what) {
  if (k >= static_cast<int>(payloads.size()) || !payloads[static_cast<std::size_t>(k)])
    throw MissingAncestorError("agent " + std::to_string(recipient + 1) + " has no " + what + " from ancestor " +
                               std::to_string(k + 1));
  return *payloads[static_cast<std::size_t>(k)];
}

// Integrator state is one vector; these views split it.
struct Layout {
  Index n = 0;
  std::vector<Index> offsets, sizes;  // controller blocks after x
  Index total = 0;
};

}  // namespace

std::vector<AgentController> derive_agent_controllers(const Problem& problem, const GainLibrary& gains) {
  const auto& dims = problem.dims();
  const auto& g = problem.graph();
  const Eigen::MatrixXi S_inv = g.inverse_adjacency();
  std::vector<AgentController> out;
  for (int i = 0; i < problem.size(); ++i) {
    const Relatives r = relatives(g, i);
    const auto& gi = gains.agents.at(static_cast<std::size_t>(i));
    const auto& a = problem.agent(i);
    AgentController c;
    c.id = i;
    c.descendants = r.descendants;
    c.ancestors = r.ancestors;
    c.strict_ancestors = r.strict_ancestors;
    c.strict_descendants = r.strict_descendants;
    c.n_own = dims.n.size(i);
    c.m_own = dims.m.size(i);
    c.p_own = dims.p.size(i);

    c.A = MatrixXd::Zero(dims.n.total(r.descendants), dims.n.total(r.descendants));
    c.B2 = MatrixXd::Zero(dims.n.total(r.descendants), dims.m.total(r.descendants));
    const BlockPartition ln = partition_of(dims.n, r.descendants), lm = partition_of(dims.m, r.descendants);
    for (std::size_t b = 0; b < r.descendants.size(); ++b) {
      const auto& aj = problem.agent(r.descendants[b]);
      const int bi = static_cast<int>(b);
      c.A.block(ln.offset(bi), ln.offset(bi), ln.size(bi), ln.size(bi)) = aj.A;
      c.B2.block(ln.offset(bi), lm.offset(bi), ln.size(bi), lm.size(bi)) = aj.B2;
    }
    c.injection = selector(ln, {0}) * gi.L;
    c.C2 = a.C2;
    c.F = gi.F;

    const MatrixXd En = selector(dims.n, r.descendants), Em = selector(dims.m, r.descendants);
    for (int k : r.ancestors) {
      c.s_inv.push_back(S_inv(i, k));
      c.state_maps.push_back(En.transpose() * selector(dims.n, g.descendants(k)));
    }
    for (int k : r.strict_ancestors) c.input_maps.push_back(Em.transpose() * selector(dims.m, g.descendants(k)));
    out.push_back(std::move(c));
  }
  return out;
}

VectorXd compute_partial_input(const AgentController& c, const Payloads& states) {
  VectorXd acc = VectorXd::Zero(c.local_states());
  for (std::size_t a = 0; a < c.ancestors.size(); ++a) {
    const int k = c.ancestors[a];
    const VectorXd& xi_k = require_payload(states, k, c.id, "state");
    if (xi_k.size() != c.state_maps[a].cols())
      throw DimensionError("state payload from agent " + std::to_string(k + 1) + " has length " +
                           std::to_string(xi_k.size()) + ", expected " + std::to_string(c.state_maps[a].cols()));
    if (c.s_inv[a] != 0) acc.noalias() += static_cast<double>(c.s_inv[a]) * (c.state_maps[a] * xi_k);
  }
  return c.F * acc;
}

AssembledInput assemble_input(const AgentController& c, const VectorXd& own_nu_tilde, const Payloads& partial_inputs) {
  if (own_nu_tilde.size() != c.local_inputs()) throw DimensionError("partial input has the wrong length");
  AssembledInput out{own_nu_tilde, VectorXd()};
  for (std::size_t a = 0; a < c.strict_ancestors.size(); ++a) {
    const int k = c.strict_ancestors[a];
    const VectorXd& nu_k = require_payload(partial_inputs, k, c.id, "partial input");
    if (nu_k.size() != c.input_maps[a].cols())
      throw DimensionError("partial input from agent " + std::to_string(k + 1) + " has the wrong length");
    out.nu.noalias() += c.input_maps[a] * nu_k;
  }
  out.u = out.nu.head(c.m_own);
  return out;
}

NetworkEval network_rhs(const Problem& problem, const std::vector<AgentController>& controllers, const VectorXd& x,
                        const std::vector<VectorXd>& xi, const VectorXd& w, const VectorXd& y_offset) {
  const auto& dims = problem.dims();
  const int N = problem.size();
  if (x.size() != dims.n.total() || w.size() != dims.q.total() || static_cast<int>(xi.size()) != N ||
      static_cast<int>(controllers.size()) != N)
    throw DimensionError("network_rhs: state, noise or controller count does not match the problem");
  if (y_offset.size() != 0 && y_offset.size() != dims.p.total())
    throw DimensionError("network_rhs: measurement offset has the wrong length");

  NetworkEval ev;
  ev.dx.resize(dims.n.total());
  ev.u.resize(dims.m.total());
  ev.y.resize(dims.p.total());
  ev.dxi.resize(static_cast<std::size_t>(N));

  for (int i = 0; i < N; ++i) {
    const auto& a = problem.agent(i);
    ev.y.segment(dims.p.offset(i), dims.p.size(i)) =
        a.C2 * x.segment(dims.n.offset(i), dims.n.size(i)) + a.D21 * w.segment(dims.q.offset(i), dims.q.size(i));
  }
  if (y_offset.size() != 0) ev.y += y_offset;

  std::vector<std::vector<Message>> inbox(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto& c = controllers[static_cast<std::size_t>(i)];
    const VectorXd& own = xi[static_cast<std::size_t>(i)];
    if (own.size() != c.local_states()) throw DimensionError("network_rhs: local state has the wrong length");

    Payloads states(static_cast<std::size_t>(N)), partial(static_cast<std::size_t>(N));
    states[static_cast<std::size_t>(i)] = own;
    for (const Message& msg : inbox[static_cast<std::size_t>(i)]) {
      states[static_cast<std::size_t>(msg.sender)] = msg.xi;
      partial[static_cast<std::size_t>(msg.sender)] = msg.nu_tilde;
    }
    const VectorXd nu_tilde = compute_partial_input(c, states);
    const AssembledInput in = assemble_input(c, nu_tilde, partial);
    ev.u.segment(dims.m.offset(i), dims.m.size(i)) = in.u;

    const VectorXd innovation = ev.y.segment(dims.p.offset(i), dims.p.size(i)) - c.C2 * own.head(c.n_own);
    ev.dxi[static_cast<std::size_t>(i)] = c.A * own + c.B2 * in.nu - c.injection * innovation;

    Message msg{i, own, nu_tilde};
    for (int d : c.strict_descendants) inbox[static_cast<std::size_t>(d)].push_back(msg);
    ev.messages.push_back(std::move(msg));
  }

  for (int i = 0; i < N; ++i) {
    const auto& a = problem.agent(i);
    ev.dx.segment(dims.n.offset(i), dims.n.size(i)) =
        a.A * x.segment(dims.n.offset(i), dims.n.size(i)) + a.B1 * w.segment(dims.q.offset(i), dims.q.size(i)) +
        a.B2 * ev.u.segment(dims.m.offset(i), dims.m.size(i));
  }
  ev.z = problem.C1() * x + problem.D12() * ev.u;
  return ev;
}

SimTrace simulate(const Problem& problem, const GainLibrary& gains, const SimOptions& opts) {
  const auto& dims = problem.dims();
  const Index n = dims.n.total(), q = dims.q.total(), p = dims.p.total();
  if (!(opts.dt > 0.0) || !(opts.T > 0.0)) throw InvalidArgument("simulate: T and dt must be positive");
  const double ratio = opts.T / opts.dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
    throw InvalidArgument("simulate: T must be a multiple of dt");
  if (opts.record_every < 1) throw InvalidArgument("simulate: record_every must be at least 1");
  if (opts.x0.size() != 0 && opts.x0.size() != n) throw DimensionError("simulate: x0 has the wrong length");
  if (opts.impulse_channel && (*opts.impulse_channel < 0 || *opts.impulse_channel >= q))
    throw InvalidArgument("simulate: impulse channel out of range");

  SimTrace trace;
  Layout lay;
  lay.n = n;

  std::vector<AgentController> controllers;
  ControllerRealization K;
  if (opts.mode == SimMode::Network) {
    controllers = derive_agent_controllers(problem, gains);
    Index off = n;
    for (const auto& c : controllers) {
      lay.offsets.push_back(off);
      lay.sizes.push_back(c.local_states());
      trace.xi_blocks.push_back({"xi", c.id, c.id, off - n, c.local_states()});
      off += c.local_states();
    }
    lay.total = off;
  } else {
    K = synthesize(problem, gains, opts.form);
    lay.offsets.push_back(n);
    lay.sizes.push_back(K.ss.states());
    lay.total = n + K.ss.states();
    trace.xi_blocks = K.blocks;
  }

  const MatrixXd A = problem.A(), B1 = problem.B1(), B2 = problem.B2(), C2 = problem.C2(), D21 = problem.D21();

  VectorXd state = VectorXd::Zero(lay.total);
  if (opts.x0.size() != 0) state.head(n) = opts.x0;
  if (opts.impulse_channel) {
    const VectorXd e = VectorXd::Unit(q, *opts.impulse_channel);
    state.head(n) += B1 * e;
    const VectorXd v = D21 * e;
    if (opts.mode == SimMode::Network) {
      for (int i = 0; i < problem.size(); ++i)
        state.segment(lay.offsets[static_cast<std::size_t>(i)], lay.sizes[static_cast<std::size_t>(i)]) -=
            controllers[static_cast<std::size_t>(i)].injection * v.segment(dims.p.offset(i), dims.p.size(i));
    } else {
      state.tail(K.ss.states()) += K.ss.B * v;
    }
  }

  struct Eval {
    VectorXd d, u, y, z;
  };
  const auto rhs = [&](double t, const VectorXd& s, const VectorXd& w) -> Eval {
    VectorXd offset = opts.measurement_offset ? opts.measurement_offset(t) : VectorXd();
    if (offset.size() != 0 && offset.size() != p) throw DimensionError("simulate: measurement offset has the wrong length");
    Eval e;
    e.d.resize(lay.total);
    if (opts.mode == SimMode::Network) {
      std::vector<VectorXd> xi;
      for (std::size_t i = 0; i < lay.offsets.size(); ++i) xi.push_back(s.segment(lay.offsets[i], lay.sizes[i]));
      NetworkEval ev = network_rhs(problem, controllers, s.head(n), xi, w, offset);
      e.d.head(n) = ev.dx;
      for (std::size_t i = 0; i < lay.offsets.size(); ++i) e.d.segment(lay.offsets[i], lay.sizes[i]) = ev.dxi[i];
      e.u = std::move(ev.u);
      e.y = std::move(ev.y);
      e.z = std::move(ev.z);
    } else {
      const auto xk = s.tail(K.ss.states());
      e.y = C2 * s.head(n) + D21 * w;
      if (offset.size() != 0) e.y += offset;
      e.u = K.ss.C * xk;
      e.d.head(n) = A * s.head(n) + B1 * w + B2 * e.u;
      e.d.tail(K.ss.states()) = K.ss.A * xk + K.ss.B * e.y;
      e.z = problem.C1() * s.head(n) + problem.D12() * e.u;
    }
    return e;
  };
  const auto disturbance = [&](double t) -> VectorXd {
    if (!opts.disturbance) return VectorXd::Zero(q);
    VectorXd w = opts.disturbance(t);
    if (w.size() != q) throw DimensionError("simulate: disturbance has the wrong length");
    return w;
  };

  std::mt19937_64 rng(opts.noise_seed.value_or(0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_scale = 1.0 / std::sqrt(opts.dt);

  const auto record = [&](double t, const VectorXd& s, const Eval& e) {
    trace.t.push_back(t);
    trace.x.push_back(s.head(n));
    trace.xi.push_back(s.tail(lay.total - n));
    trace.u.push_back(e.u);
    trace.y.push_back(e.y);
    trace.z.push_back(e.z);
  };

  const double dt = opts.dt;
  double integral = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    VectorXd w;
    if (opts.noise_seed) {
      w.resize(q);
      for (Index j = 0; j < q; ++j) w(j) = noise_scale * normal(rng);
    } else {
      w = disturbance(t);
    }
    const Eval e1 = rhs(t, state, w);
    integral += e1.z.squaredNorm() * dt;
    if (k % static_cast<std::size_t>(opts.record_every) == 0) record(t, state, e1);

    if (opts.noise_seed) {
      state += dt * e1.d;
    } else {
      const VectorXd wm = disturbance(t + 0.5 * dt), we = disturbance(t + dt);
      const Eval e2 = rhs(t + 0.5 * dt, state + 0.5 * dt * e1.d, wm);
      const Eval e3 = rhs(t + 0.5 * dt, state + 0.5 * dt * e2.d, wm);
      const Eval e4 = rhs(t + dt, state + dt * e3.d, we);
      state += (dt / 6.0) * (e1.d + 2.0 * e2.d + 2.0 * e3.d + e4.d);
    }
    const double norm = state.norm();
    if (!std::isfinite(norm) || norm > opts.divergence_bound)
      throw DivergenceError("simulate: state norm " + std::to_string(norm) + " exceeds " +
                            std::to_string(opts.divergence_bound) + " at t = " + std::to_string(t + dt));
  }
  const double T = static_cast<double>(steps) * dt;
  record(T, state, rhs(T, state, opts.noise_seed ? VectorXd::Zero(q) : disturbance(T)));
  trace.cost = integral / T;
  trace.steps = steps;
  spdlog::debug("simulate: {} steps, running cost {:.6g}", steps, trace.cost);
  return trace;
}

double max_abs_deviation(const std::vector<VectorXd>& a, const std::vector<VectorXd>& b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_deviation: series have different lengths");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) throw DimensionError("max_abs_deviation: sample sizes differ");
    if (a[k].size() > 0) worst = std::max(worst, (a[k] - b[k]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace dagctrl
