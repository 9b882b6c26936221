#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/directional.hpp"
#include "core/errors.hpp"
#include "core/flow.hpp"
#include "core/inverse_flow.hpp"
#include "core/parallel.hpp"
#include "core/picard.hpp"
#include "core/snapshot.hpp"
#include "core/sphere.hpp"

using namespace patchflow;

namespace {

std::shared_ptr<const ParticleGeometry> ball(int n, double h) {
  LatticeOptions o;
  o.h = h;
  o.lo.assign(n, -1.0);
  o.hi.assign(n, 1.0);
  return build_geometry(n, ball_patch(std::vector<double>(n, 0.0), 1.0, 1.0), o);
}

FlowModel model_for(const std::string& name, int n) {
  const KernelSpec k = builtin_kernel(name, n);
  return make_model(k, sphere_integrals(k, default_sphere_nodes(n)).c, QuadratureConfig{});
}

}  // namespace

TEST_CASE("lattice markers and masses") {
  const auto g = ball(2, 0.1);
  double mass = 0.0;
  for (std::size_t p = 0; p < g->count(); ++p) {
    mass += g->mass[p] * g->h * g->h;
    CHECK(g->occupancy[p] > 0.0);
    CHECK(g->occupancy[p] <= 1.0);
  }
  CHECK(mass == doctest::Approx(M_PI).epsilon(1e-3));
  const int delta[2] = {0, 0};
  CHECK(g->neighbor(0, delta) == 0);
}

TEST_CASE("initial state is the identity map") {
  const auto g = ball(3, 0.25);
  const FlowState s = FlowState::initial(g, {0.1, 0.2, 0.3});
  CHECK(s.X == g->alpha);
  CHECK(s.tracers() == 1);
  for (std::size_t p = 0; p < s.count(); ++p) {
    CHECK(s.det[p] == 1.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(s.DX[p * 9 + i * 3 + j] == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("orientation loss is reported") {
  const auto g = ball(2, 0.5);
  FlowState s = FlowState::initial(g);
  s.DX[0] = -1.0;
  try {
    s.refresh_det();
    FAIL("expected OrientationLost");
  } catch (const OrientationLost& e) {
    CHECK(e.particle() == 0);
    CHECK(e.code() == ErrorCode::orientation_lost);
  }
}

TEST_CASE("fitted Jacobians are exact for affine maps") {
  const auto g = ball(2, 0.1);
  std::vector<double> Y(g->count() * 2), J(g->count() * 4);
  for (std::size_t p = 0; p < g->count(); ++p) {
    const double* a = &g->alpha[2 * p];
    Y[2 * p] = 2.0 * a[0] - a[1] + 3.0;
    Y[2 * p + 1] = 0.5 * a[0] + 4.0 * a[1];
  }
  fit_jacobians(*g, Y.data(), 2, J.data());
  for (std::size_t p = 0; p < g->count(); ++p) {
    CHECK(J[4 * p + 0] == doctest::Approx(2.0));
    CHECK(J[4 * p + 1] == doctest::Approx(0.5));
    CHECK(J[4 * p + 2] == doctest::Approx(-1.0));
    CHECK(J[4 * p + 3] == doctest::Approx(4.0));
  }
}

TEST_CASE("jacobian rate is DX times G") {
  const double DX[4] = {1, 2, 3, 4}, G[4] = {0, 1, -1, 0};
  double out[4];
  jacobian_rate(1, 2, DX, G, out);
  CHECK(out[0] == -2);
  CHECK(out[1] == 1);
  CHECK(out[2] == -4);
  CHECK(out[3] == 3);
}

TEST_CASE("rankine patch rotates rigidly") {
  const auto g = ball(2, 1.0 / 16);
  TimeIntegratorConfig tc;
  tc.dt = 0.05;
  Flow flow(FlowState::initial(g, {0.5, 0.0}), model_for("biot_savart", 2), tc);
  flow.advance(10);
  const double* x = flow.state().tracer_X.data();
  CHECK(std::hypot(x[0], x[1]) == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(std::atan2(x[1], x[0]) == doctest::Approx(0.25).epsilon(1e-2));
  double worst = 0.0;
  for (double d : flow.state().det) worst = std::max(worst, std::abs(d - 1.0));
  CHECK(worst <= 1e-2);
}

TEST_CASE("aggregation keeps det equal to exp(-t) inside the ball") {
  const auto g = ball(3, 0.25);
  TimeIntegratorConfig tc;
  tc.dt = 0.02;
  Flow flow(FlowState::initial(g), model_for("aggregation", 3), tc);
  flow.advance(5);
  const double expect = std::exp(-flow.state().t);
  for (double d : flow.state().det) CHECK(d == doctest::Approx(expect).epsilon(1e-4));
  CHECK(flow.state().det_consistency() <= 1e-12);
}

TEST_CASE("evaluation does not depend on the thread count") {
  const auto g = ball(2, 1.0 / 16);
  const FlowModel m = model_for("biot_savart", 2);
  const FlowState s = FlowState::initial(g, {0.3, 0.4});
  std::vector<Evaluation> ev;
  for (int t : {1, 3, 8}) {
    set_thread_count(t);
    ev.push_back(evaluate(s, m, true));
  }
  set_thread_count(1);
  CHECK(ev[0].V == ev[1].V);
  CHECK(ev[0].G == ev[2].G);
  CHECK(ev[0].VT == ev[2].VT);
}

TEST_CASE("inverse flow of a constant velocity is a translation") {
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.05 * i);
  const ConstantVelocity v({0.3, -1.2}, times);
  const InverseFlowResult r = inverse_flow(v, {1.0, 1.0, -2.0, 0.5});
  CHECK(r.alpha[0] == doctest::Approx(0.7));
  CHECK(r.alpha[1] == doctest::Approx(2.2));
  CHECK(r.alpha[2] == doctest::Approx(-2.3));
  CHECK(r.alpha[3] == doctest::Approx(1.7));
}

TEST_CASE("inverse flow undoes the forward flow") {
  const auto g = ball(2, 1.0 / 8);
  TimeIntegratorConfig tc;
  tc.dt = 0.02;
  Flow flow(FlowState::initial(g), model_for("aggregation", 2), tc, true);
  flow.advance(10);
  const HistoryVelocity hv(g, flow.model(), flow.history(), tc.jacobian_mode);
  const InverseFlowResult inv = inverse_flow(hv, flow.state().X);
  for (std::size_t i = 0; i < g->alpha.size(); ++i) CHECK(std::abs(inv.alpha[i] - g->alpha[i]) <= 1e-6);
}

TEST_CASE("collocation integration matrix is exact for polynomials") {
  const auto u = lobatto_nodes(5);
  CHECK(u.size() == 6);
  CHECK(u.front() == 0.0);
  CHECK(u.back() == 1.0);
  const Mat S = integration_matrix(u);
  for (int deg = 0; deg <= 5; ++deg) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) s += S(i, k) * std::pow(u[k], deg);
      CHECK(s == doctest::Approx(std::pow(u[i], deg + 1) / (deg + 1)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("picard iterates contract and reach the rk4 step") {
  const auto g = ball(2, 1.0 / 8);
  const FlowModel m = model_for("aggregation", 2);
  const FlowState s0 = FlowState::initial(g);
  const PicardResult pr = picard_iterate(s0, m, 0.05, 6, 5, JacobianMode::variational);
  REQUIRE(pr.distances.size() >= 5);
  for (int j = 0; j < 4; ++j) CHECK(pr.distances[j + 1] <= 0.5 * pr.distances[j]);
  CHECK_FALSE(pr.diverged);
}

TEST_CASE("directional derivative matches the Gateaux quotient") {
  const auto g = ball(2, 1.0 / 8);
  const FlowState s = FlowState::initial(g);
  const KernelSpec k = builtin_kernel("biot_savart", 2);
  std::vector<double> Y(s.count() * 2);
  for (std::size_t p = 0; p < s.count(); ++p) {
    const double* a = &g->alpha[2 * p];
    Y[2 * p] = std::sin(a[0] + 2 * a[1]);
    Y[2 * p + 1] = 0.3 * a[0] * a[1];
  }
  const DirectionalResult r = directional_derivative(s, k, Y, {});
  const auto fd = gateaux_difference(s, k, Y, r.DY, {}, 1e-6);
  const auto tot = r.total();
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    diff = std::max(diff, std::abs(tot[i] - fd[i]));
    ref = std::max(ref, std::abs(fd[i]));
  }
  CHECK(diff <= 1e-3 * ref);
}

TEST_CASE("snapshots round-trip and refuse a different lattice") {
  const auto g = ball(2, 0.25);
  TimeIntegratorConfig tc;
  Flow flow(FlowState::initial(g, {0.1, 0.1}), model_for("biot_savart", 2), tc);
  flow.advance(2);
  MonitorState ms;
  ms.int_grad_v = 0.125;
  ms.fit_t = {0.0, 0.01};
  ms.fit_log = {1.0, 2.0};
  const std::string dir = "unit_snap";
  std::filesystem::create_directories(dir);
  write_snapshot(snapshot_path(dir, 2), flow.state(), ms);
  CHECK(latest_snapshot(dir) == snapshot_path(dir, 2));
  const Snapshot snap = read_snapshot(snapshot_path(dir, 2));
  CHECK(snap.step == 2);
  CHECK(snap.X == flow.state().X);
  CHECK(snap.DX == flow.state().DX);
  CHECK(snap.tracer_X == flow.state().tracer_X);
  const MonitorState back = MonitorState::unpack(snap.monitor);
  CHECK(back.int_grad_v == 0.125);
  CHECK(back.fit_log == ms.fit_log);
  const FlowState r = restore_state(g, snap);
  CHECK(r.t == flow.state().t);
  CHECK_THROWS_AS(restore_state(ball(2, 0.125), snap), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero density leaves the state unchanged") {
  LatticeOptions o;
  o.h = 0.25;
  o.lo = {-1, -1};
  o.hi = {1, 1};
  auto g = build_geometry(2, zero_density(), o);
  Flow flow(FlowState::initial(g, {0.3, 0.1}), model_for("biot_savart", 2), TimeIntegratorConfig{});
  flow.advance(3);
  CHECK(flow.state().tracer_X == std::vector<double>{0.3, 0.1});
  const auto v = velocity_from_state(flow.state(), flow.model(), {0.5, 0.5});
  CHECK(v == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rk4 forward then backward returns to the reference positions") {
  const auto g = ball(2, 1.0 / 8);
  const FlowModel m = model_for("biot_savart", 2);
  TimeIntegratorConfig fwd;
  fwd.dt = 0.05;
  Flow a(FlowState::initial(g), m, fwd);
  a.advance(10);
  TimeIntegratorConfig back = fwd;
  back.dt = -0.05;
  Flow b(a.state(), m, back);
  b.advance(10);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->alpha.size(); ++i) worst = std::max(worst, std::abs(b.state().X[i] - g->alpha[i]));
  CHECK(worst <= 10.0 * std::pow(0.05, 4));
  CHECK(std::abs(b.state().t) <= 1e-12);
}

TEST_CASE("directional derivative vanishes for Y = 0") {
  const auto g = ball(2, 0.25);
  const FlowState s = FlowState::initial(g);
  const DirectionalResult r = directional_derivative(s, builtin_kernel("aggregation", 2), std::vector<double>(s.X.size(), 0.0), {});
  for (double x : r.total()) CHECK(x == 0.0);
}
