#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/singular_integrals.hpp"

using namespace patchflow;

namespace {

ScalarField disc(int n, double h) {
  std::vector<double> lo(n, -1.0), hi(n, 1.0);
  return sample_grid_field(n, lo, hi, h, [n](const double* x) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += x[d] * x[d];
    return r2 < 1.0 ? 1.0 : 0.0;
  }, 8);
}

}  // namespace

TEST_CASE("rankine velocity inside and outside the patch") {
  const KernelSpec k = builtin_kernel("biot_savart", 2);
  const ScalarField f = disc(2, 1.0 / 64);
  const QuadratureResult r = convolve_T(k, f, {0.5, 0.0, 2.0, 0.0, 0.0, -0.5}, QuadratureConfig{});
  // Solid rotation at rate 1/2 inside, v = (-x2, x1) / (2 |x|^2) outside.
  CHECK(std::abs(r.values[0]) <= 1e-3);
  CHECK(std::abs(r.values[1] - 0.25) <= 1e-3);
  CHECK(std::abs(r.values[2]) <= 1e-3);
  CHECK(std::abs(r.values[3] - 0.25) <= 1e-3);
  CHECK(std::abs(r.values[4] - 0.25) <= 1e-3);
  CHECK(std::abs(r.values[5]) <= 1e-3);
}

TEST_CASE("aggregation velocity inside a ball is -x/n") {
  const KernelSpec k = builtin_kernel("aggregation", 3);
  const ScalarField f = disc(3, 0.05);
  const QuadratureResult r = convolve_T(k, f, {0.4, 0.1, -0.2}, QuadratureConfig{});
  CHECK(r.values[0] == doctest::Approx(-0.4 / 3).epsilon(1e-2));
  CHECK(r.values[1] == doctest::Approx(-0.1 / 3).epsilon(2e-2));
  CHECK(r.values[2] == doctest::Approx(0.2 / 3).epsilon(1e-2));
}

TEST_CASE("velocity gradient deep inside the patch is the c term") {
  const KernelSpec k = builtin_kernel("biot_savart", 2);
  const SphereIntegrals si = sphere_integrals(k, 1024);
  const ScalarField f = disc(2, 1.0 / 32);
  const QuadratureResult r = velocity_gradient(k, si, f, {1.0 / 64, -3.0 / 64}, QuadratureConfig{});
  CHECK(r.width == 4);
  CHECK(std::abs(r.values[0]) <= 2e-2);
  CHECK(r.values[1] == doctest::Approx(0.5).epsilon(2e-2));
  CHECK(r.values[2] == doctest::Approx(-0.5).epsilon(2e-2));
  CHECK(std::abs(r.values[3]) <= 2e-2);
}

TEST_CASE("principal value sums reject kernels without zero sphere mean") {
  const ScalarKernel bad = [](const double* x) { return 1.0 / (x[0] * x[0] + x[1] * x[1]); };
  try {
    require_zero_sphere_mean(bad, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_cz_kernel);
  }
  const ScalarKernel good = [](const double* x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return (x[0] * x[0] - x[1] * x[1]) / (r2 * r2);
  };
  CHECK_NOTHROW(require_zero_sphere_mean(good, 2));
}

TEST_CASE("principal value of an odd kernel vanishes at the center of symmetric data") {
  const ScalarKernel odd = [](const double* x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return x[0] * x[1] / (r2 * r2);
  };
  const ScalarField f = disc(2, 1.0 / 16);
  QuadratureConfig q;
  const QuadratureResult r = convolve_S_pv(odd, f, {0.0, 0.0}, q);
  CHECK(std::abs(r.values[0]) <= 1e-12);
  CHECK(r.epsilon == doctest::Approx(q.exclusion_radius(f.h)));
}

TEST_CASE("quadrature results do not depend on the thread count") {
  const KernelSpec k = builtin_kernel("aggregation", 2);
  const ScalarField f = disc(2, 1.0 / 32);
  std::vector<double> targets;
  for (int i = 0; i < 37; ++i) {
    targets.push_back(-1.2 + 0.07 * i);
    targets.push_back(0.3 - 0.03 * i);
  }
  std::vector<std::vector<double>> out;
  for (int t : {1, 2, 8}) {
    set_thread_count(t);
    out.push_back(convolve_T(k, f, targets, QuadratureConfig{}).values);
  }
  set_thread_count(1);
  CHECK(out[0] == out[1]);
  CHECK(out[0] == out[2]);
}

TEST_CASE("cell_value looks up the containing sample") {
  const ScalarField f = sample_grid_field(2, {0, 0}, {1, 1}, 0.5, [](const double* x) { return x[0] + 10 * x[1]; });
  const double in[2] = {0.6, 0.1}, out[2] = {1.6, 0.1};
  CHECK(cell_value(f, in) == doctest::Approx(0.75 + 2.5));
  CHECK(cell_value(f, out) == 0.0);
}

TEST_CASE("convolve_T is linear in f and translation equivariant") {
  const KernelSpec k = builtin_kernel("mixed2d", 2, {1.0, 0.5});
  const ScalarField f = sample_grid_field(2, {-1, -1}, {1, 1}, 0.1, [](const double* x) { return 1.0 + x[0] * x[1]; });
  const std::vector<double> targets = {0.03, 0.41, 1.7, -0.2};
  const auto a = convolve_T(k, f, targets, QuadratureConfig{}).values;
  ScalarField g = f;
  for (auto& v : g.values) v *= 2.0;
  const auto b = convolve_T(k, g, targets, QuadratureConfig{}).values;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(2.0 * a[i]).epsilon(1e-14));

  // Shift by a whole number of cells so the sub-cell splits line up.
  ScalarField s = f;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.points[2 * i] += 0.5;
    s.points[2 * i + 1] -= 0.3;
  }
  s.update_support_box();
  std::vector<double> shifted = targets;
  for (std::size_t i = 0; i < shifted.size(); i += 2) {
    shifted[i] += 0.5;
    shifted[i + 1] -= 0.3;
  }
  const auto c = convolve_T(k, s, shifted, QuadratureConfig{}).values;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(c[i] - a[i]) <= 1e-12);
}

TEST_CASE("divergence of the aggregation field is -rho inside the ball") {
  const KernelSpec k = builtin_kernel("aggregation", 3);
  const SphereIntegrals si = sphere_integrals(k, default_sphere_nodes(3));
  const ScalarField f = disc(3, 0.05);
  const QuadratureResult r = velocity_gradient(k, si, f, {0.1, -0.05, 0.2}, QuadratureConfig{});
  const double div = r.values[0] + r.values[4] + r.values[8];
  CHECK(div == doctest::Approx(-1.0).epsilon(2e-2));
}

TEST_CASE("hypersingular operator vanishes for constant g and is linear in f") {
  const KernelSpec k = builtin_kernel("biot_savart", 2);
  const ScalarKernel H = [&](const double* x) {
    double h[8];
    k.hessian(x, h);
    return h[(0 * 2 + 0) * 2 + 1];
  };
  const ScalarField f = disc(2, 1.0 / 16);
  const std::vector<double> targets = {0.1, 0.2};
  const auto zero = convolve_hypersingular(H, [](const double*) { return 3.0; }, f, targets, QuadratureConfig{});
  CHECK(zero.values[0] == 0.0);
  const ScalarKernel g = [](const double* x) { return x[0] + 0.5 * x[1] * x[1]; };
  const auto a = convolve_hypersingular(H, g, f, targets, QuadratureConfig{}).values;
  ScalarField f2 = f;
  for (auto& v : f2.values) v *= 2.0;
  const auto b = convolve_hypersingular(H, g, f2, targets, QuadratureConfig{}).values;
  CHECK(b[0] == doctest::Approx(2.0 * a[0]).epsilon(1e-14));
}
