#include <doctest.h>

#include <cmath>
#include <random>

#include "core/determinant.hpp"
#include "core/errors.hpp"
#include "core/kernels.hpp"
#include "core/sphere.hpp"

using namespace patchflow;

namespace {

Vec random_point(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec x(n);
  for (int d = 0; d < n; ++d) x[d] = g(rng);
  return x;
}

Mat random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST_CASE("builtin kernels are homogeneous of degree 1-n") {
  std::mt19937_64 rng(1);
  for (int n : {2, 3, 4}) {
    for (const char* name : {"biot_savart", "aggregation"}) {
      if (std::string(name) == "biot_savart" && n != 2) continue;
      const KernelSpec k = builtin_kernel(name, n);
      for (int t = 0; t < 10; ++t) {
        const Vec x = random_point(n, rng);
        for (double lam : {0.3, 2.0, 11.0}) {
          const Vec a = k.evaluate(Vec(lam * x)), b = std::pow(lam, 1 - n) * k.evaluate(x);
          CHECK((a - b).norm() <= 1e-13 * b.norm());
        }
      }
    }
  }
}

TEST_CASE("biot_savart matches the closed form") {
  const KernelSpec k = builtin_kernel("biot_savart", 2);
  Vec x(2);
  x << 2.0, 0.0;
  const Vec v = k.evaluate(x);
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(1.0 / (4.0 * M_PI)));
}

TEST_CASE("kernel gradient and hessian match central differences") {
  std::mt19937_64 rng(2);
  const double e = 1e-6;
  for (int n : {2, 3}) {
    const KernelSpec k = builtin_kernel("aggregation", n);
    const KernelSpec mixed = builtin_kernel("mixed2d", 2, {0.7, -1.3});
    for (const KernelSpec* kp : {&k, &mixed}) {
      if (kp->dimension() != n) continue;
      const Vec x = random_point(n, rng);
      const Mat G = kp->gradient(x);
      const auto H = kp->hessian(x);
      for (int i = 0; i < n; ++i) {
        Vec xp = x, xm = x;
        xp[i] += e;
        xm[i] -= e;
        const Vec fd = (kp->evaluate(xp) - kp->evaluate(xm)) / (2 * e);
        for (int j = 0; j < n; ++j) CHECK(G(i, j) == doctest::Approx(fd[j]).epsilon(1e-6));
        const Mat gfd = (kp->gradient(xp) - kp->gradient(xm)) / (2 * e);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) CHECK(H[i](a, b) == doctest::Approx(gfd(a, b)).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("custom kernel from a sphere profile agrees with the builtin") {
  const KernelSpec b = builtin_kernel("aggregation", 3);
  const Mat M = b.profile_matrix();
  const KernelSpec c = KernelSpec::custom("agg_custom", 3, [M](const double* s, double* g) {
    for (int j = 0; j < 3; ++j) g[j] = M(j, 0) * s[0] + M(j, 1) * s[1] + M(j, 2) * s[2];
  });
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vec x = random_point(3, rng);
    CHECK((c.evaluate(x) - b.evaluate(x)).norm() <= 1e-14);
    CHECK((c.gradient(x) - b.gradient(x)).norm() <= 1e-10);
  }
}

TEST_CASE("unknown kernel names are rejected") {
  try {
    builtin_kernel("no_such_kernel", 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_kernel);
  }
  CHECK_THROWS_AS(builtin_kernel("mixed2d", 3, {1.0, 1.0}), Error);
}

TEST_CASE("sphere rules carry the sphere area and are antipodal") {
  for (int n : {2, 3, 5}) {
    const SphereRule r = n <= 3 ? deterministic_sphere_rule(n, 256) : qmc_sphere_rule(n, 512, 9);
    double w = 0.0;
    for (double x : r.weights) w += x;
    CHECK(w == doctest::Approx(sphere_area(n)).epsilon(1e-12));
    // For every node, -node is also a node.
    for (std::size_t i = 0; i < r.size(); i += 17) {
      bool found = false;
      for (std::size_t j = 0; j < r.size() && !found; ++j) {
        double d = 0.0;
        for (int a = 0; a < n; ++a) d += std::abs(r.points[i * n + a] + r.points[j * n + a]);
        found = d < 1e-12;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("gauss_legendre is exact for polynomials of degree 2p-1") {
  std::vector<double> x, w;
  gauss_legendre(6, x, w);
  for (int deg = 0; deg <= 11; ++deg) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], deg);
    const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("sphere constants of the builtins equal M^T sigma / n") {
  for (int n : {2, 3}) {
    const KernelSpec k = builtin_kernel("aggregation", n);
    const SphereIntegrals si = sphere_integrals(k, default_sphere_nodes(n));
    const Mat expect = k.profile_matrix().transpose() * sphere_area(n) / n;
    CHECK((si.c - expect).cwiseAbs().maxCoeff() <= (n == 2 ? 1e-10 : 1e-6));
    CHECK(divergence_constant(si) == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(si.zero_mean_residual.cwiseAbs().maxCoeff() <= (n == 2 ? 1e-10 : 1e-6));
  }
  const SphereIntegrals bs = sphere_integrals(builtin_kernel("biot_savart", 2), 4096);
  CHECK(std::abs(bs.c(0, 1) - 0.5) <= 1e-10);
  CHECK(std::abs(bs.c(1, 0) + 0.5) <= 1e-10);
  CHECK(std::abs(divergence_constant(bs)) <= 1e-12);
}

TEST_CASE("sphere constants are linear in the kernel") {
  const double a = 0.8, b = -2.5;
  const SphereIntegrals mix = sphere_integrals(builtin_kernel("mixed2d", 2, {a, b}), 1024);
  const SphereIntegrals bs = sphere_integrals(builtin_kernel("biot_savart", 2), 1024);
  const SphereIntegrals ag = sphere_integrals(builtin_kernel("aggregation", 2), 1024);
  CHECK((mix.c - (a * ag.c + b * bs.c)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("determinant derivative matches central differences") {
  std::mt19937_64 rng(4);
  for (int n : {2, 3, 4, 5}) {
    for (int t = 0; t < 50; ++t) {
      const Mat DX = random_matrix(n, rng), DY = random_matrix(n, rng);
      const double e = 1e-5;
      const double fd = (det(Mat(DX + e * DY)) - det(Mat(DX - e * DY))) / (2 * e);
      CHECK(det_derivative(DX, DY) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("determinant of an identity derivative is the trace") {
  std::mt19937_64 rng(5);
  const Mat DY = random_matrix(4, rng);
  CHECK(det_derivative(Mat::Identity(4, 4), DY) == doctest::Approx(DY.trace()).epsilon(1e-14));
}

TEST_CASE("det_sum_expansion equals det(A + B)") {
  std::mt19937_64 rng(6);
  for (int n : {2, 3, 4}) {
    const Mat A = random_matrix(n, rng), B = random_matrix(n, rng);
    CHECK(det_sum_expansion(A, B) == doctest::Approx(det(Mat(A + B))).epsilon(1e-12));
  }
}

TEST_CASE("small determinants agree with LU") {
  std::mt19937_64 rng(7);
  for (int n : {1, 2, 3, 4, 6}) {
    const Mat A = random_matrix(n, rng);
    CHECK(det(A) == doctest::Approx(A.determinant()).epsilon(1e-12));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = A;
    CHECK(det_small(r.data(), n) == doctest::Approx(A.determinant()).epsilon(1e-12));
  }
  Mat A(3, 3);
  A << 1, 2, 3, 4, 5, 6, 7, 8, 10;
  const Mat c = complementary_submatrix(A, 1, 2);
  CHECK(c.rows() == 2);
  CHECK(c(0, 0) == 1);
  CHECK(c(0, 1) == 2);
  CHECK(c(1, 0) == 7);
  CHECK(c(1, 1) == 8);
}

TEST_CASE("determinant derivative worked examples") {
  Mat DX = Mat::Zero(2, 2), DY = Mat::Identity(2, 2);
  DX(0, 0) = 2.0;
  DX(1, 1) = 3.0;
  CHECK(det_derivative(DX, DY) == doctest::Approx(5.0).epsilon(1e-15));
  Mat Y(2, 2);
  Y << 0.25, -4.0, 9.0, 1.5;
  CHECK(det_derivative(Mat::Identity(2, 2), Y) == doctest::Approx(1.75).epsilon(1e-15));
  // Linear in DY.
  std::mt19937_64 rng(8);
  const Mat A = random_matrix(3, rng), B = random_matrix(3, rng), C = random_matrix(3, rng);
  CHECK(det_derivative(A, Mat(2.0 * B - C)) ==
        doctest::Approx(2.0 * det_derivative(A, B) - det_derivative(A, C)).epsilon(1e-13));
}
