#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "core/fields.hpp"
#include "core/pfld.hpp"

using namespace patchflow;

namespace {

ScalarField grid2(double h, const std::function<double(const double*)>& f) {
  return sample_grid_field(2, {-1.0, -1.0}, {1.0, 1.0}, h, f);
}

}  // namespace

TEST_CASE("sampled grid sits at cell centers") {
  const ScalarField f = grid2(0.5, [](const double* x) { return x[0]; });
  CHECK(f.size() == 16);
  CHECK(f.point(0)[0] == doctest::Approx(-0.75));
  CHECK(f.point(0)[1] == doctest::Approx(-0.75));
}

TEST_CASE("holder seminorm of |x|^gamma is at most one") {
  const double gamma = 0.5;
  const ScalarField f = grid2(0.05, [&](const double* x) { return std::pow(std::abs(x[0]), gamma); });
  const HolderEstimate est = estimate_holder(f, gamma, 100000, 3);
  CHECK(est.seminorm_gamma <= 1.0 + 1e-12);
  CHECK(est.seminorm_gamma >= 0.5);
  CHECK(est.sup_norm == doctest::Approx(std::sqrt(0.975)));
  CHECK(est.pairs_inspected <= 100000);
}

TEST_CASE("a larger pair budget never lowers the seminorm") {
  const ScalarField f = grid2(0.04, [](const double* x) { return std::sin(5 * x[0]) * std::cos(3 * x[1]); });
  double prev = 0.0;
  for (std::size_t budget : {500, 5000, 50000, 500000}) {
    const double s = estimate_holder(f, 0.7, budget, 11).seminorm_gamma;
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("pair selection is deterministic and nested") {
  const ScalarField f = grid2(0.1, [](const double*) { return 1.0; });
  const PairList a = select_pairs(2, f.points, f.h, 2000, 5);
  const PairList b = select_pairs(2, f.points, f.h, 2000, 5);
  CHECK(a == b);
  const PairList c = select_pairs(2, f.points, f.h, 4000, 5);
  std::set<std::pair<std::uint32_t, std::uint32_t>> big(c.begin(), c.end());
  for (const auto& p : a) CHECK(big.count(p) == 1);
}

TEST_CASE("pairwise product and composition inequalities hold") {
  const ScalarField f = grid2(0.05, [](const double* x) { return std::sin(4 * x[0]) + x[1] * x[1]; });
  const ScalarField g = resample(f, [](const double* x) { return std::cbrt(x[0] * x[1]); });
  const PairList pairs = select_pairs(2, f.points, f.h, 30000, 1);
  const double gamma = 0.4;
  std::vector<double> fg(f.size());
  double sf = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    fg[i] = f.values[i] * g.values[i];
    sf = std::max(sf, std::abs(f.values[i]));
    sg = std::max(sg, std::abs(g.values[i]));
  }
  const double lhs = seminorm_on_pairs(2, f.points, fg, pairs, gamma);
  const double rhs = sf * seminorm_on_pairs(2, f.points, g.values, pairs, gamma) +
                     seminorm_on_pairs(2, f.points, f.values, pairs, gamma) * sg;
  CHECK(lhs <= rhs);

  std::vector<double> mapped(f.points.size()), fx(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    mapped[2 * i] = 2.0 * f.points[2 * i] + 0.3 * f.points[2 * i + 1];
    mapped[2 * i + 1] = std::sin(f.points[2 * i + 1]);
    fx[i] = std::sqrt(std::abs(mapped[2 * i]));
  }
  const double comp = seminorm_on_pairs(2, f.points, fx, pairs, gamma);
  const double bound = seminorm_on_pairs(2, mapped, fx, pairs, gamma) *
                       std::pow(lipschitz_on_pairs(2, f.points, mapped, 2, pairs), gamma);
  CHECK(comp <= bound * (1 + 1e-12));
}

TEST_CASE("lipschitz constant of a linear map is bounded by its norm") {
  const ScalarField f = grid2(0.1, [](const double*) { return 0.0; });
  const PairList pairs = select_pairs(2, f.points, f.h, 1u << 20, 0);
  std::vector<double> y(f.points.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    y[2 * i] = 3.0 * f.points[2 * i];
    y[2 * i + 1] = 0.5 * f.points[2 * i + 1];
  }
  CHECK(lipschitz_on_pairs(2, f.points, y, 2, pairs) == doctest::Approx(3.0));
}

TEST_CASE("interpolation is exact for affine fields") {
  const GridVectorField F = sample_grid_vector(2, 2, {-1, -1}, {1, 1}, 0.1, [](const double* x, double* out) {
    out[0] = 1.0 + 2.0 * x[0] - x[1];
    out[1] = 0.5 * x[1];
  });
  const double x[2] = {0.123, -0.456};
  CHECK(interpolate(F, x, 0) == doctest::Approx(1.0 + 2.0 * x[0] - x[1]).epsilon(1e-13));
  CHECK(interpolate(F, x, 1) == doctest::Approx(0.5 * x[1]).epsilon(1e-13));
  const GradNorms g = estimate_grad_norms(F, 0.5);
  CHECK(g.sup == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.seminorm <= 1e-10);
}

TEST_CASE("norm_1_gamma of a constant field is its value") {
  const GridVectorField F = sample_grid_vector(2, 1, {-1, -1}, {1, 1}, 0.25, [](const double*, double* out) { out[0] = -3.0; });
  CHECK(norm_1_gamma(F, 0.5) == doctest::Approx(3.0));
}

TEST_CASE("support measure of the unit disc") {
  const double h = 0.01;
  const ScalarField f = grid2(h, [](const double* x) { return x[0] * x[0] + x[1] * x[1] < 1.0 ? 1.0 : 0.0; });
  CHECK(std::abs(support_measure(f) - M_PI) <= 8.0 * h);
}

TEST_CASE("pfld files round-trip") {
  const ScalarField f = grid2(0.25, [](const double* x) { return x[0] - 2 * x[1]; });
  const std::string path = "unit_field.pfld";
  write_field_pfld(path, f);
  const ScalarField g = read_field(path);
  CHECK(g.n == f.n);
  CHECK(g.values == f.values);
  CHECK(g.points == f.points);
  std::remove(path.c_str());
}
