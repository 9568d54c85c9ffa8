#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmv/model.hpp"

using namespace cmv;

namespace {

double eval(const VectorField& f, double x) {
  double out = 0.0;
  f(std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out;
}

VectorField clipped_cube(double clip) {
  return [clip](std::span<const double> x, std::span<double> out) {
    out[0] = std::clamp(x[0] * x[0] * x[0], -clip, clip);
  };
}

/// Roots of h on [lo, hi]: sign changes on a grid of `n` cells refined by bisection.
template <class H>
std::vector<double> bisect_roots(const H& h, double lo, double hi, int n) {
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    double a = lo + (hi - lo) * i / n, b = lo + (hi - lo) * (i + 1) / n;
    double fa = h(a), fb = h(b);
    if (fa == 0.0) {
      roots.push_back(a);
      continue;
    }
    if (fa * fb > 0.0) continue;
    for (int it = 0; it < 100; ++it) {
      const double m = 0.5 * (a + b);
      if ((h(m) > 0.0) == (fa > 0.0)) {
        a = m;
        fa = h(m);
      } else {
        b = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("double well drift and interaction values") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  CHECK(eval(m->G, 0.5) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(eval(m->F, -2.0) == 16.0);
  CHECK(m->dim == 1);
}

TEST_CASE("double well Lipschitz constant matches a grid maximum") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  double grid_max = 0.0;
  for (int i = 0; i <= 300000; ++i) {
    const double x = -1.5 + 3.0 * i / 300000;
    grid_max = std::max(grid_max, std::abs(1.0 - 3.0 * x * x));
  }
  CHECK(m->constants.L_G == doctest::Approx(grid_max).epsilon(1e-12));
  CHECK(m->constants.L_G == 5.75);
  CHECK(m->constants.c_alpha == m->constants.alpha_F - m->constants.L_G);
  CHECK(m->constants.c_alpha == 2.25);
}

TEST_CASE("double well outer branch is linear and continuous") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  const double gA = 1.5 - 1.5 * 1.5 * 1.5;
  CHECK(eval(m->G, 1.5) == doctest::Approx(gA));
  CHECK(eval(m->G, 2.5) == doctest::Approx(gA + (1.0 - 3.0 * 2.25) * 1.0));
  CHECK(eval(m->G, -2.5) == doctest::Approx(-eval(m->G, 2.5)));
}

TEST_CASE("double well parameter validation") {
  CHECK_THROWS(make_double_well(8, 1.0, 0.1, 0.5));
  CHECK_THROWS(make_double_well(0, 1.5, 0.1, 0.5));
  const auto weak = make_double_well(2, 1.5, 0.1, 0.5);
  CHECK(weak->constants.c_alpha < 0.0);
  CHECK_FALSE(weak->warnings.empty());
  CHECK(make_double_well(8, 1.5, 0.1, 0.5)->warnings.empty());
}

TEST_CASE("ou variant drift") {
  const auto m = make_ou_variant(1.0, nullptr, 0.2, 0.5);
  const double x = 2.0, mean = 2.0;
  const double drift = eval(m->G, x) + eval(m->F, x - mean) + eval(m->H, mean);
  CHECK(drift == -2.0);
  CHECK_THROWS(make_ou_variant(0.0, nullptr, 0.2, 0.5));
}

TEST_CASE("ou variant fixed points of a clipped cube") {
  const auto f = clipped_cube(8.0);
  const auto found = ou_fixed_points(f, 1.0, -3.0, 3.0);
  const auto oracle = bisect_roots([&](double m) { return eval(f, m) - m; }, -3.0, 3.0, 601);
  REQUIRE(found.size() == oracle.size());
  for (std::size_t i = 0; i < found.size(); ++i) CHECK(found[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
  for (double p : {-1.0, 0.0, 1.0}) {
    CHECK(std::any_of(found.begin(), found.end(), [p](double r) { return std::abs(r - p) < 1e-9; }));
  }
}

TEST_CASE("counterexample validates sigma") {
  CHECK_THROWS(make_variance_counterexample([](double v) { return 1.0 - v; }, 0.5));
  const auto m = make_variance_counterexample([](double) { return 2.0; }, 0.5);
  // Particle intensity is sigma(v)/sqrt(2), so dv/dt = -2v + 2 and v* = 1.
  const double s = m->idiosyncratic_intensity(0.3);
  CHECK(-2.0 * 1.0 + s * s == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("kappa for a linear drift is constant") {
  const auto m = make_linear(1.0, 1.0, 0.0, 1.0);
  for (double r : {1e-3, 0.5, 7.0}) CHECK(kappa_canonical(*m, r) == 2.0);
  for (double r : {0.1, 1.0, 5.0}) CHECK(kappa_scan(m->G, 1, 1.0, r) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(kappa_canonical(*m, 0.0));
}

TEST_CASE("double well kappa near zero and at large r") {
  const auto m = make_double_well(8, 1.5, 0.1, 1.0);
  const double r = 1e-4;
  double worst_slope = -1e300;
  for (int i = 0; i <= 60000; ++i) {
    const double x = -3.0 + 6.0 * i / 60000;
    worst_slope = std::max(worst_slope, (eval(m->G, x + r) - eval(m->G, x)) / r);
  }
  CHECK(kappa_canonical(*m, r) == doctest::Approx(-2.0 * worst_slope).epsilon(1e-6));
  CHECK(kappa_canonical(*m, r) == doctest::Approx(-2.0).epsilon(1e-6));

  for (double big : {8.0, 20.0, 50.0}) {
    double slope = -1e300;
    for (int i = 0; i <= 20000; ++i) {
      const double x = -60.0 + 120.0 * i / 20000;
      slope = std::max(slope, (eval(m->G, x + big) - eval(m->G, x)) / big);
    }
    CHECK(-2.0 * slope > 0.0);
    CHECK(kappa_canonical(*m, big) > 0.0);
    CHECK(kappa_canonical(*m, big) == doctest::Approx(-2.0 * slope).epsilon(1e-6));
  }
}

TEST_CASE("closed-form kappa agrees with the midpoint scan") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.7);
  ScanOptions scan;
  scan.radius = 12.0;
  scan.points = 24001;
  for (double r : {0.05, 0.5, 1.0, 2.0, 2.9, 3.0, 3.5, 6.0, 15.0}) {
    CHECK(kappa_scan(m->G, 1, 0.7, r, scan) == doctest::Approx(m->kappa(r)).epsilon(1e-6));
  }
}

TEST_CASE("kappa table interpolates and clamps") {
  const KappaTable table([](double r) { return r; }, 1e-3, 50.0, 2048);
  CHECK(table(1.0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(table(100.0) == doctest::Approx(50.0));
  CHECK(table(1e-6) == doctest::Approx(1e-3));
}

TEST_CASE("built-in models pass every applicable assumption clause") {
  std::vector<ModelPtr> models{make_double_well(8, 1.5, 0.1, 0.5), make_double_well(8, 1.5, 0.05, 0.7),
                               make_ou_variant(1.0, nullptr, 0.2, 0.5),
                               make_variance_counterexample(
                                   [](double v) { return 2.0 * std::sqrt(std::max(v, 0.01)); }, 0.5),
                               make_linear(1.0, 2.0, 0.0, 0.5)};
  for (const auto& m : models) {
    CAPTURE(m->name);
    const AssumptionReport report = check_assumptions(*m, 10000, 10.0, 1e-9);
    for (const auto& c : report.clauses) {
      CAPTURE(c.clause);
      CAPTURE(c.detail);
      CAPTURE(c.witness);
      if (c.applicable) CHECK(c.passed);
    }
    if (m->kappa) CHECK(kappa_negative_integral(m->kappa) < 1e3);
  }
}

TEST_CASE("assumption checker witnesses") {
  SUBCASE("strongly monotone interaction") {
    const auto m = make_linear(1.0, 8.0, 0.0, 0.5);
    const auto report = check_assumptions(*m, 1000, 10.0, 1e-9);
    const auto* mono = report.find("F.monotonicity");
    REQUIRE(mono);
    CHECK(mono->passed);
    CHECK(mono->witness >= 8.0 - 1e-9);
  }
  SUBCASE("anti-confining drift fails confinement") {
    const auto m = make_custom(1, [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; },
                               [](std::span<const double> x, std::span<double> out) { out[0] = -x[0]; }, 0.1, 1.0);
    const auto report = check_assumptions(*m, 1000, 10.0, 1e-9);
    const auto* conf = report.find("G.confinement");
    REQUIRE(conf);
    CHECK(conf->applicable);
    CHECK_FALSE(conf->passed);
    CHECK_FALSE(conf->witness_x.empty());
    CHECK_FALSE(report.all_passed());
  }
  SUBCASE("double well Lipschitz witness") {
    const auto m = make_double_well(8, 1.5, 0.1, 0.5);
    const auto report = check_assumptions(*m, 10000, 10.0, 1e-9);
    const auto* lip = report.find("G.lipschitz");
    REQUIRE(lip);
    CHECK(lip->passed);
    CHECK(lip->witness <= 5.75 + 1e-9);
    CHECK(lip->witness > 5.0);
  }
}

TEST_CASE("ledger kappa2 is the sup of kappa on (0, 1]") {
  const auto m = make_double_well(8, 1.5, 0.1, 1.0);
  CHECK(m->constants.kappa2 == doctest::Approx(m->kappa(1.0)));
  CHECK(std::isnan(make_double_well(8, 1.5, 0.1, 0.0)->constants.kappa2));
}

}
