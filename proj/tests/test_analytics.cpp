#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cmv/analytics.hpp"

using namespace cmv;

namespace {

StatsTrajectory pinned(double at, std::size_t n) {
  StatsTrajectory t;
  for (std::size_t k = 0; k < n; ++k) {
    t.times.push_back(double(k));
    t.mu1.push_back(at);
    t.mu2.push_back(at * at);
    t.v.push_back(0.0);
  }
  return t;
}

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("fit_decay recovers exact exponentials") {
  std::vector<double> t, y, c;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.05 * k);
    y.push_back(std::exp(-3.0 * t.back()));
    c.push_back(0.7);
  }
  const auto fit = fit_decay(t, y, 0.0, 5.0);
  CHECK(std::abs(fit.rate - 3.0) < 1e-9);
  CHECK(fit.points == 101u);
  CHECK(fit.rms_residual < 1e-12);
  CHECK(std::abs(fit_decay(t, c, 0.0, 5.0).rate) < 1e-12);
  const auto window = fit_decay(t, y, 1.0, 2.0);
  CHECK(window.points == 21u);
  CHECK(std::abs(window.rate - 3.0) < 1e-9);
}

TEST_CASE("fit_decay with multiplicative noise") {
  NormalStream s(derive_streams(1, 0, Role::common));
  std::vector<double> t, y;
  for (int k = 0; k <= 200; ++k) {
    t.push_back(0.025 * k);
    y.push_back(std::exp(-t.back()) * (1.0 + 0.01 * s.next()));
  }
  const double rate = fit_decay(t, y, 0.0, 5.0).rate;
  CHECK(rate > 0.95);
  CHECK(rate < 1.05);
}

TEST_CASE("fit_decay rejects bad input") {
  const std::vector<double> t{0, 1, 2, 3}, y{1, 0, 1, 1}, one{1, 1, 1, 1};
  CHECK_THROWS(fit_decay(t, y, 0.0, 2.0));
  CHECK_NOTHROW(fit_decay(t, y, 2.0, 3.0));
  CHECK_THROWS(fit_decay(t, one, 3.0, 3.0));
  CHECK_THROWS(fit_decay(t, one, 5.0, 6.0));
}

TEST_CASE("variance bound on the exact linear case") {
  const auto m = make_linear(0.0, 2.0, 0.0, 0.5);
  CHECK(m->constants.c_alpha == 2.0);
  SimulateOptions o;
  o.dt = 1e-3;
  o.T = 2.0;
  o.record_every = 50;
  const std::size_t N = 1024;
  const auto traj = simulate(m, InitialLaw::gaussian({0.0}, 1.0), N, o, 3);
  const auto rep = verify_variance_bound(traj, m->constants, 1, 0.0, N);
  CHECK(rep.passed());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double exact = traj.v[0] * std::exp(-4.0 * traj.times[k]);
    CHECK(rep.bound[k] == doctest::Approx(exact + 5.0 * traj.v[k] / std::sqrt(double(N))));
    CHECK(traj.v[k] == doctest::Approx(exact).epsilon(0.01));
  }
}

TEST_CASE("double-well variance sits below its asymptotic bound") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  CHECK(m->constants.c_alpha == doctest::Approx(2.25));
  SimulateOptions o;
  o.dt = 5e-3;
  o.T = 10.0;
  o.record_every = 100;
  const auto traj = simulate(m, InitialLaw::gaussian({1.0}, 0.5), 1024, o, 4);
  const auto rep = verify_variance_bound(traj, m->constants, 1, 0.1, 1024);
  CHECK(rep.passed());
  CHECK(rep.bound.back() == doctest::Approx(0.01 / 2.25 + 0.5 * std::exp(-45.0) + 5.0 * traj.v.back() / 32.0));
  CHECK(traj.v.back() < 0.01 / 2.25);
}

TEST_CASE("without idiosyncratic noise the variance vanishes") {
  const auto m = make_double_well(8, 1.5, 0.0, 0.5);
  SimulateOptions o;
  o.dt = 5e-3;
  o.T = 10.0 / m->constants.c_alpha;
  o.record_every = 100;
  const auto traj = simulate(m, InitialLaw::gaussian({0.5}, 1.0), 512, o, 5);
  CHECK(traj.v.back() < 1e-4);
}

TEST_CASE("variance bound reports violations and rejects c_alpha <= 0") {
  StatsTrajectory t;
  t.times = {0.0, 1.0};
  t.mu1 = {0.0, 0.0};
  t.mu2 = {1.0, 1.0};
  t.v = {1.0, 1.0};
  ConstantsLedger ledger;
  ledger.c_alpha = 1.0;
  const auto rep = verify_variance_bound(t, ledger, 1, 0.0, 1u << 20);
  CHECK(rep.violations == 1u);
  CHECK_FALSE(rep.passed());
  CHECK(rep.worst_margin() < 0.0);
  CHECK(verify_variance_bound(t, ledger, 1, 0.0, 1u << 20, 1.0).passed());
  std::ostringstream os;
  rep.write_csv(os);
  CHECK(os.str().rfind("t,observed,bound,margin\n", 0) == 0);

  ledger.c_alpha = 0.0;
  CHECK_THROWS_AS(verify_variance_bound(t, ledger, 1, 0.0, 16), std::domain_error);
  const auto weak = make_double_well(5, 1.5, 0.1, 0.5);
  CHECK_THROWS_AS(verify_variance_bound(t, weak->constants, 1, 0.1, 16), std::domain_error);
}

TEST_CASE("ou reference closed form") {
  const auto inf = ou_variant_reference(1.0, 0.2, 0.5, 50.0, 1.0);
  CHECK(inf.conditional_variance == doctest::Approx(0.02));
  CHECK(inf.mean_variance == doctest::Approx(0.125));
  const auto zero = ou_variant_reference(1.0, 0.2, 0.5, 0.0, 1.0, 0.3);
  CHECK(zero.conditional_variance == 0.3);
  CHECK(zero.mean == 1.0);
  CHECK(zero.mean_variance == 0.0);
  const auto one = ou_variant_reference(1.0, 0.2, 0.5, 1.0, 2.0);
  CHECK(one.conditional_variance == doctest::Approx(0.02 * (1.0 - std::exp(-2.0))));
  CHECK(one.mean == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("ou reference against scalar SDE moments") {
  // dZ = -Z dt + 0.2 dW from 0, fine Euler steps.
  const std::size_t paths = 20000;
  const double dt = 1e-3;
  NormalStream s(derive_streams(6, 0, Role::common));
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    double z = 0.0;
    for (int k = 0; k < 1000; ++k) z += -z * dt + 0.2 * std::sqrt(dt) * s.next();
    sum += z;
    sum2 += z * z;
  }
  const double var = sum2 / paths - (sum / paths) * (sum / paths);
  const double expected = ou_variant_reference(1.0, 0.2, 0.5, 1.0, 0.0).conditional_variance;
  const double se = expected * std::sqrt(2.0 / double(paths));
  CHECK(std::abs(var - expected) < 4.0 * se + 2.0 * dt * expected);

  const VectorField zero = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  const auto mc = ou_variant_reference(1.0, zero, 0.2, 0.5, 1.0, 1.0, 0.0, 20000, 1e-3, 7);
  const auto exact = ou_variant_reference(1.0, 0.2, 0.5, 1.0, 1.0);
  const double se_mean = std::sqrt(exact.mean_variance / 20000.0);
  CHECK(std::abs(mc.mean - exact.mean) < 4.0 * se_mean + 1e-3);
  CHECK(std::abs(mc.mean_variance - exact.mean_variance) < 4.0 * exact.mean_variance * std::sqrt(2.0 / 20000.0) + 1e-3);
  CHECK(mc.conditional_variance == exact.conditional_variance);
}

TEST_CASE("counterexample reference") {
  const auto ref = counterexample_reference([](double) { return 2.0; }, 1.0, 0.0, 3.0);
  for (double t : {0.0, 0.5, 1.0, 2.0, 3.0}) CHECK(ref.v_at(t) == doctest::Approx(1.0 - std::exp(-2.0 * t)).epsilon(1e-9).scale(1e-12));
  CHECK(ref.mu1_stationary_variance() == 0.5);
  CHECK(ref.mu1_variance(10.0) == doctest::Approx(0.5 * (1.0 - std::exp(-20.0))));
  CHECK_THROWS_AS(counterexample_reference([](double v) { return 5.0 * v; }, 1.0, 1.0, 5.0), NumericalFault);
}

TEST_CASE("variance equilibria are the fixed points of sigma^2/4") {
  const ScalarFunction sig = [](double v) {
    const double p = v + 0.1 * (v - 0.25) * (v - 1.0) * (v - 2.25);
    return 2.0 * std::sqrt(p);
  };
  const auto eq = find_variance_equilibria(sig, 0.1, 3.0);
  REQUIRE(eq.size() == 3u);
  CHECK(eq[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(eq[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(eq[2] == doctest::Approx(2.25).epsilon(1e-9));
}

TEST_CASE("basin occupancy") {
  std::vector<StatsTrajectory> runs{pinned(1.0, 5), pinned(1.0, 5), pinned(-1.0, 5), pinned(-1.0, 5)};
  const auto occ = basin_occupancy(runs, {1.0, 0.0, -1.0}, 0.5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(occ.fraction(k, 0) == 0.5);
    CHECK(occ.fraction(k, 1) == 0.0);
    CHECK(occ.fraction(k, 2) == 0.5);
    CHECK(occ.merge_std[k] == 1.0);
  }
  const auto all = basin_occupancy({pinned(1.0, 3)}, {1.0}, 0.1);
  CHECK(all.fraction(2, 0) == 1.0);
  CHECK(population_std(std::vector<double>{1.0, 3.0}) == 1.0);
  std::ostringstream os;
  occ.write_csv(os);
  CHECK(os.str().rfind("t,occ_1,occ_0,occ_-1,merge_std\n", 0) == 0);
}

TEST_CASE("lipschitz functionals") {
  const auto mean = lipschitz_functional(LipschitzKind::clipped_mean);
  CHECK(mean.fn(std::vector<double>{1.0, 3.0}, 1) == 2.0);
  CHECK(mean.fn(std::vector<double>{100.0, 300.0}, 1) == kFunctionalClip);
  const auto w1 = lipschitz_functional(LipschitzKind::clipped_w1_to_point, 1.0);
  CHECK(w1.fn(std::vector<double>{0.0, 3.0}, 1) == 1.5);
  CHECK(w1.fn(std::vector<double>{50.0, 30.0}, 1) == kFunctionalClip);
  // 1-Lipschitz against W1 for equal-size samples: shift every point by 0.3.
  const std::vector<double> a{0.1, -0.4, 2.0}, b{0.4, -0.1, 2.3};
  CHECK(std::abs(mean.fn(a, 1) - mean.fn(b, 1)) <= 0.3 + 1e-15);
  CHECK(std::abs(w1.fn(a, 1) - w1.fn(b, 1)) <= 0.3 + 1e-15);
}

TEST_CASE("semigroup gap") {
  const auto phi = lipschitz_functional(LipschitzKind::clipped_mean);
  GapOptions o;
  o.N = 8;
  o.realizations = 8;
  o.dt = 1e-2;
  o.T = 1.0;
  const auto m = make_linear(1.0, 0.0, 0.1, 1.0);
  const auto same = semigroup_gap(m, phi, InitialLaw::point_mass({1.0}), InitialLaw::point_mass({1.0}), o, 3, 3);
  for (double g : same.gap) CHECK(g == 0.0);

  o.realizations = 1024;
  o.T = 2.0;
  o.exec = Exec::parallel;
  const auto gap = semigroup_gap(m, phi, InitialLaw::point_mass({1.0}), InitialLaw::point_mass({-1.0}), o, 1, 2);
  CHECK(gap.gap.front() == 2.0);
  const auto fit = fit_decay(gap.times, gap.gap, 0.0, 2.0);
  CHECK(fit.rate > 0.85);
  CHECK(fit.rate < 1.15);
}

TEST_CASE("exponential moment tracker") {
  StatsTrajectory t = pinned(0.0, 3);
  for (double e : exp_moment_tracker(t, 2.0)) CHECK(e == 1.0);
  t.v = {1.0, 1.0, 1.0};
  for (double e : exp_moment_tracker(t, 1.0)) CHECK(e == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS(exp_moment_tracker(t, 0.0));
}

TEST_CASE("double-well exponential moments stay below the variance-bound envelope") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  SimulateOptions o;
  o.dt = 5e-3;
  o.T = 10.0;
  o.record_every = 50;
  const auto traj = simulate(m, InitialLaw::gaussian({0.0}, 0.5), 1024, o, 8);
  const double c2 = 1.0;
  const double envelope = std::exp(2.0 * c2 * std::sqrt(traj.v[0] + 0.01 / m->constants.c_alpha)) * std::exp(0.05);
  for (double e : exp_moment_tracker(traj, c2)) CHECK(e <= envelope);
}

}
