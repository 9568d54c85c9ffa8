#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "cmv/ensemble.hpp"

using namespace cmv;

TEST_SUITE("ensemble") {

TEST_CASE("no drift and no noise leaves positions unchanged") {
  const auto m = make_linear(0.0, 0.0, 0.0, 0.0);
  ParticleEnsemble ens(m, {0.3, -1.0, 2.5}, 1, 0);
  const std::vector<double> before(ens.positions().begin(), ens.positions().end());
  std::vector<double> dw{0.7};
  for (int k = 0; k < 10; ++k) em_step(ens, 0.1, dw);
  CHECK(std::vector<double>(ens.positions().begin(), ens.positions().end()) == before);
  CHECK(ens.time() == doctest::Approx(1.0));
  CHECK(ens.steps() == 10u);
}

TEST_CASE("one step pulls two particles toward their mean") {
  const auto m = make_linear(0.0, 1.0, 0.0, 0.0);
  ParticleEnsemble ens(m, {0.0, 2.0}, 1, 0);
  std::vector<double> dw{0.0};
  em_step(ens, 0.1, dw);
  CHECK(ens.positions()[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(ens.positions()[1] == doctest::Approx(1.9).epsilon(1e-15));
}

TEST_CASE("common noise is a rigid shift") {
  const auto m = make_linear(0.0, 0.0, 0.0, 1.0);
  ParticleEnsemble ens(m, {0.0, 1.0, 3.0}, 1, 0);
  const double v0 = empirical_stats(ens).v;
  std::vector<double> dw{0.25};
  em_step(ens, 0.01, dw);
  CHECK(ens.positions()[0] == 0.25);
  CHECK(ens.positions()[1] == 1.25);
  CHECK(ens.positions()[2] == 3.25);
  CHECK(empirical_stats(ens).v == doctest::Approx(v0).epsilon(1e-15));
}

TEST_CASE("empirical statistics") {
  auto s = empirical_stats(std::vector<double>{-1.0, 1.0}, 1);
  CHECK(s.mu1[0] == 0.0);
  CHECK(s.mu2 == 1.0);
  CHECK(s.v == 1.0);
  s = empirical_stats(std::vector<double>{1.0, 1.0, 1.0}, 1);
  CHECK(s.mu1[0] == 1.0);
  CHECK(s.mu2 == 1.0);
  CHECK(s.v == 0.0);

  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  double mean = 0.0;
  for (double v : x) mean += v / 4.0;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean) / 4.0;
  CHECK(empirical_stats(x, 1).v == var);
  CHECK(var == 1.25);

  CHECK_THROWS(empirical_stats(std::vector<double>{1.0}, 1));
}

TEST_CASE("ensemble invariants are enforced") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  CHECK_THROWS_AS(ParticleEnsemble(m, {1.0}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(ParticleEnsemble(m, {1.0, std::numeric_limits<double>::quiet_NaN()}, 1, 0), NumericalFault);

  ParticleEnsemble ens(m, {0.0, 1.0}, 1, 0);
  std::vector<double> dw{0.0};
  CHECK_THROWS_AS(em_step(ens, 0.1, dw), NumericalFault);  // 0.1 * 5.75 > 0.5
  CHECK_NOTHROW(em_step(ens, 0.5 / 5.75, dw));
  CHECK(max_stable_dt(*m) == doctest::Approx(0.5 / 5.75));
}

TEST_CASE("non-finite positions fault with step and particle") {
  const auto m = make_linear(-1.0, 0.0, 0.0, 0.0);  // G(x) = x grows
  ParticleEnsemble ens(m, {1.0, 1e307}, 1, 0);
  std::vector<double> dw{0.0};
  try {
    for (int k = 0; k < 10; ++k) em_step(ens, 0.5, dw);
    FAIL("expected a fault");
  } catch (const NumericalFault& e) {
    CHECK(e.particle() == 1u);
    CHECK(e.step() != NumericalFault::kUnknown);
  }
}

TEST_CASE("linear contraction follows the discrete map exactly") {
  const auto m = make_linear(0.0, 1.0, 0.0, 0.0);
  SimulateOptions opt;
  opt.dt = 1e-2;
  opt.T = 1.0;
  opt.record_every = 10;
  const auto traj = simulate(m, InitialLaw::gaussian({0.0}, 1.0), 1000, opt, 3);
  const double v0 = traj.v.front();
  const double steps = 100.0;
  CHECK(traj.v.back() == doctest::Approx(v0 * std::pow(1.0 - opt.dt, 2.0 * steps)).epsilon(1e-12));
  CHECK(traj.v.back() == doctest::Approx(v0 * std::exp(-2.0)).epsilon(0.03));
  CHECK(traj.times.back() == 1.0);
  CHECK(traj.size() == 11u);
  for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.times[k] > traj.times[k - 1]);
}

TEST_CASE("last step is shortened to land on T") {
  CHECK(step_count(0.3, 1.0) == 4u);
  CHECK(step_count(0.25, 1.0) == 4u);
  const auto m = make_linear(0.0, 0.0, 0.0, 0.0);
  SimulateOptions opt;
  opt.dt = 0.3;
  opt.T = 1.0;
  opt.record_every = 2;
  const auto traj = simulate(m, InitialLaw::point_mass({0.0}), 2, opt, 1);
  CHECK(traj.times == std::vector<double>{0.0, 0.6, 1.0});
  CHECK_THROWS(step_count(0.0, 1.0));
  CHECK_THROWS(step_count(2.0, 1.0));
}

TEST_CASE("double well without common noise stays in its well") {
  const auto m = make_double_well(8, 1.5, 0.05, 0.0);
  SimulateOptions opt;
  opt.dt = 5e-3;
  opt.T = 20.0;
  opt.record_every = 100;
  const auto traj = simulate(m, InitialLaw::point_mass({1.0}), 512, opt, 21);
  for (std::size_t k = 0; k < traj.size(); ++k) CHECK(std::abs(traj.mu1[k] - 1.0) < 0.3);
}

TEST_CASE("ou variant conditional variance approaches sigma^2/2") {
  const auto m = make_ou_variant(1.0, nullptr, 0.2, 0.5);
  SimulateOptions opt;
  opt.dt = 5e-3;
  opt.T = 10.0;
  opt.record_every = 200;
  const auto traj = simulate(m, InitialLaw::point_mass({0.0}), 4096, opt, 8);
  CHECK(traj.v.back() == doctest::Approx(0.02).epsilon(0.1));
}

TEST_CASE("initial laws") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  auto ens = sample_initial(m, InitialLaw::point_mass({1.0}), 4, 1);
  CHECK(std::vector<double>(ens.positions().begin(), ens.positions().end()) == std::vector<double>{1, 1, 1, 1});

  const std::size_t N = 100000;
  auto two = sample_initial(m, InitialLaw::two_point({-1.0}, {1.0}), N, 2);
  const auto s2 = empirical_stats(two);
  CHECK(std::abs(s2.mu1[0]) < 5.0 / std::sqrt(double(N)));
  CHECK(std::abs(s2.v - 1.0) < 5.0 / std::sqrt(double(N)));

  auto gauss = sample_initial(m, InitialLaw::gaussian({0.0}, 0.25), N, 3);
  const double se = 0.25 * std::sqrt(2.0 / double(N - 1));
  CHECK(std::abs(empirical_stats(gauss).v - 0.25) < 3.0 * se);

  CHECK_THROWS(InitialLaw::gaussian({0.0}, 0.0));
  CHECK_THROWS(InitialLaw::gaussian({0.0}, -1.0));
  CHECK_THROWS(sample_initial(m, InitialLaw::point_mass({0.0, 0.0}), 4, 1));
}

TEST_CASE("initial positions do not depend on the common stream") {
  const auto a = sample_positions(InitialLaw::gaussian({0.0}, 1.0), 64, derive_streams(5, 0, Role::initial));
  NormalStream common(derive_streams(5, 0, Role::common));
  std::vector<double> c(64);
  for (auto& x : c) x = common.next();
  CHECK(a != c);
}

TEST_CASE("identical seeds give identical trajectories") {
  const auto m = make_double_well(8, 1.5, 0.1, 0.5);
  SimulateOptions opt;
  opt.dt = 5e-3;
  opt.T = 1.0;
  opt.record_every = 20;
  const auto a = simulate(m, InitialLaw::gaussian({0.0}, 1.0), 512, opt, 99, 4);
  const auto b = simulate(m, InitialLaw::gaussian({0.0}, 1.0), 512, opt, 99, 4);
  std::ostringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  CHECK(sa.str() == sb.str());
  const auto c = simulate(m, InitialLaw::gaussian({0.0}, 1.0), 512, opt, 99, 5);
  CHECK(c.mu1 != a.mu1);
}

TEST_CASE("common noise equivariance without drift or idiosyncratic noise") {
  const auto m = make_linear(0.0, 0.0, 0.0, 1.0);
  SimulateOptions opt;
  opt.dt = 1e-2;
  opt.T = 2.0;
  std::vector<std::vector<double>> finals;
  std::vector<StatsTrajectory> trajs;
  for (std::uint64_t r : {0u, 1u}) {
    // Same initial stream in both realizations; only the common stream differs.
    auto x = sample_positions(InitialLaw::gaussian({0.0}, 1.0), 256, derive_streams(4, 0, Role::initial));
    ParticleEnsemble ens(m, x, 4, r);
    NormalStream common(derive_streams(4, r, Role::common));
    trajs.push_back(simulate(ens, common, opt));
    finals.emplace_back(ens.positions().begin(), ens.positions().end());
  }
  const double shift = finals[1][0] - finals[0][0];
  CHECK(std::abs(shift) > 1e-3);
  for (std::size_t i = 0; i < finals[0].size(); ++i) {
    CHECK(finals[1][i] - finals[0][i] == doctest::Approx(shift).epsilon(1e-12).scale(1.0));
  }
  for (std::size_t k = 0; k < trajs[0].size(); ++k) {
    CHECK(trajs[1].v[k] == doctest::Approx(trajs[0].v[k]).epsilon(1e-12));
  }
}

TEST_CASE("halving dt halves the pathwise error of the mean") {
  // Mean dynamics only (sigma = 0); fine increments are summed pairwise for the coarse path.
  const auto m = make_ou_variant(1.0, [](std::span<const double> x, std::span<double> out) {
    out[0] = std::sin(2.0 * x[0]);
  }, 0.0, 0.5);
  const double T = 2.0;
  auto terminal = [&](int level, std::uint64_t r) {
    const int fine_steps = 1 << 10;
    const int stride = 1 << level;
    NormalStream noise(derive_streams(31, r, Role::common));
    const double h_fine = T / fine_steps;
    ParticleEnsemble ens(m, {0.4, 0.6}, 31, r);
    std::vector<double> dw(1);
    double acc = 0.0;
    for (int k = 1; k <= fine_steps; ++k) {
      acc += std::sqrt(h_fine) * noise.next();
      if (k % stride == 0) {
        dw[0] = acc;
        acc = 0.0;
        em_step(ens, h_fine * stride, dw);
      }
    }
    return empirical_stats(ens).mu1[0];
  };
  double diff_coarse = 0.0, diff_fine = 0.0;
  for (std::uint64_t r = 0; r < 128; ++r) {
    const double a = terminal(4, r), b = terminal(3, r), c = terminal(2, r);
    diff_coarse += std::abs(a - b) / 128.0;
    diff_fine += std::abs(b - c) / 128.0;
  }
  const double dt_coarse = T / (1 << 6);
  CHECK(diff_coarse < dt_coarse);
  CHECK(diff_coarse / diff_fine > 1.4);
  CHECK(diff_coarse / diff_fine < 2.9);
}

TEST_CASE("trajectory csv layout") {
  StatsTrajectory t;
  t.dim = 2;
  t.times = {0.0, 0.5};
  t.mu1 = {1.0, 2.0, 3.0, 4.0};
  t.mu2 = {5.0, 6.0};
  t.v = {0.1, 0.2};
  t.add_extra("theta", {7.0, 8.0});
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str() ==
        "t,mu1_0,mu1_1,mu2,v,theta\n"
        "0,1,2,5,0.10000000000000001,7\n"
        "0.5,3,4,6,0.20000000000000001,8\n");
}

}
