#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cmv/ensemble.hpp"
#include "cmv/model.hpp"

namespace cmv {

struct DecayFit {
  double rate = 0.0;  ///< minus the slope of log(series) against t
  double intercept = 0.0;
  double rms_residual = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t points = 0;

  /// Header `rate,intercept,rms_residual,t_lo,t_hi,points` and one row.
  void write_csv(std::ostream& os) const;
};

/// Least-squares line through (t, log y) for t in [t_lo, t_hi]. Throws on
/// non-positive values inside the window or fewer than two points.
DecayFit fit_decay(std::span<const double> times, std::span<const double> series, double t_lo, double t_hi);

struct BoundReport {
  std::string bound_name;
  std::vector<double> times, observed, bound, margin;  ///< margin = bound - observed
  double tolerance = 0.0;
  std::size_t violations = 0;  ///< times with margin < -tolerance
  std::map<std::string, double> parameters;

  bool passed() const noexcept { return violations == 0; }
  double worst_margin() const;
  /// Header `t,observed,bound,margin`.
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

/// v(t) <= v(0) exp(-2 c_alpha t) + d sigma^2 / c_alpha + 5 v(t)/sqrt(N) at
/// every recorded time. Throws std::domain_error when c_alpha <= 0.
BoundReport verify_variance_bound(const StatsTrajectory& traj, const ConstantsLedger& ledger, int d, double sigma,
                                  std::size_t N, double tolerance = 0.0);

struct OuReference {
  double mean = 0.0;           ///< E_0 of the conditional mean
  double mean_variance = 0.0;  ///< Var_0 of the conditional mean
  double conditional_variance = 0.0;
};

/// Closed form for f = 0: conditional variance (sigma^2/2a)(1 - e^{-2at}) + v0 e^{-2at};
/// conditional mean Gaussian with mean y0 e^{-at} and variance (sigma0^2/2a)(1 - e^{-2at}).
OuReference ou_variant_reference(double a, double sigma, double sigma0, double t, double y0, double v0 = 0.0);

/// Nonzero f (d = 1): the conditional variance keeps its closed form; the
/// moments of the mean dy = (-a y + f(y)) dt + sigma0 dB0 come from `paths`
/// Euler paths of step dt.
OuReference ou_variant_reference(double a, const VectorField& f_map, double sigma, double sigma0, double t,
                                 double y0, double v0, std::size_t paths, double dt, std::uint64_t seed);

struct CounterexampleReference {
  std::vector<double> times;
  std::vector<double> v;
  double sigma0 = 0.0;

  /// Linear interpolation of the RK4 solution.
  double v_at(double t) const;
  /// Var_0 of the conditional mean started at a deterministic point.
  double mu1_variance(double t) const;
  /// Stationary Var_0 of the conditional mean, sigma0^2 / 2.
  double mu1_stationary_variance() const { return 0.5 * sigma0 * sigma0; }
};

/// RK4 for dv/dt = -2v + sigma(v)^2 / 2 on [0, T]. Throws NumericalFault on blow-up.
CounterexampleReference counterexample_reference(const ScalarFunction& sigma_of_v, double sigma0, double v0,
                                                 double T, double dt_ode = 1e-4);

/// Roots of -2v + sigma(v)^2/2 on [lo, hi] by sign change and bisection.
std::vector<double> find_variance_equilibria(const ScalarFunction& sigma_of_v, double lo, double hi,
                                             std::size_t grid = 20000);

struct Occupancy {
  std::vector<double> times;
  std::vector<double> wells;
  std::vector<double> fractions;  ///< times x wells, row-major
  std::vector<double> merge_std;  ///< population std of mu1 across runs

  double fraction(std::size_t k, std::size_t well) const { return fractions[k * wells.size() + well]; }
  /// Header `t,occ_<well>...,merge_std`.
  void write_csv(std::ostream& os) const;
};

/// d = 1 runs with identical recorded times.
Occupancy basin_occupancy(const std::vector<StatsTrajectory>& runs, const std::vector<double>& wells, double radius);

/// Population standard deviation.
double population_std(std::span<const double> values);

enum class LipschitzKind { clipped_mean, clipped_w1_to_point };

inline constexpr double kFunctionalClip = 10.0;

/// 1-Lipschitz statistics of the empirical measure (d = 1):
///   clipped_mean:        clamp(mean, -10, 10)
///   clipped_w1_to_point: min(mean |x - reference|, 10)
EnsembleFunctional lipschitz_functional(LipschitzKind kind, double reference = 0.0);

struct GapSeries {
  std::vector<double> times;
  std::vector<double> mean_a, mean_b, gap;

  /// Header `t,phi_a,phi_b,gap`.
  void write_csv(std::ostream& os) const;
};

struct GapOptions {
  std::size_t N = 256;
  std::size_t realizations = 32;
  double dt = 1e-2;
  double T = 5.0;
  std::size_t record_every = 10;
  Exec exec = Exec::serial;  ///< parallel farms realizations
};

/// |mean over realizations of phi(m_t^a) - same for b|. Batch a reads the
/// streams of (seed_a, r), batch b those of (seed_b, r).
GapSeries semigroup_gap(ModelPtr model, const EnsembleFunctional& phi, const InitialLaw& law_a,
                        const InitialLaw& law_b, const GapOptions& options, std::uint64_t seed_a,
                        std::uint64_t seed_b);

/// exp(2 c2 sqrt(v(t))) along the trajectory.
std::vector<double> exp_moment_tracker(const StatsTrajectory& traj, double c2);

struct MultiplicityOptions {
  std::size_t N = 1024;
  std::size_t realizations = 32;
  double dt = 5e-3;
  double T = 40.0;
  std::size_t record_every = 200;
  double start = 1.0;  ///< first half starts at +start, second half at -start
  Exec exec = Exec::serial;  ///< parallel farms realizations
};

struct MultiplicityResult {
  std::vector<StatsTrajectory> runs;
  std::vector<double> terminal_mu1;
  double terminal_std = 0.0;  ///< merge statistic
};

/// Realizations differ in initial well and idiosyncratic noise and share
/// the common path of realization 0.
MultiplicityResult run_multiplicity(ModelPtr model, const MultiplicityOptions& options, std::uint64_t master_seed);

/// Runs `realizations` independent simulations (realization r reads the
/// streams of (master_seed, r)); parallel exec farms realizations.
std::vector<StatsTrajectory> simulate_realizations(ModelPtr model, const InitialLaw& law, std::size_t N,
                                                   const SimulateOptions& options, std::size_t realizations,
                                                   std::uint64_t master_seed);

}  // namespace cmv
