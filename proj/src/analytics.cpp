#include "cmv/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cmv/csv.hpp"
#include "cmv/errors.hpp"
#include "cmv/farm.hpp"
#include "cmv/rng.hpp"

namespace cmv {

using csv::format_double;

void DecayFit::write_csv(std::ostream& os) const {
  os << "rate,intercept,rms_residual,t_lo,t_hi,points\n"
     << format_double(rate) << ',' << format_double(intercept) << ',' << format_double(rms_residual) << ','
     << format_double(t_lo) << ',' << format_double(t_hi) << ',' << points << '\n';
}

DecayFit fit_decay(std::span<const double> times, std::span<const double> series, double t_lo, double t_hi) {
  if (times.size() != series.size()) throw std::invalid_argument("fit_decay: times and series differ in length");
  if (!(t_hi > t_lo)) throw std::invalid_argument("fit_decay: window must satisfy t_lo < t_hi");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_lo || times[k] > t_hi) continue;
    if (!(series[k] > 0.0)) {
      throw std::invalid_argument("fit_decay: non-positive value " + format_double(series[k]) + " at t = " +
                                  format_double(times[k]));
    }
    t.push_back(times[k]);
    y.push_back(std::log(series[k]));
  }
  if (t.size() < 2) throw std::invalid_argument("fit_decay: fewer than two points in window");

  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    tm += t[k];
    ym += y[k];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (y[k] - ym);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("fit_decay: window holds a single distinct time");
  const double slope = sty / stt;

  DecayFit fit;
  fit.rate = -slope;
  fit.intercept = ym - slope * tm;
  double ss = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = y[k] - (fit.intercept + slope * t[k]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.t_lo = t.front();
  fit.t_hi = t.back();
  fit.points = t.size();
  return fit;
}

double BoundReport::worst_margin() const {
  return margin.empty() ? 0.0 : *std::min_element(margin.begin(), margin.end());
}

void BoundReport::write_csv(std::ostream& os) const {
  os << "t,observed,bound,margin\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << format_double(times[k]) << ',' << format_double(observed[k]) << ',' << format_double(bound[k]) << ','
       << format_double(margin[k]) << '\n';
  }
}

void BoundReport::write_summary(std::ostream& os) const {
  os << "bound: " << bound_name << '\n';
  for (const auto& [key, value] : parameters) os << "  " << key << " = " << format_double(value) << '\n';
  os << "  points = " << times.size() << '\n'
     << "  violations = " << violations << '\n'
     << "  worst_margin = " << format_double(worst_margin()) << '\n'
     << "  status = " << (passed() ? "PASS" : "FAIL") << '\n';
}

BoundReport verify_variance_bound(const StatsTrajectory& traj, const ConstantsLedger& ledger, int d, double sigma,
                                  std::size_t N, double tolerance) {
  const double c = ledger.c_alpha;
  if (!(c > 0.0)) {
    throw std::domain_error("verify_variance_bound: c_alpha = " + format_double(c) + " must be > 0");
  }
  if (traj.size() == 0) throw std::invalid_argument("verify_variance_bound: empty trajectory");
  BoundReport report;
  report.bound_name = "variance";
  report.tolerance = tolerance;
  report.parameters = {{"c_alpha", c},
                       {"d", static_cast<double>(d)},
                       {"sigma", sigma},
                       {"N", static_cast<double>(N)},
                       {"floor", d * sigma * sigma / c}};
  const double v0 = traj.v.front();
  const double root_n = std::sqrt(static_cast<double>(N));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k], v = traj.v[k];
    const double b = v0 * std::exp(-2.0 * c * t) + d * sigma * sigma / c + 5.0 * v / root_n;
    report.times.push_back(t);
    report.observed.push_back(v);
    report.bound.push_back(b);
    report.margin.push_back(b - v);
    if (b - v < -tolerance) ++report.violations;
  }
  return report;
}

OuReference ou_variant_reference(double a, double sigma, double sigma0, double t, double y0, double v0) {
  if (!(a > 0.0)) throw std::invalid_argument("ou_variant_reference: a must be > 0");
  if (t < 0.0) throw std::invalid_argument("ou_variant_reference: t must be >= 0");
  const double decay = std::exp(-2.0 * a * t);
  OuReference ref;
  ref.conditional_variance = sigma * sigma / (2.0 * a) * (1.0 - decay) + v0 * decay;
  ref.mean = y0 * std::exp(-a * t);
  ref.mean_variance = sigma0 * sigma0 / (2.0 * a) * (1.0 - decay);
  return ref;
}

OuReference ou_variant_reference(double a, const VectorField& f_map, double sigma, double sigma0, double t,
                                 double y0, double v0, std::size_t paths, double dt, std::uint64_t seed) {
  OuReference ref = ou_variant_reference(a, sigma, sigma0, t, y0, v0);
  if (!f_map) return ref;
  if (paths < 2) throw std::invalid_argument("ou_variant_reference: need at least two paths");
  if (t == 0.0) {
    ref.mean = y0;
    ref.mean_variance = 0.0;
    return ref;
  }
  const std::size_t steps = step_count(dt, t);
  std::vector<double> end(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    NormalStream noise(derive_streams(seed, p, Role::common));
    double y = y0;
    double fy = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double h = k < steps ? dt : t - dt * static_cast<double>(steps - 1);
      f_map(std::span<const double>(&y, 1), std::span<double>(&fy, 1));
      y += (-a * y + fy) * h + sigma0 * std::sqrt(h) * noise.next();
    }
    if (!std::isfinite(y)) throw NumericalFault("ou_variant_reference: mean path diverged", steps, p);
    end[p] = y;
  }
  double m = 0.0;
  for (double y : end) m += y;
  m /= static_cast<double>(paths);
  double ss = 0.0;
  for (double y : end) ss += (y - m) * (y - m);
  ref.mean = m;
  ref.mean_variance = ss / static_cast<double>(paths - 1);
  return ref;
}

double CounterexampleReference::v_at(double t) const {
  if (times.empty()) throw std::logic_error("CounterexampleReference: empty");
  if (t <= times.front()) return v.front();
  if (t >= times.back()) return v.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[i]) / (times[i + 1] - times[i]);
  return v[i] + w * (v[i + 1] - v[i]);
}

double CounterexampleReference::mu1_variance(double t) const {
  return 0.5 * sigma0 * sigma0 * (1.0 - std::exp(-2.0 * t));
}

CounterexampleReference counterexample_reference(const ScalarFunction& sigma_of_v, double sigma0, double v0,
                                                 double T, double dt_ode) {
  if (!sigma_of_v) throw std::invalid_argument("counterexample_reference: sigma_of_v is empty");
  if (!(T > 0.0) || !(dt_ode > 0.0)) throw std::invalid_argument("counterexample_reference: need T, dt > 0");
  const auto rhs = [&](double v) {
    const double s = sigma_of_v(v);
    return -2.0 * v + 0.5 * s * s;
  };
  const std::size_t n = static_cast<std::size_t>(std::ceil(T / dt_ode - 1e-9));
  const double h = T / static_cast<double>(n);
  CounterexampleReference ref;
  ref.sigma0 = sigma0;
  ref.times.reserve(n + 1);
  ref.v.reserve(n + 1);
  ref.times.push_back(0.0);
  ref.v.push_back(v0);
  double v = v0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double k1 = rhs(v);
    const double k2 = rhs(v + 0.5 * h * k1);
    const double k3 = rhs(v + 0.5 * h * k2);
    const double k4 = rhs(v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(v) || std::abs(v) > 1e12) {
      throw NumericalFault("counterexample_reference: variance ODE blew up at step " + std::to_string(k), k);
    }
    ref.times.push_back(k == n ? T : h * static_cast<double>(k));
    ref.v.push_back(v);
  }
  return ref;
}

std::vector<double> find_variance_equilibria(const ScalarFunction& sigma_of_v, double lo, double hi,
                                             std::size_t grid) {
  if (!(hi > lo) || grid < 2) throw std::invalid_argument("find_variance_equilibria: bad interval");
  const auto h = [&](double v) {
    const double s = sigma_of_v(v);
    return -2.0 * v + 0.5 * s * s;
  };
  std::vector<double> roots;
  const auto push = [&](double x) {
    if (roots.empty() || std::abs(x - roots.back()) > 1e-9 * std::max(1.0, std::abs(x))) roots.push_back(x);
  };
  const double step = (hi - lo) / static_cast<double>(grid);
  double a = lo, fa = h(a);
  for (std::size_t i = 1; i <= grid; ++i) {
    const double b = i == grid ? hi : lo + step * static_cast<double>(i);
    const double fb = h(b);
    if (fa == 0.0) {
      push(a);
    } else if (fa * fb < 0.0) {
      double l = a, r = b, fl = fa;
      for (int it = 0; it < 200 && r - l > 0.0; ++it) {
        const double m = 0.5 * (l + r);
        if (m <= l || m >= r) break;
        const double fm = h(m);
        if (fm == 0.0) {
          l = r = m;
          break;
        }
        if ((fm < 0.0) == (fl < 0.0)) {
          l = m;
          fl = fm;
        } else {
          r = m;
        }
      }
      push(0.5 * (l + r));
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0) push(a);
  return roots;
}

void Occupancy::write_csv(std::ostream& os) const {
  os << 't';
  for (double w : wells) os << ",occ_" << format_double(w);
  os << ",merge_std\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << format_double(times[k]);
    for (std::size_t j = 0; j < wells.size(); ++j) os << ',' << format_double(fraction(k, j));
    os << ',' << format_double(merge_std[k]) << '\n';
  }
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double m = 0.0;
  for (double x : values) m += x;
  m /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

Occupancy basin_occupancy(const std::vector<StatsTrajectory>& runs, const std::vector<double>& wells,
                          double radius) {
  if (runs.empty()) throw std::invalid_argument("basin_occupancy: no runs");
  Occupancy occ;
  occ.times = runs.front().times;
  occ.wells = wells;
  for (const auto& run : runs) {
    if (run.dim != 1) throw std::invalid_argument("basin_occupancy: runs must be one-dimensional");
    if (run.times != occ.times) throw std::invalid_argument("basin_occupancy: runs recorded at different times");
  }
  const double M = static_cast<double>(runs.size());
  std::vector<double> mu(runs.size());
  for (std::size_t k = 0; k < occ.times.size(); ++k) {
    for (std::size_t r = 0; r < runs.size(); ++r) mu[r] = runs[r].mu1[k];
    for (double w : wells) {
      std::size_t inside = 0;
      for (double m : mu) inside += std::abs(m - w) <= radius ? 1 : 0;
      occ.fractions.push_back(static_cast<double>(inside) / M);
    }
    occ.merge_std.push_back(population_std(mu));
  }
  return occ;
}

EnsembleFunctional lipschitz_functional(LipschitzKind kind, double reference) {
  switch (kind) {
    case LipschitzKind::clipped_mean:
      return {"clipped_mean", [](std::span<const double> x, int d) {
                if (d != 1) throw std::invalid_argument("clipped_mean: d must be 1");
                const double m = kernels::pairwise_sum(x) / static_cast<double>(x.size());
                return std::clamp(m, -kFunctionalClip, kFunctionalClip);
              }};
    case LipschitzKind::clipped_w1_to_point:
      return {"clipped_w1_to_point", [reference](std::span<const double> x, int d) {
                if (d != 1) throw std::invalid_argument("clipped_w1_to_point: d must be 1");
                std::vector<double> dist(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) dist[i] = std::abs(x[i] - reference);
                return std::min(kernels::pairwise_sum(dist) / static_cast<double>(x.size()), kFunctionalClip);
              }};
  }
  throw std::invalid_argument("lipschitz_functional: unknown kind");
}

void GapSeries::write_csv(std::ostream& os) const {
  os << "t,phi_a,phi_b,gap\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << format_double(times[k]) << ',' << format_double(mean_a[k]) << ',' << format_double(mean_b[k]) << ','
       << format_double(gap[k]) << '\n';
  }
}

std::vector<StatsTrajectory> simulate_realizations(ModelPtr model, const InitialLaw& law, std::size_t N,
                                                   const SimulateOptions& options, std::size_t realizations,
                                                   std::uint64_t master_seed) {
  std::vector<StatsTrajectory> runs(realizations);
  SimulateOptions inner = options;
  inner.exec = options.exec == Exec::parallel ? Exec::serial : options.exec;
  farm(realizations, options.exec,
       [&](std::size_t r) { runs[r] = simulate(model, law, N, inner, master_seed, r); });
  return runs;
}

GapSeries semigroup_gap(ModelPtr model, const EnsembleFunctional& phi, const InitialLaw& law_a,
                        const InitialLaw& law_b, const GapOptions& options, std::uint64_t seed_a,
                        std::uint64_t seed_b) {
  if (options.realizations == 0) throw std::invalid_argument("semigroup_gap: need at least one realization");
  SimulateOptions sim;
  sim.dt = options.dt;
  sim.T = options.T;
  sim.record_every = options.record_every;
  sim.exec = options.exec;
  sim.functionals = {phi};
  const auto a = simulate_realizations(model, law_a, options.N, sim, options.realizations, seed_a);
  const auto b = simulate_realizations(model, law_b, options.N, sim, options.realizations, seed_b);

  GapSeries gap;
  gap.times = a.front().times;
  const double M = static_cast<double>(options.realizations);
  for (std::size_t k = 0; k < gap.times.size(); ++k) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t r = 0; r < options.realizations; ++r) {
      sa += a[r].extra.front()[k];
      sb += b[r].extra.front()[k];
    }
    gap.mean_a.push_back(sa / M);
    gap.mean_b.push_back(sb / M);
    gap.gap.push_back(std::abs(sa / M - sb / M));
  }
  return gap;
}

std::vector<double> exp_moment_tracker(const StatsTrajectory& traj, double c2) {
  if (!(c2 > 0.0)) throw std::invalid_argument("exp_moment_tracker: c2 must be > 0");
  std::vector<double> out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) out[k] = std::exp(2.0 * c2 * std::sqrt(std::max(0.0, traj.v[k])));
  return out;
}

MultiplicityResult run_multiplicity(ModelPtr model, const MultiplicityOptions& options, std::uint64_t master_seed) {
  if (!model || model->dim != 1) throw std::invalid_argument("run_multiplicity: needs a one-dimensional model");
  if (options.realizations < 2) throw std::invalid_argument("run_multiplicity: need at least two realizations");
  SimulateOptions sim;
  sim.dt = options.dt;
  sim.T = options.T;
  sim.record_every = options.record_every;
  sim.exec = Exec::serial;
  const std::size_t M = options.realizations;

  MultiplicityResult result;
  result.runs.resize(M);
  farm(M, options.exec, [&](std::size_t r) {
    const double start = r < M / 2 ? options.start : -options.start;
    ParticleEnsemble ens = sample_initial(model, InitialLaw::point_mass({start}), options.N, master_seed, r);
    NormalStream common(derive_streams(master_seed, 0, Role::common));
    result.runs[r] = simulate(ens, common, sim);
  });
  for (const auto& run : result.runs) result.terminal_mu1.push_back(run.mu1.back());
  result.terminal_std = population_std(result.terminal_mu1);
  return result;
}

}  // namespace cmv
