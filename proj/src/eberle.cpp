#include "cmv/eberle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cmv/assignment.hpp"
#include "cmv/csv.hpp"

namespace cmv {

namespace {

std::vector<double> uniform_mesh(double r_max, std::size_t mesh) {
  std::vector<double> r(mesh);
  const double h = r_max / static_cast<double>(mesh - 1);
  for (std::size_t i = 0; i < mesh; ++i) r[i] = h * static_cast<double>(i);
  r.back() = r_max;
  return r;
}

std::vector<double> sample_kappa(const ScalarFunction& kappa, const std::vector<double>& r) {
  std::vector<double> k(r.size());
  k[0] = kappa(0.5 * r[1]);
  for (std::size_t i = 1; i < r.size(); ++i) k[i] = kappa(r[i]);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!std::isfinite(k[i])) throw ProfileError("kappa is not finite at r = " + csv::format_double(r[i]));
  }
  return k;
}

/// Cumulative trapezoid of `y` on the uniform mesh of step h.
std::vector<double> cumulative_trapezoid(const std::vector<double>& y, double h) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
  return out;
}

std::size_t index_of(const std::vector<double>& r, double x) {
  return static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), x) - r.begin());
}

void require_equal_counts(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": sample counts differ");
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty samples");
}

}  // namespace

double compute_R0(std::span<const double> r, std::span<const double> kappa) {
  if (r.empty() || r.size() != kappa.size()) throw std::invalid_argument("compute_R0: bad grid");
  if (kappa.back() < 0.0) {
    throw ProfileError("kappa is negative at the end of the grid (r = " + csv::format_double(r.back()) +
                       "); confinement fails or the grid is too short");
  }
  std::size_t i = kappa.size();
  while (i > 0 && kappa[i - 1] >= 0.0) --i;
  return r[i];
}

double compute_R1(std::span<const double> r, std::span<const double> kappa, double R0) {
  if (r.empty() || r.size() != kappa.size()) throw std::invalid_argument("compute_R1: bad grid");
  std::vector<double> suffix_min(kappa.size());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = kappa.size(); i-- > 0;) {
    m = std::min(m, kappa[i]);
    suffix_min[i] = m;
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < R0) continue;
    if (suffix_min[i] * r[i] * (r[i] - R0) >= 8.0) return r[i];
  }
  throw ProfileError("R1 not reached on [0, " + csv::format_double(r.back()) + "]; extend r_max");
}

EberleProfile build_profile(const ScalarFunction& kappa, double sigma0, double r_max, std::size_t mesh) {
  if (!kappa) throw std::invalid_argument("build_profile: kappa is empty");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("build_profile: sigma0 must be > 0");
  if (!(r_max > 0.0)) throw std::invalid_argument("build_profile: r_max must be > 0");
  if (mesh < 512) throw std::invalid_argument("build_profile: mesh must be >= 512");

  EberleProfile p;
  p.sigma0 = sigma0;
  p.r_max = r_max;
  p.r = uniform_mesh(r_max, mesh);
  p.kappa = sample_kappa(kappa, p.r);
  const double h = p.step();

  p.R0 = compute_R0(p.r, p.kappa);
  p.R1 = compute_R1(p.r, p.kappa, p.R0);
  if (p.R1 > 0.5 * r_max) {
    throw ProfileError("R1 = " + csv::format_double(p.R1) + " exceeds r_max/2; rebuild with r_max >= " +
                       csv::format_double(2.0 * p.R1));
  }

  std::vector<double> integrand(mesh);
  for (std::size_t i = 0; i < mesh; ++i) integrand[i] = p.r[i] * std::max(0.0, -p.kappa[i]);
  p.neg_integral = cumulative_trapezoid(integrand, h);
  p.phi.resize(mesh);
  for (std::size_t i = 0; i < mesh; ++i) p.phi[i] = std::exp(-0.25 * p.neg_integral[i]);
  p.Phi = cumulative_trapezoid(p.phi, h);

  std::vector<double> ratio(mesh);
  for (std::size_t i = 0; i < mesh; ++i) ratio[i] = p.Phi[i] / p.phi[i];
  const std::vector<double> J = cumulative_trapezoid(ratio, h);
  const std::size_t i1 = index_of(p.r, p.R1);
  p.J_R1 = J[i1];
  p.g.resize(mesh);
  for (std::size_t i = 0; i < mesh; ++i) p.g[i] = i < i1 ? 1.0 - 0.5 * J[i] / p.J_R1 : 0.5;

  std::vector<double> fprime(mesh);
  for (std::size_t i = 0; i < mesh; ++i) fprime[i] = p.phi[i] * p.g[i];
  p.f = cumulative_trapezoid(fprime, h);
  p.kappa1 = 0.5 * p.phi[index_of(p.r, p.R0)];

  const ContractionRate rate = certify_contraction_rate(p);
  p.c_rate = rate.c;
  p.c_argmin = rate.argmin;
  return p;
}

EberleProfile build_profile(const ScalarFunction& kappa, double sigma0, const ProfileOptions& options) {
  if (!kappa) throw std::invalid_argument("build_profile: kappa is empty");
  if (options.mesh < 512) throw std::invalid_argument("build_profile: mesh must be >= 512");
  const std::vector<double> r = uniform_mesh(options.first_r_max, options.mesh);
  const std::vector<double> k = sample_kappa(kappa, r);
  const double R0 = compute_R0(r, k);
  const double R1 = compute_R1(r, k, R0);
  return build_profile(kappa, sigma0, options.r_max_factor * std::max(R1, r[1]), options.mesh);
}

ContractionRate certify_contraction_rate(const EberleProfile& p) {
  const std::size_t n = p.mesh();
  if (n < 3) throw std::invalid_argument("certify_contraction_rate: profile not built");
  const double h = p.step();
  const double s2 = p.sigma0 * p.sigma0;
  ContractionRate best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double f2 = (p.f[i + 1] - 2.0 * p.f[i] + p.f[i - 1]) / (h * h);
    const double f1 = (p.f[i + 1] - p.f[i - 1]) / (2.0 * h);
    const double value = -2.0 * s2 * (f2 - 0.25 * p.r[i] * p.kappa[i] * f1) / p.f[i];
    if (value < best.c) best = {value, p.r[i]};
  }
  if (!(best.c > 0.0)) {
    throw ProfileError("certified contraction rate " + csv::format_double(best.c) + " at r = " +
                       csv::format_double(best.argmin) + " is not positive");
  }
  return best;
}

std::vector<InvariantCheck> check_profile_invariants(const EberleProfile& p, double tol) {
  const std::size_t n = p.mesh();
  std::vector<InvariantCheck> out;
  const auto add = [&](std::string name, double worst) {
    out.push_back({std::move(name), worst <= tol, worst});
  };
  const std::size_t i0 = index_of(p.r, p.R0), i1 = index_of(p.r, p.R1);

  double w = std::abs(p.phi[0] - 1.0);
  add("phi(0)=1", w);
  w = 0.0;
  for (std::size_t i = 1; i < n; ++i) w = std::max(w, p.phi[i] - p.phi[i - 1]);
  add("phi non-increasing", w);
  w = 0.0;
  for (std::size_t i = i0; i < n; ++i) w = std::max(w, std::abs(p.phi[i] - p.phi[i0]));
  add("phi constant past R0", w);

  w = 0.0;
  for (std::size_t i = 1; i < n; ++i) w = std::max(w, p.neg_integral[i - 1] - p.neg_integral[i]);
  add("kappa^- integral non-decreasing", w);
  w = 0.0;
  for (std::size_t i = i0; i < n; ++i) w = std::max(w, std::abs(p.neg_integral[i] - p.neg_integral[i0]));
  add("kappa^- integral constant past R0", w);

  add("g(0)=1", std::abs(p.g[0] - 1.0));
  w = 0.0;
  for (std::size_t i = 1; i < n; ++i) w = std::max(w, p.g[i] - p.g[i - 1]);
  add("g non-increasing", w);
  w = 0.0;
  for (std::size_t i = i1; i < n; ++i) w = std::max(w, std::abs(p.g[i] - 0.5));
  add("g = 1/2 past R1", w);

  add("f(0)=0", std::abs(p.f[0]));
  add("f'(0)=1", std::abs(p.phi[0] * p.g[0] - 1.0));
  w = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) w = std::max(w, p.f[i + 1] - 2.0 * p.f[i] + p.f[i - 1]);
  add("f concave", w);

  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::max(lo, 0.5 * p.Phi[i] - p.f[i]);
    hi = std::max(hi, p.f[i] - p.Phi[i]);
  }
  add("Phi/2 <= f", lo);
  add("f <= Phi", hi);
  lo = hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::max(lo, p.kappa1 * p.r[i] - p.f[i]);
    hi = std::max(hi, p.f[i] - p.r[i]);
  }
  add("kappa1 r <= f", lo);
  add("f <= r", hi);
  return out;
}

double EberleProfile::f_at(double x) const {
  if (f.empty()) throw std::logic_error("EberleProfile::f_at: profile not built");
  if (x < 0.0) throw std::invalid_argument("EberleProfile::f_at: negative argument");
  if (x >= r_max) return f.back() + (x - r_max) * kappa1;
  const double h = step();
  const std::size_t i = std::min(static_cast<std::size_t>(x / h), f.size() - 2);
  const double w = (x - r[i]) / h;
  return f[i] + w * (f[i + 1] - f[i]);
}

void EberleProfile::write_csv(std::ostream& os) const {
  os << "r,kappa,phi,Phi,g,f\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    os << csv::format_double(r[i]) << ',' << csv::format_double(kappa[i]) << ',' << csv::format_double(phi[i])
       << ',' << csv::format_double(Phi[i]) << ',' << csv::format_double(g[i]) << ',' << csv::format_double(f[i])
       << '\n';
  }
}

void EberleProfile::write_summary(std::ostream& os) const {
  os << "R0,R1,kappa1,c_rate\n"
     << csv::format_double(R0) << ',' << csv::format_double(R1) << ',' << csv::format_double(kappa1) << ','
     << csv::format_double(c_rate) << '\n';
}

double w1_sorted(std::span<const double> a, std::span<const double> b) {
  require_equal_counts(a, b, "w1_sorted");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
  return s / static_cast<double>(sa.size());
}

double sorted_pairing_cost(std::span<const double> a, std::span<const double> b, const EberleProfile& profile) {
  require_equal_counts(a, b, "sorted_pairing_cost");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += profile.f_at(std::abs(sa[i] - sb[i]));
  return s / static_cast<double>(sa.size());
}

DfDistance df_distance(std::span<const double> a, std::span<const double> b, const EberleProfile& profile, int d,
                       std::size_t limit) {
  require_equal_counts(a, b, "df_distance");
  if (d < 1 || a.size() % static_cast<std::size_t>(d) != 0) {
    throw std::invalid_argument("df_distance: samples are not n x d");
  }
  const std::size_t n = a.size() / static_cast<std::size_t>(d);
  if (n > limit) {
    if (d != 1) throw std::invalid_argument("df_distance: above the assignment limit only d = 1 is supported");
    return {sorted_pairing_cost(a, b, profile), false};
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = a[i * d + k] - b[j * d + k];
        s += diff * diff;
      }
      cost[i * n + j] = profile.f_at(std::sqrt(s));
    }
  }
  return {solve_assignment(cost, n).cost / static_cast<double>(n), true};
}

}  // namespace cmv
