#include "cmv/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmv/rng.hpp"

namespace cmv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

VectorField zero_field() {
  return [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
}

VectorField linear_field(double slope) {
  return [slope](std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = slope * x[k];
  };
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
  }
}

/// Drift constants estimated on a sample, with the relative margin applied.
struct EstimatedConstants {
  double lipschitz = 0.0;
  double one_sided = 0.0;  // m such that (x-y).(b(x)-b(y)) <= -m|x-y|^2
  double jacobian_lipschitz = 0.0;
};

constexpr double kGridMargin = 1e-3;

/// Finite-difference Jacobian, row-major d x d.
std::vector<double> fd_jacobian(const VectorField& b, std::span<const double> x) {
  const std::size_t d = x.size();
  std::vector<double> jac(d * d), xp(x.begin(), x.end()), xm(x.begin(), x.end()), bp(d), bm(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    b(xp, bp);
    b(xm, bm);
    for (std::size_t i = 0; i < d; ++i) jac[i * d + j] = (bp[i] - bm[i]) / (xp[j] - xm[j]);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac;
}

/// Spectral norm of a small square matrix by power iteration on M^T M.
double spectral_norm(const std::vector<double>& m, std::size_t d) {
  if (d == 1) return std::abs(m[0]);
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), w(d), u(d);
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += m[i * d + j] * v[j];
      w[i] = s;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += m[i * d + j] * w[i];
      u[j] = s;
    }
    const double n = norm(u);
    if (n == 0.0) return 0.0;
    lambda = n;
    for (std::size_t j = 0; j < d; ++j) v[j] = u[j] / n;
  }
  return std::sqrt(lambda);
}

double jacobian_distance(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
  std::vector<double> diff(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
  return spectral_norm(diff, d);
}

/// Deterministic sample of point pairs in [-radius, radius]^d; odd pairs are
/// close together so local slopes are probed.
std::vector<std::pair<std::vector<double>, std::vector<double>>> sample_pairs(
    int dim, std::size_t count, double radius, std::uint64_t seed) {
  UniformStream u(derive_streams(seed, 0, Role::initial));
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> x(dim), y(dim);
    for (int j = 0; j < dim; ++j) x[j] = radius * (2.0 * u.next_double() - 1.0);
    if (k % 2 == 0) {
      for (int j = 0; j < dim; ++j) y[j] = radius * (2.0 * u.next_double() - 1.0);
    } else {
      for (int j = 0; j < dim; ++j) y[j] = x[j] + 0.05 * (2.0 * u.next_double() - 1.0);
    }
    if (x == y) y[0] += 1e-3;
    pairs.emplace_back(std::move(x), std::move(y));
  }
  return pairs;
}

EstimatedConstants estimate_drift_constants(const VectorField& b, int dim, const ScanOptions& scan) {
  EstimatedConstants est;
  double max_slope = -std::numeric_limits<double>::infinity();
  if (dim == 1) {
    const std::size_t n = std::max<std::size_t>(scan.points, 3);
    const double h = 2.0 * scan.radius / static_cast<double>(n - 1);
    std::vector<double> vals(n);
    double xin[1], out[1];
    for (std::size_t j = 0; j < n; ++j) {
      xin[0] = -scan.radius + h * static_cast<double>(j);
      b(xin, out);
      vals[j] = out[0];
    }
    std::vector<double> slopes(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      slopes[j] = (vals[j + 1] - vals[j]) / h;
      est.lipschitz = std::max(est.lipschitz, std::abs(slopes[j]));
      max_slope = std::max(max_slope, slopes[j]);
    }
    for (std::size_t j = 0; j + 2 < n; ++j) {
      est.jacobian_lipschitz = std::max(est.jacobian_lipschitz, std::abs(slopes[j + 1] - slopes[j]) / h);
    }
  } else {
    const auto pairs = sample_pairs(dim, scan.points, scan.radius, scan.seed);
    std::vector<double> bx(dim), by(dim), diff(dim), bdiff(dim);
    for (const auto& [x, y] : pairs) {
      b(x, bx);
      b(y, by);
      for (int k = 0; k < dim; ++k) {
        diff[k] = x[k] - y[k];
        bdiff[k] = bx[k] - by[k];
      }
      const double r = norm(diff);
      est.lipschitz = std::max(est.lipschitz, norm(bdiff) / r);
      max_slope = std::max(max_slope, dot(diff, bdiff) / (r * r));
      est.jacobian_lipschitz = std::max(
          est.jacobian_lipschitz, jacobian_distance(fd_jacobian(b, x), fd_jacobian(b, y), dim) / r);
    }
  }
  est.lipschitz *= 1.0 + kGridMargin;
  est.jacobian_lipschitz *= 1.0 + kGridMargin;
  est.one_sided = -max_slope - kGridMargin * std::abs(max_slope);
  return est;
}

/// Estimated strong-monotonicity constant of F: min of -(x-y).(F(x)-F(y))/|x-y|^2.
double estimate_monotonicity(const VectorField& F, int dim, const ScanOptions& scan) {
  const EstimatedConstants est = estimate_drift_constants(F, dim, scan);
  return est.one_sided;
}

void finish_ledger(ModelSpec& m) {
  auto& c = m.constants;
  c.c_alpha = c.alpha_F - c.L_G;
  if (!(c.c_alpha > 0.0)) {
    m.warnings.push_back("c_alpha = alpha_F - L_G <= 0: the conditional variance bound does not apply");
  }
  if (m.kappa) {
    c.kappa2 = -std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 1000; ++j) c.kappa2 = std::max(c.kappa2, m.kappa(j / 1000.0));
  } else {
    c.kappa2 = kNaN;
  }
}

}  // namespace

std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::double_well: return "double_well";
    case ModelId::ou_variant: return "ou_variant";
    case ModelId::variance_counterexample: return "variance_counterexample";
    case ModelId::custom: return "custom";
  }
  return "custom";
}

ModelPtr make_double_well(double alpha, double A, double sigma, double sigma0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("make_double_well: alpha must be > 0");
  if (!(A > 1.0)) throw std::invalid_argument("make_double_well: truncation radius A must be > 1");
  require_nonnegative(sigma, "sigma");
  require_nonnegative(sigma0, "sigma0");

  auto m = std::make_shared<ModelSpec>();
  m->id = ModelId::double_well;
  m->name = "double_well";
  m->dim = 1;
  m->sigma = sigma;
  m->sigma0 = sigma0;
  const double outer_slope = 1.0 - 3.0 * A * A;
  const double g_at_A = A - A * A * A;
  m->G = [A, outer_slope, g_at_A](std::span<const double> x, std::span<double> out) {
    const double v = x[0];
    if (v > A) {
      out[0] = g_at_A + outer_slope * (v - A);
    } else if (v < -A) {
      out[0] = -g_at_A + outer_slope * (v + A);
    } else {
      out[0] = v - v * v * v;
    }
  };
  m->F = linear_field(-alpha);

  auto& c = m->constants;
  c.alpha_F = alpha;
  c.L_G = 3.0 * A * A - 1.0;
  c.m_G = -1.0;
  c.C_G = 6.0 * A;
  c.C_F = 0.0;
  c.closed_form = true;

  if (sigma0 > 0.0) {
    // Largest mean slope of G over a window of length r: the window centred at 0.
    const double scale = -2.0 / (sigma0 * sigma0);
    m->kappa = [A, scale](double r) {
      const double slope = r <= 2.0 * A ? 1.0 - 0.25 * r * r
                                        : (1.0 - 3.0 * A * A) + 4.0 * A * A * A / r;
      return scale * slope;
    };
  }
  m->parameters = {{"alpha", alpha}, {"A", A}, {"sigma", sigma}, {"sigma0", sigma0}};
  finish_ledger(*m);
  return m;
}

ModelPtr make_ou_variant(double a, VectorField f_map, double sigma, double sigma0, int dim) {
  if (!(a > 0.0)) throw std::invalid_argument("make_ou_variant: a must be > 0");
  if (dim < 1) throw std::invalid_argument("make_ou_variant: dim must be >= 1");
  require_nonnegative(sigma, "sigma");
  require_nonnegative(sigma0, "sigma0");

  auto m = std::make_shared<ModelSpec>();
  m->id = ModelId::ou_variant;
  m->name = "ou_variant";
  m->dim = dim;
  m->sigma = sigma;
  m->sigma0 = sigma0;
  m->G = zero_field();
  m->F = linear_field(-a);

  auto& c = m->constants;
  c.alpha_F = a;
  if (!f_map) {
    m->H = linear_field(-a);
    c.L_G = a;
    c.m_G = a;
    c.C_G = 0.0;
    c.closed_form = true;
    if (sigma0 > 0.0) {
      const double k = 2.0 * a / (sigma0 * sigma0);
      m->kappa = [k](double) { return k; };
    }
  } else {
    m->H = [a, f = std::move(f_map)](std::span<const double> x, std::span<double> out) {
      f(x, out);
      for (std::size_t k = 0; k < x.size(); ++k) out[k] -= a * x[k];
    };
    const EstimatedConstants est = estimate_drift_constants(m->H, dim, ScanOptions{});
    c.L_G = est.lipschitz;
    c.m_G = est.one_sided;
    c.C_G = est.jacobian_lipschitz;
    c.closed_form = false;
    c.confidence_margin = kGridMargin;
    if (sigma0 > 0.0) {
      const VectorField h = m->H;
      m->kappa = [table = std::make_shared<KappaTable>(
                      [h, dim, sigma0](double r) { return kappa_scan(h, dim, sigma0, r); })](double r) {
        return (*table)(r);
      };
    }
  }
  c.C_F = 0.0;
  m->parameters = {{"a", a}, {"sigma", sigma}, {"sigma0", sigma0}};
  finish_ledger(*m);
  return m;
}

ModelPtr make_variance_counterexample(ScalarFunction sigma_of_v, double sigma0) {
  if (!sigma_of_v) throw std::invalid_argument("make_variance_counterexample: sigma_of_v is empty");
  require_nonnegative(sigma0, "sigma0");
  for (int j = 0; j <= 2000; ++j) {
    const double v = 0.05 * j;
    const double s = sigma_of_v(v);
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("make_variance_counterexample: sigma_of_v must be > 0, violated at v = " +
                                  std::to_string(v));
    }
  }

  auto m = std::make_shared<ModelSpec>();
  m->id = ModelId::variance_counterexample;
  m->name = "variance_counterexample";
  m->dim = 1;
  m->sigma0 = sigma0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  m->sigma_of_v = [s = std::move(sigma_of_v), inv_sqrt2](double v) { return s(v) * inv_sqrt2; };
  m->sigma = m->sigma_of_v(0.0);
  m->G = zero_field();
  m->F = linear_field(-1.0);
  m->H = linear_field(-1.0);

  auto& c = m->constants;
  c.alpha_F = 1.0;
  c.L_G = 1.0;
  c.m_G = 1.0;
  c.C_G = 0.0;
  c.C_F = 0.0;
  if (sigma0 > 0.0) {
    const double k = 2.0 / (sigma0 * sigma0);
    m->kappa = [k](double) { return k; };
  }
  m->parameters = {{"sigma0", sigma0}};
  finish_ledger(*m);
  return m;
}

ModelPtr make_linear(double g, double a, double sigma, double sigma0, int dim) {
  if (dim < 1) throw std::invalid_argument("make_linear: dim must be >= 1");
  require_nonnegative(a, "a");
  require_nonnegative(sigma, "sigma");
  require_nonnegative(sigma0, "sigma0");

  auto m = std::make_shared<ModelSpec>();
  m->id = ModelId::custom;
  m->name = "linear";
  m->dim = dim;
  m->sigma = sigma;
  m->sigma0 = sigma0;
  m->G = linear_field(-g);
  m->F = linear_field(-a);
  auto& c = m->constants;
  c.alpha_F = a;
  c.L_G = std::abs(g);
  c.m_G = g;
  c.C_G = 0.0;
  c.C_F = 0.0;
  if (sigma0 > 0.0) {
    const double k = 2.0 * g / (sigma0 * sigma0);
    m->kappa = [k](double) { return k; };
  }
  if (!(a > 0.0)) m->warnings.push_back("alpha_F = 0: interaction is not strongly monotone");
  m->parameters = {{"g", g}, {"a", a}, {"sigma", sigma}, {"sigma0", sigma0}};
  finish_ledger(*m);
  return m;
}

ModelPtr make_custom(int dim, VectorField G, VectorField F, double sigma, double sigma0,
                     const ScanOptions& scan) {
  if (dim < 1) throw std::invalid_argument("make_custom: dim must be >= 1");
  if (!G || !F) throw std::invalid_argument("make_custom: G and F must be set");
  require_nonnegative(sigma, "sigma");
  require_nonnegative(sigma0, "sigma0");

  auto m = std::make_shared<ModelSpec>();
  m->id = ModelId::custom;
  m->name = "custom";
  m->dim = dim;
  m->sigma = sigma;
  m->sigma0 = sigma0;
  m->G = std::move(G);
  m->F = std::move(F);

  const EstimatedConstants g_est = estimate_drift_constants(m->G, dim, scan);
  const EstimatedConstants f_est = estimate_drift_constants(m->F, dim, scan);
  auto& c = m->constants;
  c.L_G = g_est.lipschitz;
  c.m_G = g_est.one_sided;
  c.C_G = g_est.jacobian_lipschitz;
  c.alpha_F = estimate_monotonicity(m->F, dim, scan);
  c.C_F = f_est.jacobian_lipschitz;
  c.closed_form = false;
  c.confidence_margin = kGridMargin;
  if (sigma0 > 0.0) {
    const VectorField g = m->G;
    m->kappa = [table = std::make_shared<KappaTable>(
                    [g, dim, sigma0, scan](double r) { return kappa_scan(g, dim, sigma0, r, scan); })](
                   double r) { return (*table)(r); };
  }
  m->parameters = {{"sigma", sigma}, {"sigma0", sigma0}};
  finish_ledger(*m);
  return m;
}

std::vector<double> ou_fixed_points(const VectorField& f_map, double a, double lo, double hi,
                                    std::size_t grid) {
  if (!(hi > lo) || grid < 2) throw std::invalid_argument("ou_fixed_points: bad interval");
  auto q = [&](double m) {
    double in[1] = {m}, out[1];
    f_map(in, out);
    return out[0] - a * m;
  };
  std::vector<double> roots;
  const double h = (hi - lo) / static_cast<double>(grid);
  double x0 = lo, q0 = q(lo);
  if (q0 == 0.0) roots.push_back(x0);
  for (std::size_t j = 1; j <= grid; ++j) {
    const double x1 = lo + h * static_cast<double>(j);
    const double q1 = q(x1);
    if (q1 == 0.0) {
      roots.push_back(x1);
    } else if (q0 * q1 < 0.0) {
      double l = x0, r = x1, ql = q0;
      for (int it = 0; it < 200 && r - l > 0.0; ++it) {
        const double mid = 0.5 * (l + r);
        if (mid <= l || mid >= r) break;
        const double qm = q(mid);
        if (qm == 0.0) {
          l = r = mid;
          break;
        }
        if ((qm < 0.0) == (ql < 0.0)) {
          l = mid;
          ql = qm;
        } else {
          r = mid;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    x0 = x1;
    q0 = q1;
  }
  return roots;
}

double kappa_scan(const VectorField& drift, int dim, double sigma0, double r, const ScanOptions& scan) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("kappa_scan: sigma0 must be > 0");
  if (!(r > 0.0)) throw std::invalid_argument("kappa_scan: r must be > 0");
  const double scale = -2.0 / (sigma0 * sigma0 * r * r);
  double best = std::numeric_limits<double>::infinity();
  if (dim == 1) {
    const std::size_t n = std::max<std::size_t>(scan.points, 2);
    const double h = 2.0 * scan.radius / static_cast<double>(n - 1);
    double x[1], y[1], bx[1], by[1];
    for (std::size_t j = 0; j < n; ++j) {
      const double c = -scan.radius + h * static_cast<double>(j);
      x[0] = c + 0.5 * r;
      y[0] = c - 0.5 * r;
      drift(x, bx);
      drift(y, by);
      best = std::min(best, scale * (x[0] - y[0]) * (bx[0] - by[0]));
    }
    return best;
  }
  NormalStream dir(derive_streams(scan.seed, 1, Role::initial));
  UniformStream mid(derive_streams(scan.seed, 2, Role::initial));
  std::vector<double> x(dim), y(dim), bx(dim), by(dim), e(dim);
  for (std::size_t s = 0; s < scan.points; ++s) {
    double n2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      e[k] = dir.next();
      n2 += e[k] * e[k];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < dim; ++k) {
      const double c = scan.radius * (2.0 * mid.next_double() - 1.0);
      x[k] = c + 0.5 * r * e[k] * inv;
      y[k] = c - 0.5 * r * e[k] * inv;
    }
    drift(x, bx);
    drift(y, by);
    double q = 0.0;
    for (int k = 0; k < dim; ++k) q += (x[k] - y[k]) * (bx[k] - by[k]);
    best = std::min(best, scale * q);
  }
  return best;
}

double kappa_canonical(const ModelSpec& model, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("kappa_canonical: r must be > 0");
  if (!(model.sigma0 > 0.0)) throw std::invalid_argument("kappa_canonical: requires sigma0 > 0");
  if (model.kappa) return model.kappa(r);
  return kappa_scan(model.confining_drift(), model.dim, model.sigma0, r);
}

KappaTable::KappaTable(const ScalarFunction& kappa, double r_min, double r_max, std::size_t points) {
  if (!(r_min > 0.0) || !(r_max > r_min) || points < 2) {
    throw std::invalid_argument("KappaTable: need 0 < r_min < r_max and >= 2 points");
  }
  log_min_ = std::log(r_min);
  log_step_ = (std::log(r_max) - log_min_) / static_cast<double>(points - 1);
  r_.resize(points);
  k_.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    r_[j] = j + 1 == points ? r_max : std::exp(log_min_ + log_step_ * static_cast<double>(j));
    k_[j] = kappa(r_[j]);
  }
}

double KappaTable::operator()(double r) const {
  if (r <= r_.front()) return k_.front();
  if (r >= r_.back()) return k_.back();
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - r_.begin());
  const double w = (r - r_[j - 1]) / (r_[j] - r_[j - 1]);
  return k_[j - 1] + w * (k_[j] - k_[j - 1]);
}

bool AssumptionReport::all_passed() const {
  return std::all_of(clauses.begin(), clauses.end(),
                     [](const ClauseResult& c) { return !c.applicable || c.passed; });
}

const ClauseResult* AssumptionReport::find(const std::string& clause) const {
  for (const auto& c : clauses) {
    if (c.clause == clause) return &c;
  }
  return nullptr;
}

double kappa_negative_integral(const ScalarFunction& kappa, std::size_t points) {
  const double h = 1.0 / static_cast<double>(points - 1);
  double sum = 0.0, prev = 0.0;  // integrand r kappa^- vanishes at r = 0
  for (std::size_t j = 1; j < points; ++j) {
    const double r = h * static_cast<double>(j);
    const double cur = r * std::max(0.0, -kappa(r));
    sum += 0.5 * h * (prev + cur);
    prev = cur;
  }
  return sum;
}

AssumptionReport check_assumptions(const ModelSpec& model, std::size_t sample_count, double radius,
                                   double tolerance) {
  const int d = model.dim;
  const auto& c = model.constants;
  const VectorField target = model.confining_drift() ? model.confining_drift() : zero_field();
  const VectorField F = model.F ? model.F : zero_field();
  const double rel = c.closed_form ? 0.0 : 1e-6;
  auto tol_for = [&](double scale) { return tolerance * (1.0 + scale) + rel * scale; };

  const auto pairs = sample_pairs(d, std::max<std::size_t>(sample_count, 2), radius, 0xa55u);
  std::vector<double> bx(d), by(d), fx(d), fy(d), diff(d), bdiff(d), fdiff(d);

  ClauseResult f0;
  f0.clause = "F.zero_at_origin";
  {
    std::vector<double> zero(d, 0.0);
    F(zero, fx);
    f0.witness = norm(fx);
    f0.passed = f0.witness <= tolerance;
  }

  ClauseResult mono;
  mono.clause = "F.monotonicity";
  ClauseResult f_jac;
  f_jac.clause = "F.derivative_lipschitz";
  ClauseResult conf;
  conf.clause = "G.confinement";
  ClauseResult lip;
  lip.clause = "G.lipschitz";
  ClauseResult g_jac;
  g_jac.clause = "G.derivative_lipschitz";
  ClauseResult one_sided;
  one_sided.clause = "ledger.m_G";
  mono.witness = std::numeric_limits<double>::infinity();
  one_sided.witness = std::numeric_limits<double>::infinity();
  conf.applicable = model.sigma0 > 0.0 && static_cast<bool>(model.kappa);
  mono.passed = c.alpha_F > 0.0;
  if (!mono.passed) mono.detail = "alpha_F must be > 0";

  double worst_conf = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    target(x, bx);
    target(y, by);
    F(x, fx);
    F(y, fy);
    for (int k = 0; k < d; ++k) {
      diff[k] = x[k] - y[k];
      bdiff[k] = bx[k] - by[k];
      fdiff[k] = fx[k] - fy[k];
    }
    const double r = norm(diff), r2 = r * r;
    const double g_inner = dot(diff, bdiff), f_inner = dot(diff, fdiff);

    // F monotonicity
    const double alpha_seen = -f_inner / r2;
    if (alpha_seen < mono.witness) {
      mono.witness = alpha_seen;
      mono.witness_x = x;
      mono.witness_y = y;
    }
    if (f_inner > -c.alpha_F * r2 + tol_for(c.alpha_F * r2)) mono.passed = false;

    // G Lipschitz
    const double lip_seen = norm(bdiff) / r;
    if (lip_seen > lip.witness) {
      lip.witness = lip_seen;
      lip.witness_x = x;
      lip.witness_y = y;
    }
    if (norm(bdiff) > c.L_G * r + tol_for(c.L_G * r)) lip.passed = false;

    // one-sided m_G
    const double m_seen = -g_inner / r2;
    if (m_seen < one_sided.witness) {
      one_sided.witness = m_seen;
      one_sided.witness_x = x;
      one_sided.witness_y = y;
    }
    if (g_inner > -c.m_G * r2 + tol_for(std::abs(c.m_G) * r2)) one_sided.passed = false;

    // confinement against kappa
    if (conf.applicable) {
      const double rhs = -0.5 * model.sigma0 * model.sigma0 * model.kappa(r) * r2;
      const double excess = g_inner - rhs;
      if (excess > worst_conf) {
        worst_conf = excess;
        conf.witness_x = x;
        conf.witness_y = y;
      }
      if (excess > tol_for(std::abs(rhs))) conf.passed = false;
    }

    // Jacobian Lipschitz via finite differences
    const double fd_tol = std::max(tolerance, 1e-6);
    const auto jg_x = fd_jacobian(target, x), jg_y = fd_jacobian(target, y);
    const double jg = jacobian_distance(jg_x, jg_y, d);
    g_jac.witness = std::max(g_jac.witness, jg / r);
    if (jg > c.C_G * r + fd_tol * (1.0 + c.C_G * r + spectral_norm(jg_x, d))) {
      if (g_jac.passed) {
        g_jac.witness_x = x;
        g_jac.witness_y = y;
      }
      g_jac.passed = false;
    }
    const auto jf_x = fd_jacobian(F, x), jf_y = fd_jacobian(F, y);
    const double jf = jacobian_distance(jf_x, jf_y, d);
    f_jac.witness = std::max(f_jac.witness, jf / r);
    if (jf > c.C_F * r + fd_tol * (1.0 + c.C_F * r + spectral_norm(jf_x, d))) {
      if (f_jac.passed) {
        f_jac.witness_x = x;
        f_jac.witness_y = y;
      }
      f_jac.passed = false;
    }
  }

  if (conf.applicable) {
    conf.witness = worst_conf;
    const double r_far = std::max(KappaTable::kDefaultMax, 2.0 * radius);
    const double k_far = model.kappa(r_far);
    if (!(k_far > 0.0)) {
      conf.passed = false;
      conf.detail = "kappa(" + std::to_string(r_far) + ") = " + std::to_string(k_far) +
                    " is not positive: drift is not confining at infinity";
    }
    const double integral = kappa_negative_integral(model.kappa);
    if (!(integral < 1e3)) {
      conf.passed = false;
      conf.detail += " integral of r kappa^- over (0,1] = " + std::to_string(integral);
    }
  } else {
    conf.detail = "requires sigma0 > 0";
  }

  AssumptionReport report;
  report.clauses = {conf, lip, g_jac, f0, mono, f_jac, one_sided};
  return report;
}

}  // namespace cmv
