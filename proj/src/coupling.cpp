#include "cmv/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cmv/csv.hpp"
#include "cmv/farm.hpp"

namespace cmv {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double pi_delta_norm(double r_norm, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("pi_delta: delta must be > 0");
  if (r_norm <= 0.5 * delta) return 0.0;
  if (r_norm >= delta) return 1.0;
  return 2.0 * r_norm / delta - 1.0;
}

double pi_delta(std::span<const double> r, double delta) { return pi_delta_norm(norm(r), delta); }

double lambda_from_pi(double pi) { return std::sqrt(1.0 - pi * pi); }

double lambda_delta(std::span<const double> r, double delta) { return lambda_from_pi(pi_delta(r, delta)); }

void reflection_apply(std::span<const double> e, std::span<const double> w, std::span<double> out) {
  double ew = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) ew += e[k] * w[k];
  for (std::size_t k = 0; k < e.size(); ++k) out[k] = w[k] - 2.0 * ew * e[k];
}

CoupledEnsemble::CoupledEnsemble(ModelPtr model, std::vector<double> x, std::vector<double> x_tilde,
                                 double delta, std::uint64_t master_seed, std::uint64_t realization)
    : model_(std::move(model)), x_(std::move(x)), xt_(std::move(x_tilde)), delta_(delta) {
  if (!model_) throw std::invalid_argument("CoupledEnsemble: model is null");
  if (!(delta_ > 0.0)) throw std::invalid_argument("CoupledEnsemble: delta must be > 0");
  const std::size_t d = static_cast<std::size_t>(model_->dim);
  if (x_.size() != xt_.size()) throw std::invalid_argument("CoupledEnsemble: legs differ in size");
  if (x_.size() % d != 0) throw std::invalid_argument("CoupledEnsemble: positions are not N x d");
  n_ = x_.size() / d;
  if (n_ < 2) throw std::invalid_argument("CoupledEnsemble: need N >= 2 particles");
  particle_.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    particle_.emplace_back(derive_streams(master_seed, realization, Role::particle, static_cast<std::uint32_t>(i)));
  }
  common_ = NormalStream(derive_streams(master_seed, realization, Role::common));
  aux_ = NormalStream(derive_streams(master_seed, realization, Role::aux_common));
  xi_.resize(x_.size());
}

void CoupledEnsemble::advance(double dt, std::span<const double> shift_x, std::span<const double> shift_xt,
                              std::span<const double> mean_x, std::span<const double> mean_xt, Exec exec) {
  const ModelSpec& model = *model_;
  const int d = model.dim;
  double sx = model.sigma, sxt = model.sigma;
  if (model.sigma_of_v) {
    sx = model.sigma_of_v(empirical_variance(x_, d, mean_x, exec));
    sxt = model.sigma_of_v(empirical_variance(xt_, d, mean_xt, exec));
  }
  const double scale_x = sx * std::sqrt(dt), scale_xt = sxt * std::sqrt(dt);
  if (scale_x != 0.0 || scale_xt != 0.0) kernels::draw_normals(particle_, d, xi_, exec);

  std::size_t bad = kernels::euler_update(model, x_, mean_x, dt, scale_x, xi_, shift_x, exec);
  if (bad < n_) {
    throw NumericalFault("coupled step " + std::to_string(steps_) + ": non-finite position in leg X, particle " +
                             std::to_string(bad),
                         steps_, bad);
  }
  bad = kernels::euler_update(model, xt_, mean_xt, dt, scale_xt, xi_, shift_xt, exec);
  if (bad < n_) {
    throw NumericalFault("coupled step " + std::to_string(steps_) +
                             ": non-finite position in leg X~, particle " + std::to_string(bad),
                         steps_, bad);
  }
  t_ += dt;
  ++steps_;
}

void reflection_step(CoupledEnsemble& c, double dt, Exec exec) {
  const ModelSpec& model = *c.model_;
  const int d = model.dim;
  check_step_size(model, dt);

  std::vector<double> mx(d), mxt(d), e(d), db(d), dbt(d), rdb(d), shift_x(d), shift_xt(d);
  kernels::coordinate_mean(c.x_, d, mx, exec);
  kernels::coordinate_mean(c.xt_, d, mxt, exec);
  for (int k = 0; k < d; ++k) e[k] = mx[k] - mxt[k];
  const double abs_e = norm(e);
  if (abs_e < std::numeric_limits<double>::epsilon()) {
    std::fill(e.begin(), e.end(), 0.0);
  } else {
    for (auto& ek : e) ek /= abs_e;
  }
  const double pi = pi_delta_norm(abs_e, c.delta_);
  const double lambda = lambda_from_pi(pi);

  const double sqrt_dt = std::sqrt(dt);
  for (int k = 0; k < d; ++k) db[k] = sqrt_dt * c.common_.next();
  for (int k = 0; k < d; ++k) dbt[k] = sqrt_dt * c.aux_.next();
  reflection_apply(e, db, rdb);
  for (int k = 0; k < d; ++k) {
    shift_x[k] = model.sigma0 * (pi * db[k] + lambda * dbt[k]);
    shift_xt[k] = model.sigma0 * (pi * rdb[k] + lambda * dbt[k]);
  }
  c.advance(dt, shift_x, shift_xt, mx, mxt, exec);
}

void synchronous_step(CoupledEnsemble& c, double dt, Exec exec) {
  const ModelSpec& model = *c.model_;
  const int d = model.dim;
  check_step_size(model, dt);

  std::vector<double> mx(d), mxt(d), shift(d);
  kernels::coordinate_mean(c.x_, d, mx, exec);
  kernels::coordinate_mean(c.xt_, d, mxt, exec);
  const double sqrt_dt = std::sqrt(dt);
  for (int k = 0; k < d; ++k) shift[k] = model.sigma0 * sqrt_dt * c.common_.next();
  c.advance(dt, shift, shift, mx, mxt, exec);
}

ThetaParts theta_parts(std::span<const double> x, std::span<const double> x_tilde, int d, Exec exec) {
  if (x.size() != x_tilde.size()) throw std::invalid_argument("theta: legs differ in size");
  const std::size_t n = x.size() / static_cast<std::size_t>(d);
  std::vector<double> mx(d), mxt(d), diff(d);
  kernels::coordinate_mean(x, d, mx, exec);
  kernels::coordinate_mean(x_tilde, d, mxt, exec);
  for (int k = 0; k < d; ++k) diff[k] = mx[k] - mxt[k];
  ThetaParts parts;
  parts.abs_E = norm(diff);
  parts.centered_rms =
      std::sqrt(kernels::squared_distance_sum(x, x_tilde, mx, mxt, d, exec) / static_cast<double>(n));
  parts.theta = parts.centered_rms + parts.abs_E;
  return parts;
}

void CoupledRun::write_csv(std::ostream& os) const {
  os << "t,theta_mean,theta_se,absE_mean,centered_rms_mean\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << csv::format_double(times[k]) << ',' << csv::format_double(theta_mean[k]) << ','
       << csv::format_double(theta_se[k]) << ',' << csv::format_double(absE_mean[k]) << ','
       << csv::format_double(centered_rms_mean[k]) << '\n';
  }
}

void CoupledRun::write_realizations_csv(std::ostream& os) const {
  os << "realization,t,theta,absE,centered_rms\n";
  const std::size_t n = times.size();
  for (std::size_t r = 0; r < realizations; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      os << r << ',' << csv::format_double(times[k]) << ',' << csv::format_double(theta[r * n + k]) << ','
         << csv::format_double(abs_E[r * n + k]) << ',' << csv::format_double(centered_rms[r * n + k]) << '\n';
    }
  }
}

CoupledRun run_coupled(ModelPtr model, const InitialLaw& law_x, const InitialLaw& law_x_tilde,
                       const CoupledRunOptions& options, std::uint64_t master_seed) {
  if (!model) throw std::invalid_argument("run_coupled: model is null");
  if (options.realizations == 0) throw std::invalid_argument("run_coupled: need at least one realization");
  if (options.record_every == 0) throw std::invalid_argument("run_coupled: record_every must be >= 1");
  if (law_x.dim() != model->dim || law_x_tilde.dim() != model->dim) {
    throw std::invalid_argument("run_coupled: law and model dimensions differ");
  }
  const std::size_t steps = step_count(options.dt, options.T);

  CoupledRun run;
  run.realizations = options.realizations;
  run.times.push_back(0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    if (k == steps) {
      run.times.push_back(options.T);
    } else if (k % options.record_every == 0) {
      run.times.push_back(options.dt * static_cast<double>(k));
    }
  }
  const std::size_t n_rec = run.times.size();
  const std::size_t M = options.realizations;
  run.theta.assign(M * n_rec, 0.0);
  run.abs_E.assign(M * n_rec, 0.0);
  run.centered_rms.assign(M * n_rec, 0.0);
  run.deltas.assign(M, 0.0);

  const auto one = [&](std::size_t r) {
    const Exec inner = options.exec == Exec::parallel ? Exec::serial : options.exec;
    auto x = sample_positions(law_x, options.N, derive_streams(master_seed, r, Role::initial));
    auto xt = sample_positions(law_x_tilde, options.N,
                               derive_streams(master_seed, r, options.independent_initial ? Role::initial_tilde
                                                                                          : Role::initial));
    double delta = options.delta;
    if (!(delta > 0.0)) {
      const ThetaParts p0 = theta_parts(x, xt, model->dim, inner);
      delta = 1e-2 * std::max(p0.abs_E, 1.0);
    }
    run.deltas[r] = delta;
    CoupledEnsemble c(model, std::move(x), std::move(xt), delta, master_seed, r);
    std::size_t slot = 0;
    const auto store = [&] {
      const ThetaParts p = theta_parts(c, inner);
      run.theta[r * n_rec + slot] = p.theta;
      run.abs_E[r * n_rec + slot] = p.abs_E;
      run.centered_rms[r * n_rec + slot] = p.centered_rms;
      ++slot;
    };
    store();
    for (std::size_t k = 1; k <= steps; ++k) {
      const double h = k < steps ? options.dt : options.T - options.dt * static_cast<double>(steps - 1);
      if (options.kind == CouplingKind::reflection) {
        reflection_step(c, h, inner);
      } else {
        synchronous_step(c, h, inner);
      }
      if (k % options.record_every == 0 || k == steps) store();
    }
  };
  farm(M, options.exec, one);

  run.theta_mean.resize(n_rec);
  run.theta_se.resize(n_rec);
  run.absE_mean.resize(n_rec);
  run.centered_rms_mean.resize(n_rec);
  for (std::size_t k = 0; k < n_rec; ++k) {
    double s = 0.0, se = 0.0, sc = 0.0;
    for (std::size_t r = 0; r < M; ++r) {
      s += run.theta[r * n_rec + k];
      se += run.abs_E[r * n_rec + k];
      sc += run.centered_rms[r * n_rec + k];
    }
    const double mean = s / static_cast<double>(M);
    double ss = 0.0;
    for (std::size_t r = 0; r < M; ++r) {
      const double dev = run.theta[r * n_rec + k] - mean;
      ss += dev * dev;
    }
    run.theta_mean[k] = mean;
    run.theta_se[k] = M > 1 ? std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M)) : 0.0;
    run.absE_mean[k] = se / static_cast<double>(M);
    run.centered_rms_mean[k] = sc / static_cast<double>(M);
  }
  return run;
}

}  // namespace cmv
