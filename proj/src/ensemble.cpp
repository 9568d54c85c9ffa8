#include "cmv/ensemble.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cmv/csv.hpp"

namespace cmv {

InitialLaw InitialLaw::point_mass(std::vector<double> at) {
  InitialLaw law;
  law.kind = Kind::point_mass;
  law.first = std::move(at);
  return law;
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("InitialLaw::gaussian: variance must be > 0");
  InitialLaw law;
  law.kind = Kind::gaussian;
  law.first = std::move(mean);
  law.variance = variance;
  return law;
}

InitialLaw InitialLaw::two_point(std::vector<double> a, std::vector<double> b, double weight_a) {
  if (a.size() != b.size()) throw std::invalid_argument("InitialLaw::two_point: atoms differ in dimension");
  if (!(weight_a >= 0.0 && weight_a <= 1.0)) {
    throw std::invalid_argument("InitialLaw::two_point: weight must lie in [0, 1]");
  }
  InitialLaw law;
  law.kind = Kind::two_point;
  law.first = std::move(a);
  law.second = std::move(b);
  law.weight_first = weight_a;
  return law;
}

ParticleEnsemble::ParticleEnsemble(ModelPtr model, std::vector<double> positions,
                                   std::uint64_t master_seed, std::uint64_t realization)
    : model_(std::move(model)), x_(std::move(positions)), master_seed_(master_seed), realization_(realization) {
  if (!model_) throw std::invalid_argument("ParticleEnsemble: model is null");
  const std::size_t d = static_cast<std::size_t>(model_->dim);
  if (x_.size() % d != 0) throw std::invalid_argument("ParticleEnsemble: positions are not N x d");
  n_ = x_.size() / d;
  if (n_ < 2) throw std::invalid_argument("ParticleEnsemble: need N >= 2 particles");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!std::isfinite(x_[i])) throw NumericalFault("ParticleEnsemble: non-finite initial position", 0, i / d);
  }
  streams_.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    streams_.emplace_back(derive_streams(master_seed, realization, Role::particle, static_cast<std::uint32_t>(i)));
  }
  xi_.resize(x_.size());
}

double empirical_variance(std::span<const double> positions, int d, std::span<const double> mean, Exec exec) {
  const std::size_t n = positions.size() / static_cast<std::size_t>(d);
  return kernels::centered_square_sum(positions, mean, d, exec) / static_cast<double>(n);
}

EmpiricalStats empirical_stats(std::span<const double> positions, int d, Exec exec) {
  const std::size_t n = positions.size() / static_cast<std::size_t>(d);
  if (n < 2) throw std::invalid_argument("empirical_stats: need N >= 2");
  EmpiricalStats s;
  s.mu1.resize(d);
  kernels::coordinate_mean(positions, d, s.mu1, exec);
  const std::vector<double> origin(d, 0.0);
  s.mu2 = kernels::centered_square_sum(positions, origin, d, exec) / static_cast<double>(n);
  s.v = empirical_variance(positions, d, s.mu1, exec);
  return s;
}

double max_stable_dt(const ModelSpec& model) {
  return model.constants.L_G > 0.0 ? 0.5 / model.constants.L_G : std::numeric_limits<double>::infinity();
}

void check_step_size(const ModelSpec& model, double dt) {
  if (!(dt > 0.0)) throw NumericalFault("time step must be > 0");
  if (dt * model.constants.L_G > 0.5 * (1.0 + 1e-12)) {
    throw NumericalFault("stability guard: dt * L_G = " + csv::format_double(dt * model.constants.L_G) +
                         " exceeds 0.5");
  }
}

void em_step(ParticleEnsemble& ens, double dt, std::span<const double> common_increment, Exec exec) {
  const ModelSpec& model = *ens.model_;
  const int d = model.dim;
  check_step_size(model, dt);
  if (common_increment.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("em_step: common increment has wrong dimension");
  }

  std::vector<double> mean(d);
  kernels::coordinate_mean(ens.x_, d, mean, exec);
  double intensity = model.sigma;
  if (model.sigma_of_v) intensity = model.sigma_of_v(empirical_variance(ens.x_, d, mean, exec));

  const double noise_scale = intensity * std::sqrt(dt);
  if (noise_scale != 0.0) kernels::draw_normals(ens.streams_, d, ens.xi_, exec);

  std::vector<double> shift(d);
  for (int k = 0; k < d; ++k) shift[k] = model.sigma0 * common_increment[k];

  const std::size_t bad = kernels::euler_update(model, ens.x_, mean, dt, noise_scale, ens.xi_, shift, exec);
  if (bad < ens.n_) {
    throw NumericalFault("em_step: non-finite position at step " + std::to_string(ens.steps_) +
                             ", particle " + std::to_string(bad),
                         ens.steps_, bad);
  }
  ens.t_ += dt;
  ++ens.steps_;
}

std::vector<double> sample_positions(const InitialLaw& law, std::size_t N, StreamId stream) {
  const std::size_t d = law.first.size();
  if (d == 0) throw std::invalid_argument("sample_positions: law has no dimension");
  std::vector<double> x(N * d);
  switch (law.kind) {
    case InitialLaw::Kind::point_mass:
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < d; ++k) x[i * d + k] = law.first[k];
      }
      break;
    case InitialLaw::Kind::gaussian: {
      if (!(law.variance > 0.0)) throw std::invalid_argument("sample_positions: gaussian variance must be > 0");
      NormalStream normals(stream);
      const double sd = std::sqrt(law.variance);
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < d; ++k) x[i * d + k] = law.first[k] + sd * normals.next();
      }
      break;
    }
    case InitialLaw::Kind::two_point: {
      UniformStream u(stream);
      for (std::size_t i = 0; i < N; ++i) {
        const auto& atom = u.next_double() < law.weight_first ? law.first : law.second;
        for (std::size_t k = 0; k < d; ++k) x[i * d + k] = atom[k];
      }
      break;
    }
  }
  return x;
}

ParticleEnsemble sample_initial(ModelPtr model, const InitialLaw& law, std::size_t N,
                                std::uint64_t master_seed, std::uint64_t realization) {
  if (!model) throw std::invalid_argument("sample_initial: model is null");
  if (law.dim() != model->dim) throw std::invalid_argument("sample_initial: law and model dimensions differ");
  auto x = sample_positions(law, N, derive_streams(master_seed, realization, Role::initial));
  return ParticleEnsemble(std::move(model), std::move(x), master_seed, realization);
}

const std::vector<double>& StatsTrajectory::extra_series(const std::string& name) const {
  for (std::size_t j = 0; j < extra_names.size(); ++j) {
    if (extra_names[j] == name) return extra[j];
  }
  throw std::out_of_range("StatsTrajectory: no extra series named " + name);
}

void StatsTrajectory::add_extra(std::string name, std::vector<double> series) {
  if (series.size() != times.size()) throw std::invalid_argument("StatsTrajectory: extra series length mismatch");
  extra_names.push_back(std::move(name));
  extra.push_back(std::move(series));
}

void StatsTrajectory::write_csv(std::ostream& os) const {
  os << "t";
  for (int k = 0; k < dim; ++k) os << ",mu1_" << k;
  os << ",mu2,v";
  for (const auto& name : extra_names) os << ',' << name;
  os << '\n';
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << csv::format_double(times[r]);
    for (int k = 0; k < dim; ++k) os << ',' << csv::format_double(mu1[r * dim + k]);
    os << ',' << csv::format_double(mu2[r]) << ',' << csv::format_double(v[r]);
    for (const auto& series : extra) os << ',' << csv::format_double(series[r]);
    os << '\n';
  }
}

std::size_t step_count(double dt, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be > 0");
  if (!(dt > 0.0 && dt <= T)) throw std::invalid_argument("time step must satisfy 0 < dt <= T");
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

namespace {

void record(StatsTrajectory& traj, const ParticleEnsemble& ens, double t, const SimulateOptions& options) {
  const EmpiricalStats s = empirical_stats(ens, options.exec);
  traj.times.push_back(t);
  traj.mu1.insert(traj.mu1.end(), s.mu1.begin(), s.mu1.end());
  traj.mu2.push_back(s.mu2);
  traj.v.push_back(s.v);
  for (std::size_t j = 0; j < options.functionals.size(); ++j) {
    traj.extra[j].push_back(options.functionals[j].fn(ens.positions(), ens.dim()));
  }
}

}  // namespace

StatsTrajectory simulate(ParticleEnsemble& ens, NormalStream& common, const SimulateOptions& options) {
  const std::size_t steps = step_count(options.dt, options.T);
  if (options.record_every == 0) throw std::invalid_argument("record_every must be >= 1");
  const int d = ens.dim();

  StatsTrajectory traj;
  traj.dim = d;
  for (const auto& f : options.functionals) {
    traj.extra_names.push_back(f.name);
    traj.extra.emplace_back();
  }
  const double t0 = ens.time();
  record(traj, ens, t0, options);

  std::vector<double> increment(d);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double h = k < steps ? options.dt : options.T - options.dt * static_cast<double>(steps - 1);
    const double sqrt_h = std::sqrt(h);
    for (int j = 0; j < d; ++j) increment[j] = sqrt_h * common.next();
    try {
      em_step(ens, h, increment, options.exec);
    } catch (const NumericalFault& fault) {
      throw NumericalFault(std::string("simulate: step ") + std::to_string(k) + ": " + fault.what(), k,
                           fault.particle());
    }
    if (k % options.record_every == 0 || k == steps) {
      const double t = k < steps ? t0 + options.dt * static_cast<double>(k) : t0 + options.T;
      record(traj, ens, t, options);
    }
  }
  return traj;
}

StatsTrajectory simulate(ModelPtr model, const InitialLaw& law, std::size_t N, const SimulateOptions& options,
                         std::uint64_t master_seed, std::uint64_t realization) {
  ParticleEnsemble ens = sample_initial(std::move(model), law, N, master_seed, realization);
  NormalStream common(derive_streams(master_seed, realization, Role::common));
  return simulate(ens, common, options);
}

}  // namespace cmv
