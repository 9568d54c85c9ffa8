#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cmv/errors.hpp"
#include "cmv/kernels.hpp"
#include "cmv/model.hpp"
#include "cmv/rng.hpp"

namespace cmv {

/// Law of the i.i.d. initial positions.
struct InitialLaw {
  enum class Kind { point_mass, gaussian, two_point };

  Kind kind = Kind::point_mass;
  std::vector<double> first;   ///< point mass / gaussian mean / first atom
  std::vector<double> second;  ///< second atom (two_point)
  double variance = 0.0;       ///< per-coordinate variance (gaussian)
  double weight_first = 0.5;   ///< probability of `first` (two_point)

  static InitialLaw point_mass(std::vector<double> at);
  static InitialLaw gaussian(std::vector<double> mean, double variance);
  static InitialLaw two_point(std::vector<double> a, std::vector<double> b, double weight_a = 0.5);

  int dim() const noexcept { return static_cast<int>(first.size()); }
};

/// N particles in d dimensions under one common-noise realization. Each
/// particle owns an idiosyncratic normal stream.
class ParticleEnsemble {
public:
  ParticleEnsemble(ModelPtr model, std::vector<double> positions, std::uint64_t master_seed,
                   std::uint64_t realization);

  const ModelSpec& model() const noexcept { return *model_; }
  const ModelPtr& model_ptr() const noexcept { return model_; }
  std::size_t size() const noexcept { return n_; }
  int dim() const noexcept { return model_->dim; }
  double time() const noexcept { return t_; }
  std::size_t steps() const noexcept { return steps_; }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t realization() const noexcept { return realization_; }

  std::span<const double> positions() const noexcept { return x_; }
  std::span<const double> particle(std::size_t i) const { return std::span<const double>(x_).subspan(i * dim(), dim()); }
  std::span<NormalStream> particle_streams() noexcept { return streams_; }

private:
  friend void em_step(ParticleEnsemble&, double, std::span<const double>, Exec);

  ModelPtr model_;
  std::size_t n_ = 0;
  std::vector<double> x_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
  std::uint64_t master_seed_ = 0;
  std::uint64_t realization_ = 0;
  std::vector<NormalStream> streams_;
  std::vector<double> xi_;
};

struct EmpiricalStats {
  std::vector<double> mu1;
  double mu2 = 0.0;
  double v = 0.0;  ///< population variance, divisor N
};

EmpiricalStats empirical_stats(std::span<const double> positions, int d, Exec exec = Exec::serial);
inline EmpiricalStats empirical_stats(const ParticleEnsemble& ens, Exec exec = Exec::serial) {
  return empirical_stats(ens.positions(), ens.dim(), exec);
}

/// Empirical variance only (population convention).
double empirical_variance(std::span<const double> positions, int d, std::span<const double> mean,
                          Exec exec = Exec::serial);

/// Largest dt accepted by the stability guard dt * L_G <= 0.5.
double max_stable_dt(const ModelSpec& model);

/// Throws NumericalFault when dt * L_G > 0.5 or dt <= 0.
void check_step_size(const ModelSpec& model, double dt);

/// One Euler-Maruyama step of the particle system. `common_increment` is
/// the Brownian increment of the common noise over dt (distributed
/// N(0, dt I)); every particle receives sigma0 times the same increment.
void em_step(ParticleEnsemble& ens, double dt, std::span<const double> common_increment,
             Exec exec = Exec::serial);

/// Positions of N i.i.d. draws from `law`, read from `stream`.
std::vector<double> sample_positions(const InitialLaw& law, std::size_t N, StreamId stream);

/// Ensemble with i.i.d. initial positions; the initial stream is distinct
/// from every common and particle stream.
ParticleEnsemble sample_initial(ModelPtr model, const InitialLaw& law, std::size_t N,
                                std::uint64_t master_seed, std::uint64_t realization = 0);

/// Time series of empirical statistics, one row per recorded time.
struct StatsTrajectory {
  int dim = 1;
  std::vector<double> times;
  std::vector<double> mu1;  ///< times.size() x dim, row-major
  std::vector<double> mu2;
  std::vector<double> v;
  std::vector<std::string> extra_names;
  std::vector<std::vector<double>> extra;

  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> mu1_at(std::size_t k) const { return std::span<const double>(mu1).subspan(k * dim, dim); }
  /// Series named `name` among the extra columns; throws if absent.
  const std::vector<double>& extra_series(const std::string& name) const;
  void add_extra(std::string name, std::vector<double> series);

  /// Header `t,mu1_0..mu1_{d-1},mu2,v[,extra...]`, 17 significant digits.
  void write_csv(std::ostream& os) const;
};

/// Statistic of the empirical measure recorded alongside the moments.
struct EnsembleFunctional {
  std::string name;
  std::function<double(std::span<const double> positions, int d)> fn;
};

struct SimulateOptions {
  double dt = 1e-3;
  double T = 1.0;
  std::size_t record_every = 1;
  Exec exec = Exec::serial;
  std::vector<EnsembleFunctional> functionals;
};

/// Number of steps used for horizon T at step dt; the last step is
/// shortened so the run ends exactly at T.
std::size_t step_count(double dt, double T);

/// Advance `ens` to time T, drawing common increments from `common`.
/// Records t = 0, every `record_every` steps, and t = T.
StatsTrajectory simulate(ParticleEnsemble& ens, NormalStream& common, const SimulateOptions& options);

/// Deterministic in (model, law, N, options, master_seed, realization).
StatsTrajectory simulate(ModelPtr model, const InitialLaw& law, std::size_t N,
                         const SimulateOptions& options, std::uint64_t master_seed,
                         std::uint64_t realization = 0);

}  // namespace cmv
