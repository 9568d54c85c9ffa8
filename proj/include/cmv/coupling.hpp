#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cmv/ensemble.hpp"

namespace cmv {

/// 0 for |r| <= delta/2, 1 for |r| >= delta, linear in |r| between.
double pi_delta(std::span<const double> r, double delta);
double pi_delta_norm(double r_norm, double delta);
/// sqrt(1 - pi^2), computed from pi.
double lambda_delta(std::span<const double> r, double delta);
double lambda_from_pi(double pi);

/// out = (I - 2 e e^T) w.
void reflection_apply(std::span<const double> e, std::span<const double> w, std::span<double> out);

/// Two particle systems with matched N, d and model. Particle i of both
/// legs reads the same idiosyncratic stream; the common noise comes from
/// a main and an auxiliary stream.
class CoupledEnsemble {
public:
  CoupledEnsemble(ModelPtr model, std::vector<double> x, std::vector<double> x_tilde, double delta,
                  std::uint64_t master_seed, std::uint64_t realization = 0);

  const ModelSpec& model() const noexcept { return *model_; }
  std::size_t size() const noexcept { return n_; }
  int dim() const noexcept { return model_->dim; }
  double delta() const noexcept { return delta_; }
  double time() const noexcept { return t_; }
  std::size_t steps() const noexcept { return steps_; }
  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> x_tilde() const noexcept { return xt_; }

private:
  friend void reflection_step(CoupledEnsemble&, double, Exec);
  friend void synchronous_step(CoupledEnsemble&, double, Exec);
  void advance(double dt, std::span<const double> shift_x, std::span<const double> shift_xt,
               std::span<const double> mean_x, std::span<const double> mean_xt, Exec exec);

  ModelPtr model_;
  std::size_t n_ = 0;
  std::vector<double> x_, xt_;
  double delta_;
  double t_ = 0.0;
  std::size_t steps_ = 0;
  std::vector<NormalStream> particle_;
  NormalStream common_, aux_;
  std::vector<double> xi_;
};

/// Reflection coupling step of size dt.
void reflection_step(CoupledEnsemble& c, double dt, Exec exec = Exec::serial);
/// Both legs receive the same common increment and the same particle draws.
void synchronous_step(CoupledEnsemble& c, double dt, Exec exec = Exec::serial);

struct ThetaParts {
  double theta = 0.0;
  double abs_E = 0.0;         ///< |mean(x) - mean(x~)|
  double centered_rms = 0.0;  ///< sqrt(mean |A - A~|^2)
};

ThetaParts theta_parts(std::span<const double> x, std::span<const double> x_tilde, int d,
                       Exec exec = Exec::serial);
inline ThetaParts theta_parts(const CoupledEnsemble& c, Exec exec = Exec::serial) {
  return theta_parts(c.x(), c.x_tilde(), c.dim(), exec);
}
inline double theta(const CoupledEnsemble& c, Exec exec = Exec::serial) { return theta_parts(c, exec).theta; }

enum class CouplingKind { reflection, synchronous };

struct CoupledRunOptions {
  std::size_t N = 1024;
  double dt = 1e-3;
  double T = 1.0;
  std::size_t record_every = 1;
  std::size_t realizations = 1;
  /// Cutoff; values <= 0 select 1e-2 * max(|E_0|, 1) per realization.
  double delta = 0.0;
  CouplingKind kind = CouplingKind::reflection;
  /// Draw the second leg's initial positions from their own stream. When
  /// false both legs sample from the same stream.
  bool independent_initial = true;
  /// Realizations run concurrently when parallel; each ensemble then steps serially.
  Exec exec = Exec::serial;
};

struct CoupledRun {
  std::vector<double> times;
  std::vector<double> theta_mean, theta_se, absE_mean, centered_rms_mean;
  /// realizations x times, row-major
  std::vector<double> theta, abs_E, centered_rms;
  std::vector<double> deltas;  ///< cutoff used by each realization
  std::size_t realizations = 0;

  std::span<const double> theta_of(std::size_t r) const {
    return std::span<const double>(theta).subspan(r * times.size(), times.size());
  }
  std::span<const double> abs_E_of(std::size_t r) const {
    return std::span<const double>(abs_E).subspan(r * times.size(), times.size());
  }

  /// Header `t,theta_mean,theta_se,absE_mean,centered_rms_mean`.
  void write_csv(std::ostream& os) const;
  /// Header `realization,t,theta,absE,centered_rms`.
  void write_realizations_csv(std::ostream& os) const;
};

/// Coupled runs of M realizations; realization r reads the streams of
/// (master_seed, r). Aggregation is in realization order.
CoupledRun run_coupled(ModelPtr model, const InitialLaw& law_x, const InitialLaw& law_x_tilde,
                       const CoupledRunOptions& options, std::uint64_t master_seed);

}  // namespace cmv
