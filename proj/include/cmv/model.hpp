#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cmv {

/// Vector field R^d -> R^d, written into `out` (same length as `x`).
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
using ScalarFunction = std::function<double(double)>;

enum class ModelId { double_well, ou_variant, variance_counterexample, custom };

std::string to_string(ModelId id);

/// Constants of the confinement and interaction assumptions.
///
/// For models whose particle drift contains a term depending on the
/// ensemble mean only (OU variant, variance counter-example) the G-constants
/// describe that mean drift, which plays the role of G for the conditional
/// mean dynamics.
struct ConstantsLedger {
  double alpha_F = 0.0;  ///< strong monotonicity of F
  double L_G = 0.0;      ///< Lipschitz constant of G
  double C_G = 0.0;      ///< Lipschitz constant of DG
  double C_F = 0.0;      ///< Lipschitz constant of DF
  double m_G = 0.0;      ///< one-sided bound (x-y).(G(x)-G(y)) <= -m_G |x-y|^2
  double c_alpha = 0.0;  ///< alpha_F - L_G
  double kappa2 = 0.0;   ///< sup of kappa on (0, 1]; NaN when sigma0 = 0
  bool closed_form = true;
  /// Relative margin applied to grid-estimated constants (0 for closed forms).
  double confidence_margin = 0.0;
};

/// Particle drift is  G(x_i) + F(x_i - mean) + H(mean)  where H is optional.
/// Idiosyncratic intensity is `sigma`, or sigma_of_v(v) when that is set.
struct ModelSpec {
  ModelId id = ModelId::custom;
  std::string name;
  int dim = 1;
  VectorField G;
  VectorField F;
  VectorField H;  ///< mean-field drift; empty when absent
  ScalarFunction sigma_of_v;  ///< state-dependent intensity; empty when constant
  double sigma = 0.0;
  double sigma0 = 0.0;
  ConstantsLedger constants;
  ScalarFunction kappa;  ///< r -> kappa(r) on (0, inf); empty when sigma0 = 0
  std::vector<std::string> warnings;
  std::map<std::string, double> parameters;

  bool has_mean_drift() const noexcept { return static_cast<bool>(H); }
  /// Drift whose confinement governs the conditional mean: H if present, else G.
  const VectorField& confining_drift() const noexcept { return H ? H : G; }
  double idiosyncratic_intensity(double v) const { return sigma_of_v ? sigma_of_v(v) : sigma; }
};

using ModelPtr = std::shared_ptr<const ModelSpec>;

/// Double-well prototype in d = 1: G(x) = x - x^3 on [-A, A], continued
/// linearly with slope 1 - 3A^2 outside; F(z) = -alpha z.
ModelPtr make_double_well(double alpha, double A, double sigma, double sigma0);

/// Drift -a x + f(mean): F(z) = -a z and H(m) = -a m + f(m).
ModelPtr make_ou_variant(double a, VectorField f_map, double sigma, double sigma0, int dim = 1);

/// d = 1 model with drift -x and intensity depending on the empirical
/// variance. Particles use sigma_of_v(v)/sqrt(2) so that the variance obeys
/// dv/dt = -2v + sigma_of_v(v)^2 / 2.
ModelPtr make_variance_counterexample(ScalarFunction sigma_of_v, double sigma0);

/// Linear model G(x) = -g x, F(z) = -a z with closed-form constants.
ModelPtr make_linear(double g, double a, double sigma, double sigma0, int dim = 1);

struct ScanOptions {
  double radius = 10.0;
  std::size_t points = 4001;
  std::uint64_t seed = 0x5eedu;  ///< pair sampling for d > 1
};

/// Generic model with constants estimated by grid maximization.
ModelPtr make_custom(int dim, VectorField G, VectorField F, double sigma, double sigma0,
                     const ScanOptions& scan = {});

/// Fixed points of m -> f(m)/a on [lo, hi] (d = 1), located by sign changes
/// of f(m) - a m on a grid and refined by bisection.
std::vector<double> ou_fixed_points(const VectorField& f_map, double a, double lo, double hi,
                                    std::size_t grid = 4000);

/// Canonical kappa(r): closed form for built-ins, otherwise a grid scan.
double kappa_canonical(const ModelSpec& model, double r);

/// inf over sampled pairs with |x - y| = r of -(2/sigma0^2)(x-y).(b(x)-b(y))/r^2.
/// In d = 1 the scan runs over pair midpoints on [-radius, radius].
double kappa_scan(const VectorField& drift, int dim, double sigma0, double r,
                  const ScanOptions& scan = {});

/// kappa sampled on a log-spaced grid, linearly interpolated, constant beyond the ends.
class KappaTable {
public:
  static constexpr double kDefaultMin = 1e-3;
  static constexpr double kDefaultMax = 50.0;
  static constexpr std::size_t kDefaultPoints = 2048;

  KappaTable(const ScalarFunction& kappa, double r_min = kDefaultMin, double r_max = kDefaultMax,
             std::size_t points = kDefaultPoints);

  double operator()(double r) const;
  const std::vector<double>& radii() const noexcept { return r_; }
  const std::vector<double>& values() const noexcept { return k_; }

private:
  std::vector<double> r_;
  std::vector<double> k_;
  double log_min_ = 0.0;
  double log_step_ = 1.0;
};

struct ClauseResult {
  std::string clause;
  bool applicable = true;
  bool passed = true;
  double witness = 0.0;  ///< constant observed on the sample (meaning depends on clause)
  std::vector<double> witness_x;
  std::vector<double> witness_y;
  std::string detail;
};

struct AssumptionReport {
  std::vector<ClauseResult> clauses;
  bool all_passed() const;
  const ClauseResult* find(const std::string& clause) const;
};

/// Sampled check of the confinement, Lipschitz, Jacobian-Lipschitz and
/// interaction-monotonicity clauses. Failures are entries, never throws.
AssumptionReport check_assumptions(const ModelSpec& model, std::size_t sample_count = 10000,
                                   double radius = 10.0, double tolerance = 1e-9);

/// Trapezoid estimate of the integral of r kappa(r)^- over (0, 1].
double kappa_negative_integral(const ScalarFunction& kappa, std::size_t points = 2001);

}  // namespace cmv
