#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmv/coupling.hpp"
#include "cmv/eberle.hpp"
#include "cmv/ensemble.hpp"
#include "cmv/model.hpp"

namespace cmv {

/// Invalid configuration; `key()` is the offending `section.key` path.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

struct ModelConfig {
  std::string id = "double_well";
  int dim = 1;
  double sigma = 0.1;
  double sigma0 = 0.5;
  double alpha = 8.0;  ///< double_well, linear
  double A = 1.5;      ///< double_well
  double a = 1.0;      ///< ou_variant
  std::string f = "zero";  ///< ou_variant: zero | clipped_cubic
  double f_clip = 8.0;
  double g = 1.0;  ///< linear: G(x) = -g x
  std::string sigma_v = "sqrt_floor";  ///< variance_counterexample: constant | sqrt_floor
  double sigma_v_scale = 2.0;
  double sigma_v_floor = 0.01;
};

struct CoupleConfig {
  double delta = 0.0;  ///< <= 0 selects the default cutoff
  CouplingKind kind = CouplingKind::reflection;
  bool independent_initial = true;
  double fit_lo = 0.0;
  double fit_hi = -1.0;  ///< < 0 means T
  bool verbose = false;
};

struct MetricConfig {
  std::string kappa = "model";  ///< model | constant
  double kappa_value = 2.0;
  std::optional<double> sigma0;  ///< defaults to the model's
  std::size_t mesh = 8192;
  double first_r_max = 50.0;
};

struct VerifyConfig {
  std::string claim = "variance-bound";
  double tolerance = 0.0;
};

struct SweepConfig {
  std::vector<double> sigma;
  std::vector<double> sigma0;
  std::vector<double> alpha;
  double start = 1.0;
  double radius = 0.5;
};

struct RunConfig {
  std::optional<ModelConfig> model;
  std::size_t N = 1024;
  double dt = 1e-3;
  double T = 1.0;
  std::size_t record_every = 1;
  std::size_t realizations = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = ".";
  InitialLaw init = InitialLaw::point_mass({0.0});
  std::optional<InitialLaw> init_tilde;
  CoupleConfig couple;
  MetricConfig metric;
  VerifyConfig verify;
  SweepConfig sweep;
};

inline const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids{"double_well", "ou_variant", "variance_counterexample", "linear"};
  return ids;
}

/// INI text with sections [model] [run] [init] [init_tilde] [couple]
/// [metric] [verify] [sweep]. `seed_override` replaces run.master_seed and
/// makes it optional.
RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Model described by the config; throws ConfigError naming the key.
ModelPtr build_model(const ModelConfig& config);

}  // namespace cmv
