#include "cmv/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace cmv {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model",
       {"id", "dim", "sigma", "sigma0", "alpha", "A", "a", "f", "f_clip", "g", "sigma_v", "sigma_v_scale",
        "sigma_v_floor"}},
      {"run", {"N", "dt", "T", "record_every", "realizations", "master_seed", "output_dir"}},
      {"init", {"kind", "at", "mean", "variance", "a", "b", "weight"}},
      {"init_tilde", {"kind", "at", "mean", "variance", "a", "b", "weight"}},
      {"couple", {"delta", "kind", "independent_initial", "fit_lo", "fit_hi", "verbose"}},
      {"metric", {"kappa", "kappa_value", "sigma0", "mesh", "first_r_max"}},
      {"verify", {"claim", "tolerance"}},
      {"sweep", {"sigma", "sigma0", "alpha", "start", "radius"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class Section {
public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool present() const { return tree_ != nullptr; }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  double real(const std::string& key, double fallback) const {
    const auto v = raw(key);
    return v ? to_real(key, *v) : fallback;
  }

  std::optional<double> optional_real(const std::string& key) const {
    const auto v = raw(key);
    if (!v) return std::nullopt;
    return to_real(key, *v);
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) const {
    const auto v = raw(key);
    return v ? to_unsigned(key, *v) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(path(key), "expected true or false, got '" + *v + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(key, trim(item)));
    if (out.empty()) throw ConfigError(path(key), "empty list");
    return out;
  }

private:
  double to_real(const std::string& key, const std::string& s) const {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError(path(key), "expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(x)) throw ConfigError(path(key), "expected a number, got '" + s + "'");
    return x;
  }

  std::uint64_t to_unsigned(const std::string& key, const std::string& s) const {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError(path(key), "expected a non-negative integer, got '" + s + "'");
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError(path(key), "integer out of range: '" + s + "'");
    }
  }

  const pt::ptree* tree_;
  std::string name_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

InitialLaw parse_law(const Section& s) {
  const std::string kind = s.text("kind", "point_mass");
  if (kind == "point_mass") return InitialLaw::point_mass(s.reals("at", {0.0}));
  if (kind == "gaussian") {
    const double var = s.real("variance", 1.0);
    require(var > 0.0, s.path("variance"), "must be > 0");
    return InitialLaw::gaussian(s.reals("mean", {0.0}), var);
  }
  if (kind == "two_point") {
    auto a = s.reals("a", {-1.0});
    auto b = s.reals("b", {1.0});
    require(a.size() == b.size(), s.path("b"), "atoms differ in dimension");
    const double w = s.real("weight", 0.5);
    require(w >= 0.0 && w <= 1.0, s.path("weight"), "must lie in [0, 1]");
    return InitialLaw::two_point(std::move(a), std::move(b), w);
  }
  throw ConfigError(s.path("kind"), "unknown law '" + kind + "'; valid: point_mass, gaussian, two_point");
}

}  // namespace

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }

  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError(section, "unknown section");
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "top-level keys are not allowed");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }
  const auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  RunConfig cfg;

  const Section model = section("model");
  if (model.present()) {
    ModelConfig m;
    m.id = model.text("id", "");
    if (m.id.empty()) throw ConfigError("model.id", "missing; valid ids: double_well, ou_variant, variance_counterexample, linear");
    const auto& ids = model_ids();
    if (std::find(ids.begin(), ids.end(), m.id) == ids.end()) {
      std::string list;
      for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
      throw ConfigError("model.id", "unknown model_id '" + m.id + "'; valid ids: " + list);
    }
    const auto dim = model.unsigned_int("dim", 1);
    require(dim >= 1 && dim <= 64, "model.dim", "must lie in [1, 64]");
    m.dim = static_cast<int>(dim);
    m.sigma = model.real("sigma", m.sigma);
    m.sigma0 = model.real("sigma0", m.sigma0);
    m.alpha = model.real("alpha", m.alpha);
    m.A = model.real("A", m.A);
    m.a = model.real("a", m.a);
    m.f = model.text("f", m.f);
    m.f_clip = model.real("f_clip", m.f_clip);
    m.g = model.real("g", m.g);
    m.sigma_v = model.text("sigma_v", m.sigma_v);
    m.sigma_v_scale = model.real("sigma_v_scale", m.sigma_v_scale);
    m.sigma_v_floor = model.real("sigma_v_floor", m.sigma_v_floor);
    require(m.sigma >= 0.0, "model.sigma", "must be >= 0");
    require(m.sigma0 >= 0.0, "model.sigma0", "must be >= 0");
    require(m.f == "zero" || m.f == "clipped_cubic", "model.f", "valid: zero, clipped_cubic");
    require(m.sigma_v == "constant" || m.sigma_v == "sqrt_floor", "model.sigma_v", "valid: constant, sqrt_floor");
    cfg.model = m;
  }

  const Section run = section("run");
  cfg.N = run.unsigned_int("N", cfg.N);
  require(cfg.N >= 2, "run.N", "must be >= 2");
  cfg.dt = run.real("dt", cfg.dt);
  require(cfg.dt > 0.0, "run.dt", "must be > 0");
  cfg.T = run.real("T", cfg.T);
  require(cfg.T > 0.0, "run.T", "must be > 0");
  require(cfg.dt <= cfg.T, "run.dt", "must not exceed run.T");
  cfg.record_every = run.unsigned_int("record_every", cfg.record_every);
  require(cfg.record_every >= 1, "run.record_every", "must be >= 1");
  cfg.realizations = run.unsigned_int("realizations", cfg.realizations);
  require(cfg.realizations >= 1, "run.realizations", "must be >= 1");
  if (seed_override) {
    cfg.master_seed = *seed_override;
  } else {
    const auto seed = run.raw("master_seed");
    if (!seed) throw ConfigError("run.master_seed", "required (no default seed)");
    cfg.master_seed = run.unsigned_int("master_seed", 0);
  }
  cfg.output_dir = run.text("output_dir", cfg.output_dir);

  cfg.init = parse_law(section("init"));
  const Section tilde = section("init_tilde");
  if (tilde.present()) cfg.init_tilde = parse_law(tilde);

  const Section couple = section("couple");
  cfg.couple.delta = couple.real("delta", cfg.couple.delta);
  require(cfg.couple.delta >= 0.0, "couple.delta", "must be >= 0 (0 selects the default)");
  const std::string kind = couple.text("kind", "reflection");
  if (kind == "reflection") {
    cfg.couple.kind = CouplingKind::reflection;
  } else if (kind == "synchronous") {
    cfg.couple.kind = CouplingKind::synchronous;
  } else {
    throw ConfigError("couple.kind", "valid: reflection, synchronous");
  }
  cfg.couple.independent_initial = couple.boolean("independent_initial", cfg.couple.independent_initial);
  cfg.couple.fit_lo = couple.real("fit_lo", cfg.couple.fit_lo);
  cfg.couple.fit_hi = couple.real("fit_hi", cfg.couple.fit_hi);
  cfg.couple.verbose = couple.boolean("verbose", cfg.couple.verbose);

  const Section metric = section("metric");
  cfg.metric.kappa = metric.text("kappa", cfg.metric.kappa);
  require(cfg.metric.kappa == "model" || cfg.metric.kappa == "constant", "metric.kappa", "valid: model, constant");
  cfg.metric.kappa_value = metric.real("kappa_value", cfg.metric.kappa_value);
  cfg.metric.sigma0 = metric.optional_real("sigma0");
  if (cfg.metric.sigma0) require(*cfg.metric.sigma0 > 0.0, "metric.sigma0", "must be > 0");
  cfg.metric.mesh = metric.unsigned_int("mesh", cfg.metric.mesh);
  require(cfg.metric.mesh >= 512, "metric.mesh", "must be >= 512");
  cfg.metric.first_r_max = metric.real("first_r_max", cfg.metric.first_r_max);
  require(cfg.metric.first_r_max > 0.0, "metric.first_r_max", "must be > 0");

  const Section verify = section("verify");
  cfg.verify.claim = verify.text("claim", cfg.verify.claim);
  cfg.verify.tolerance = verify.real("tolerance", cfg.verify.tolerance);
  require(cfg.verify.tolerance >= 0.0, "verify.tolerance", "must be >= 0");

  const Section sweep = section("sweep");
  cfg.sweep.sigma = sweep.reals("sigma", {});
  cfg.sweep.sigma0 = sweep.reals("sigma0", {});
  cfg.sweep.alpha = sweep.reals("alpha", {});
  cfg.sweep.start = sweep.real("start", cfg.sweep.start);
  cfg.sweep.radius = sweep.real("radius", cfg.sweep.radius);
  require(cfg.sweep.radius > 0.0, "sweep.radius", "must be > 0");
  for (double s : cfg.sweep.sigma) require(s >= 0.0, "sweep.sigma", "values must be >= 0");
  for (double s : cfg.sweep.sigma0) require(s >= 0.0, "sweep.sigma0", "values must be >= 0");
  for (double a : cfg.sweep.alpha) require(a > 0.0, "sweep.alpha", "values must be > 0");
  return cfg;
}

ModelPtr build_model(const ModelConfig& m) {
  try {
    if (m.id == "double_well") {
      if (m.dim != 1) throw ConfigError("model.dim", "double_well is one-dimensional");
      if (!(m.A > 1.0)) throw ConfigError("model.A", "must be > 1");
      if (!(m.alpha > 0.0)) throw ConfigError("model.alpha", "must be > 0");
      return make_double_well(m.alpha, m.A, m.sigma, m.sigma0);
    }
    if (m.id == "ou_variant") {
      if (!(m.a > 0.0)) throw ConfigError("model.a", "must be > 0");
      VectorField f;
      if (m.f == "clipped_cubic") {
        if (!(m.f_clip > 0.0)) throw ConfigError("model.f_clip", "must be > 0");
        const double clip = m.f_clip;
        f = [clip](std::span<const double> x, std::span<double> out) {
          for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::clamp(x[k] * x[k] * x[k], -clip, clip);
        };
      }
      return make_ou_variant(m.a, f, m.sigma, m.sigma0, m.dim);
    }
    if (m.id == "variance_counterexample") {
      if (m.dim != 1) throw ConfigError("model.dim", "variance_counterexample is one-dimensional");
      if (!(m.sigma_v_scale > 0.0)) throw ConfigError("model.sigma_v_scale", "must be > 0");
      ScalarFunction s;
      const double scale = m.sigma_v_scale, floor = m.sigma_v_floor;
      if (m.sigma_v == "constant") {
        s = [scale](double) { return scale; };
      } else {
        if (!(floor > 0.0)) throw ConfigError("model.sigma_v_floor", "must be > 0");
        s = [scale, floor](double v) { return scale * std::sqrt(std::max(v, floor)); };
      }
      return make_variance_counterexample(s, m.sigma0);
    }
    if (m.id == "linear") {
      if (!(m.alpha > 0.0)) throw ConfigError("model.alpha", "must be > 0");
      return make_linear(m.g, m.alpha, m.sigma, m.sigma0, m.dim);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  throw ConfigError("model.id", "unknown model_id '" + m.id + "'");
}

}  // namespace cmv
