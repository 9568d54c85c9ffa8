#include "cmv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <omp.h>

#include "cmv/analytics.hpp"
#include "cmv/csv.hpp"

namespace cmv {

namespace {

namespace fs = std::filesystem;
using csv::format_double;

struct Context {
  const RunConfig& cfg;
  fs::path out;
  std::ostream* log;

  std::ofstream open(const std::string& name) const {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    return os;
  }
  template <class... Args>
  void say(const Args&... args) const {
    if (log) ((*log << args), ...);
  }
};

const ModelConfig& require_model(const RunConfig& cfg) {
  if (!cfg.model) throw ConfigError("model", "section required for this subcommand");
  return *cfg.model;
}

void require_dims(const InitialLaw& law, const ModelSpec& model, const std::string& section) {
  if (law.dim() != model.dim) {
    throw ConfigError(section, "law has dimension " + std::to_string(law.dim()) + " but the model has " +
                                   std::to_string(model.dim));
  }
}

void check_stability(const ModelSpec& model, double dt) {
  if (dt * model.constants.L_G > 0.5) {
    throw ConfigError("run.dt", "dt * L_G = " + format_double(dt * model.constants.L_G) +
                                    " exceeds 0.5; use dt <= " + format_double(max_stable_dt(model)));
  }
}

SimulateOptions simulate_options(const RunConfig& cfg) {
  SimulateOptions o;
  o.dt = cfg.dt;
  o.T = cfg.T;
  o.record_every = cfg.record_every;
  o.exec = Exec::parallel;
  return o;
}

std::string realization_name(const std::string& stem, std::size_t r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_r%04zu.csv", stem.c_str(), r);
  return buf;
}

int simulate_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelPtr model = build_model(require_model(cfg));
  require_dims(cfg.init, *model, "init");
  check_stability(*model, cfg.dt);
  const auto runs = simulate_realizations(model, cfg.init, cfg.N, simulate_options(cfg), cfg.realizations,
                                          cfg.master_seed);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto os = ctx.open(realization_name("simulate", r));
    runs[r].write_csv(os);
  }
  for (const auto& w : model->warnings) ctx.say("warning: ", w, '\n');
  ctx.say("simulate: ", runs.size(), " realization(s), ", runs.front().size(), " recorded times\n");
  return kExitOk;
}

int couple_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelPtr model = build_model(require_model(cfg));
  const InitialLaw& law_x = cfg.init;
  const InitialLaw& law_xt = cfg.init_tilde ? *cfg.init_tilde : cfg.init;
  require_dims(law_x, *model, "init");
  require_dims(law_xt, *model, "init_tilde");
  check_stability(*model, cfg.dt);

  CoupledRunOptions o;
  o.N = cfg.N;
  o.dt = cfg.dt;
  o.T = cfg.T;
  o.record_every = cfg.record_every;
  o.realizations = cfg.realizations;
  o.delta = cfg.couple.delta;
  o.kind = cfg.couple.kind;
  o.independent_initial = cfg.couple.independent_initial;
  o.exec = Exec::parallel;
  const CoupledRun run = run_coupled(model, law_x, law_xt, o, cfg.master_seed);
  {
    auto os = ctx.open("couple.csv");
    run.write_csv(os);
  }
  if (cfg.couple.verbose) {
    auto os = ctx.open("couple_realizations.csv");
    run.write_realizations_csv(os);
  }
  const double hi = cfg.couple.fit_hi < 0.0 ? cfg.T : cfg.couple.fit_hi;
  try {
    const DecayFit fit = fit_decay(run.times, run.theta_mean, cfg.couple.fit_lo, hi);
    auto os = ctx.open("couple_fit.csv");
    fit.write_csv(os);
    ctx.say("couple: fitted decay rate of E0[Theta] = ", format_double(fit.rate), " on [",
            format_double(fit.t_lo), ", ", format_double(fit.t_hi), "]\n");
  } catch (const std::invalid_argument& e) {
    ctx.say("couple: no decay fit (", e.what(), ")\n");
  }
  return kExitOk;
}

int metric_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  ScalarFunction kappa;
  double sigma0 = 0.0;
  if (cfg.metric.kappa == "constant") {
    const double value = cfg.metric.kappa_value;
    kappa = [value](double) { return value; };
    sigma0 = cfg.metric.sigma0.value_or(cfg.model ? cfg.model->sigma0 : 1.0);
  } else {
    const ModelPtr model = build_model(require_model(cfg));
    if (!model->kappa) throw ConfigError("model.sigma0", "kappa needs sigma0 > 0");
    if (cfg.metric.sigma0) {
      // kappa scales as 1/sigma0^2.
      const double s_model = model->sigma0, s_new = *cfg.metric.sigma0;
      const ScalarFunction base = model->kappa;
      kappa = [base, s_model, s_new](double r) { return base(r) * (s_model * s_model) / (s_new * s_new); };
      sigma0 = s_new;
    } else {
      kappa = model->kappa;
      sigma0 = model->sigma0;
    }
  }
  ProfileOptions po;
  po.mesh = cfg.metric.mesh;
  po.first_r_max = cfg.metric.first_r_max;
  const EberleProfile profile = build_profile(kappa, sigma0, po);
  {
    auto os = ctx.open("profile.csv");
    profile.write_csv(os);
  }
  {
    auto os = ctx.open("profile_summary.csv");
    profile.write_summary(os);
  }
  ctx.say("metric: R0 = ", format_double(profile.R0), ", R1 = ", format_double(profile.R1),
          ", kappa1 = ", format_double(profile.kappa1), ", c_rate = ", format_double(profile.c_rate), '\n');
  return kExitOk;
}

struct Band {
  std::vector<double> mean, se;
};

Band band_of(const std::vector<StatsTrajectory>& runs) {
  const std::size_t n = runs.front().size(), M = runs.size();
  Band b;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (const auto& run : runs) s += run.v[k];
    const double m = s / static_cast<double>(M);
    double ss = 0.0;
    for (const auto& run : runs) ss += (run.v[k] - m) * (run.v[k] - m);
    b.mean.push_back(m);
    b.se.push_back(M > 1 ? std::sqrt(ss / static_cast<double>(M - 1) / static_cast<double>(M)) : 0.0);
  }
  return b;
}

int verify_variance_bound_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelPtr model = build_model(require_model(cfg));
  require_dims(cfg.init, *model, "init");
  check_stability(*model, cfg.dt);
  if (!(model->constants.c_alpha > 0.0)) {
    throw ConfigError("model.alpha", "variance bound needs c_alpha > 0, got " +
                                         format_double(model->constants.c_alpha));
  }
  const auto runs = simulate_realizations(model, cfg.init, cfg.N, simulate_options(cfg), cfg.realizations,
                                          cfg.master_seed);
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  auto os = ctx.open("verify_variance_bound.csv");
  os << "realization,t,observed,bound,margin\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const BoundReport rep = verify_variance_bound(runs[r], model->constants, model->dim,
                                                  model->sigma, cfg.N, cfg.verify.tolerance);
    violations += rep.violations;
    worst = std::min(worst, rep.worst_margin());
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      os << r << ',' << format_double(rep.times[k]) << ',' << format_double(rep.observed[k]) << ','
         << format_double(rep.bound[k]) << ',' << format_double(rep.margin[k]) << '\n';
    }
  }
  ctx.say("verify variance-bound: ", runs.size(), " realization(s), violations = ", violations,
          ", worst margin = ", format_double(worst), " -> ", violations == 0 ? "PASS" : "FAIL", '\n');
  return violations == 0 ? kExitOk : kExitViolation;
}

int verify_band(const Context& ctx, const std::string& file, const std::vector<double>& times, const Band& band,
                const std::vector<double>& reference, const std::vector<double>& allowed, const char* label) {
  auto os = ctx.open(file);
  os << "t,observed,se,reference,allowed\n";
  std::size_t violations = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << format_double(times[k]) << ',' << format_double(band.mean[k]) << ',' << format_double(band.se[k]) << ','
       << format_double(reference[k]) << ',' << format_double(allowed[k]) << '\n';
    if (std::abs(band.mean[k] - reference[k]) > allowed[k]) ++violations;
  }
  ctx.say("verify ", label, ": ", times.size(), " times, violations = ", violations, " -> ",
          violations == 0 ? "PASS" : "FAIL", '\n');
  return violations == 0 ? kExitOk : kExitViolation;
}

int verify_ou_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelConfig& mc = require_model(cfg);
  if (mc.id != "ou_variant") throw ConfigError("model.id", "claim ou-variance needs ou_variant");
  if (cfg.realizations < 2) throw ConfigError("run.realizations", "claim ou-variance needs >= 2");
  const ModelPtr model = build_model(mc);
  require_dims(cfg.init, *model, "init");
  check_stability(*model, cfg.dt);
  const auto runs = simulate_realizations(model, cfg.init, cfg.N, simulate_options(cfg), cfg.realizations,
                                          cfg.master_seed);
  const Band band = band_of(runs);
  const auto& times = runs.front().times;
  std::vector<double> ref, allowed;
  for (std::size_t k = 0; k < times.size(); ++k) {
    // v sums d coordinates.
    const double v = model->dim * ou_variant_reference(mc.a, mc.sigma, mc.sigma0, times[k], 0.0,
                                                       band.mean.front() / model->dim)
                                      .conditional_variance;
    ref.push_back(v);
    allowed.push_back(3.0 * band.se[k] + cfg.verify.tolerance);
  }
  return verify_band(ctx, "verify_ou_variance.csv", times, band, ref, allowed, "ou-variance");
}

int verify_counterexample_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelConfig& mc = require_model(cfg);
  if (mc.id != "variance_counterexample") {
    throw ConfigError("model.id", "claim counterexample needs variance_counterexample");
  }
  if (cfg.realizations < 2) throw ConfigError("run.realizations", "claim counterexample needs >= 2");
  const ModelPtr model = build_model(mc);
  require_dims(cfg.init, *model, "init");
  check_stability(*model, cfg.dt);
  const auto runs = simulate_realizations(model, cfg.init, cfg.N, simulate_options(cfg), cfg.realizations,
                                          cfg.master_seed);
  const Band band = band_of(runs);
  const auto& times = runs.front().times;
  // The model stores the particle intensity sigma(v)/sqrt(2).
  const ScalarFunction particle = model->sigma_of_v;
  const ScalarFunction sigma_of_v = [particle](double v) { return std::sqrt(2.0) * particle(v); };
  const CounterexampleReference reference =
      counterexample_reference(sigma_of_v, model->sigma0, band.mean.front(), cfg.T);
  std::vector<double> ref, allowed;
  for (std::size_t k = 0; k < times.size(); ++k) {
    ref.push_back(reference.v_at(times[k]));
    allowed.push_back(std::max(3.0 * band.se[k], 5.0 * cfg.dt) + cfg.verify.tolerance);
  }
  return verify_band(ctx, "verify_counterexample.csv", times, band, ref, allowed, "counterexample");
}

int verify_cmd(const Context& ctx, const std::string& claim) {
  if (claim == "variance-bound") return verify_variance_bound_cmd(ctx);
  if (claim == "ou-variance") return verify_ou_cmd(ctx);
  if (claim == "counterexample") return verify_counterexample_cmd(ctx);
  throw ConfigError("verify.claim", "unknown claim '" + claim + "'; valid: variance-bound, ou-variance, counterexample");
}

int sweep_cmd(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ModelConfig& mc = require_model(cfg);
  if (mc.id != "double_well") throw ConfigError("model.id", "sweep runs the double_well model");
  const auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const auto sigmas = axis(cfg.sweep.sigma, mc.sigma);
  const auto sigma0s = axis(cfg.sweep.sigma0, mc.sigma0);
  const auto alphas = axis(cfg.sweep.alpha, mc.alpha);
  if (cfg.realizations < 2) throw ConfigError("run.realizations", "sweep needs >= 2");

  auto os = ctx.open("sweep.csv");
  os << "sigma,sigma0,alpha,merge_std,occ_plus,occ_minus\n";
  for (double alpha : alphas) {
    for (double sigma : sigmas) {
      for (double sigma0 : sigma0s) {
        ModelConfig cell = mc;
        cell.alpha = alpha;
        cell.sigma = sigma;
        cell.sigma0 = sigma0;
        const ModelPtr model = build_model(cell);
        check_stability(*model, cfg.dt);
        MultiplicityOptions mo;
        mo.N = cfg.N;
        mo.realizations = cfg.realizations;
        mo.dt = cfg.dt;
        mo.T = cfg.T;
        mo.record_every = cfg.record_every;
        mo.start = cfg.sweep.start;
        mo.exec = Exec::parallel;
        const MultiplicityResult res = run_multiplicity(model, mo, cfg.master_seed);
        const Occupancy occ = basin_occupancy(res.runs, {cfg.sweep.start, -cfg.sweep.start}, cfg.sweep.radius);
        const std::size_t last = occ.times.size() - 1;
        os << format_double(sigma) << ',' << format_double(sigma0) << ',' << format_double(alpha) << ','
           << format_double(res.terminal_std) << ',' << format_double(occ.fraction(last, 0)) << ','
           << format_double(occ.fraction(last, 1)) << '\n';
        ctx.say("sweep: sigma = ", format_double(sigma), ", sigma0 = ", format_double(sigma0),
                ", alpha = ", format_double(alpha), ", merge std = ", format_double(res.terminal_std), '\n');
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run_subcommand(const std::string& subcommand, const RunConfig& config, const RunnerOptions& options,
                   const std::string& claim) {
  if (options.workers < 1) throw ConfigError("--workers", "must be >= 1");
  omp_set_num_threads(options.workers);
  const fs::path out = options.out_dir.empty() ? fs::path(config.output_dir) : fs::path(options.out_dir);
  fs::create_directories(out);
  const Context ctx{config, out, options.log};
  if (subcommand == "simulate") return simulate_cmd(ctx);
  if (subcommand == "couple") return couple_cmd(ctx);
  if (subcommand == "metric") return metric_cmd(ctx);
  if (subcommand == "verify") return verify_cmd(ctx, claim.empty() ? config.verify.claim : claim);
  if (subcommand == "sweep") return sweep_cmd(ctx);
  throw ConfigError("subcommand", "unknown '" + subcommand + "'; valid: simulate, couple, metric, verify, sweep");
}

}  // namespace cmv
