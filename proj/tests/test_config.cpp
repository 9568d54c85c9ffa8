#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cmv/config.hpp"
#include "cmv/runner.hpp"

using namespace cmv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmv_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config gets the documented defaults") {
  const auto cfg = parse_config("[model]\nid = double_well\n[run]\nmaster_seed = 42\n");
  REQUIRE(cfg.model);
  CHECK(cfg.model->id == "double_well");
  CHECK(cfg.model->alpha == 8.0);
  CHECK(cfg.model->A == 1.5);
  CHECK(cfg.model->sigma == 0.1);
  CHECK(cfg.model->sigma0 == 0.5);
  CHECK(cfg.N == 1024u);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.T == 1.0);
  CHECK(cfg.record_every == 1u);
  CHECK(cfg.realizations == 1u);
  CHECK(cfg.master_seed == 42u);
  CHECK(cfg.output_dir == ".");
  CHECK(cfg.init.kind == InitialLaw::Kind::point_mass);
  CHECK_FALSE(cfg.init_tilde);
  CHECK(cfg.couple.kind == CouplingKind::reflection);
  CHECK(cfg.couple.delta == 0.0);
  CHECK(cfg.verify.claim == "variance-bound");
}

TEST_CASE("full config round trip") {
  const auto cfg = parse_config(
      "[model]\nid = ou_variant\na = 2\nsigma = 0.3\nsigma0 = 0.4\nf = clipped_cubic\n"
      "[run]\nN = 64\ndt = 0.01\nT = 3\nrecord_every = 5\nrealizations = 7\nmaster_seed = 18446744073709551615\n"
      "[init]\nkind = gaussian\nmean = 0.5\nvariance = 0.25\n"
      "[init_tilde]\nkind = two_point\na = -2\nb = 2\nweight = 0.25\n"
      "[couple]\ndelta = 0.02\nkind = synchronous\nindependent_initial = false\nverbose = true\n"
      "[sweep]\nsigma0 = 0, 0.35, 0.7\n");
  CHECK(cfg.model->a == 2.0);
  CHECK(cfg.model->f == "clipped_cubic");
  CHECK(cfg.N == 64u);
  CHECK(cfg.master_seed == 18446744073709551615ull);
  CHECK(cfg.init.kind == InitialLaw::Kind::gaussian);
  CHECK(cfg.init.variance == 0.25);
  REQUIRE(cfg.init_tilde);
  CHECK(cfg.init_tilde->weight_first == 0.25);
  CHECK(cfg.couple.kind == CouplingKind::synchronous);
  CHECK_FALSE(cfg.couple.independent_initial);
  CHECK(cfg.couple.verbose);
  CHECK(cfg.sweep.sigma0 == std::vector<double>{0.0, 0.35, 0.7});
}

TEST_CASE("errors name the offending key") {
  CHECK(error_key("[model]\nid = double_well\n[run]\ndt = 0\nmaster_seed = 1\n") == "run.dt");
  CHECK(error_key("[run]\nN = 1\nmaster_seed = 1\n") == "run.N");
  CHECK(error_key("[run]\nmaster_seed = 1\nbogus = 3\n") == "run.bogus");
  CHECK(error_key("[nowhere]\nx = 1\n[run]\nmaster_seed = 1\n") == "nowhere");
  CHECK(error_key("[run]\nT = 1\n") == "run.master_seed");
  CHECK(error_key("[run]\nmaster_seed = -4\n") == "run.master_seed");
  CHECK(error_key("[run]\nmaster_seed = 1\ndt = abc\n") == "run.dt");
  CHECK(error_key("[run]\nmaster_seed = 1\n[init]\nkind = gaussian\nvariance = 0\n") == "init.variance");
  CHECK(error_key("[run]\nmaster_seed = 1\n[couple]\nkind = sideways\n") == "couple.kind");
}

TEST_CASE("unknown model id lists the valid ids") {
  try {
    parse_config("[model]\nid = lorenz\n[run]\nmaster_seed = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "model.id");
    const std::string what = e.what();
    for (const auto& id : model_ids()) CHECK(what.find(id) != std::string::npos);
  }
}

TEST_CASE("seed override") {
  const auto cfg = parse_config("[run]\nT = 1\n", 99);
  CHECK(cfg.master_seed == 99u);
  CHECK(parse_config("[run]\nmaster_seed = 5\n", 6).master_seed == 6u);
}

TEST_CASE("build_model for every id") {
  ModelConfig m;
  for (const auto& id : model_ids()) {
    m.id = id;
    const auto model = build_model(m);
    REQUIRE(model);
    CHECK(model->dim == 1);
  }
  m.id = "double_well";
  CHECK(build_model(m)->constants.c_alpha == doctest::Approx(2.25));
  m.id = "variance_counterexample";
  m.sigma_v = "sqrt_floor";
  // Particles carry sigma(v)/sqrt(2) so that v' = -2v + sigma(v)^2/2.
  CHECK(build_model(m)->sigma_of_v(0.0) == doctest::Approx(0.2 / std::sqrt(2.0)));
  CHECK(build_model(m)->sigma_of_v(1.0) == doctest::Approx(2.0 / std::sqrt(2.0)));
  m.id = "double_well";
  m.A = -1.0;
  CHECK_THROWS_AS(build_model(m), ConfigError);
}

TEST_CASE("metric with constant kappa emits R0 = 0") {
  const auto cfg = parse_config("[run]\nmaster_seed = 1\n[metric]\nkappa = constant\nkappa_value = 2\nsigma0 = 1\n");
  RunnerOptions o;
  o.out_dir = scratch("metric").string();
  CHECK(run_subcommand("metric", cfg, o) == kExitOk);
  const std::string summary = slurp(fs::path(o.out_dir) / "profile_summary.csv");
  CHECK(summary.rfind("R0,R1,kappa1,c_rate\n0,", 0) == 0);
  CHECK(fs::exists(fs::path(o.out_dir) / "profile.csv"));
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
  const auto cfg = parse_config(
      "[model]\nid = double_well\n[run]\nN = 128\ndt = 0.01\nT = 1\nrecord_every = 10\nrealizations = 5\n"
      "master_seed = 3\n[init]\nkind = gaussian\nmean = 0\nvariance = 1\n[init_tilde]\nkind = point_mass\nat = 1\n");
  for (const std::string sub : {"simulate", "couple"}) {
    RunnerOptions a, b;
    a.out_dir = scratch(sub + "_a").string();
    b.out_dir = scratch(sub + "_b").string();
    a.workers = 1;
    b.workers = 3;
    REQUIRE(run_subcommand(sub, cfg, a) == kExitOk);
    REQUIRE(run_subcommand(sub, cfg, b) == kExitOk);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a.out_dir)) {
      const auto name = entry.path().filename();
      CHECK(slurp(entry.path()) == slurp(fs::path(b.out_dir) / name));
      ++files;
    }
    CHECK(files >= 1u);
  }
}

TEST_CASE("verify variance-bound exits 0 on a short double-well run") {
  const auto cfg = parse_config(
      "[model]\nid = double_well\n[run]\nN = 256\ndt = 0.005\nT = 2\nrecord_every = 20\nrealizations = 2\n"
      "master_seed = 8\n[init]\nkind = gaussian\nmean = 1\nvariance = 0.5\n");
  RunnerOptions o;
  o.out_dir = scratch("verify").string();
  o.workers = 2;
  CHECK(run_subcommand("verify", cfg, o, "variance-bound") == kExitOk);
  CHECK_THROWS_AS(run_subcommand("verify", cfg, o, "nonsense"), ConfigError);
  CHECK_THROWS_AS(run_subcommand("fly", cfg, o), ConfigError);
}

TEST_CASE("unstable dt is a configuration error naming run.dt") {
  const auto cfg = parse_config("[model]\nid = double_well\n[run]\ndt = 0.2\nmaster_seed = 1\n");
  RunnerOptions o;
  o.out_dir = scratch("unstable").string();
  try {
    run_subcommand("simulate", cfg, o);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "run.dt");
  }
}

}
