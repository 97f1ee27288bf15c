#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "uvt/config.hpp"
#include "uvt/errors.hpp"

using namespace uvt;

TEST_CASE("defaults validate and derive the documented values") {
  ExperimentConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.resolved_cutoff() ==
        doctest::Approx(std::numbers::pi / (2.0 * config.delta)));
  CHECK(config.resolved_min_separation() ==
        doctest::Approx(4.0 * config.kernel_sigma));
  CHECK(config.voxel_size() == doctest::Approx(0.1));
  CHECK(config.resolved_delta_t() == doctest::Approx(config.voxel_size()));
}

TEST_CASE("explicit values are not overridden") {
  ExperimentConfig config;
  config.cutoff = 42.0;
  config.min_separation = 0.31;
  config.delta_t = 0.02;
  CHECK(config.resolved_cutoff() == 42.0);
  CHECK(config.resolved_min_separation() == 0.31);
  CHECK(config.resolved_delta_t() == 0.02);
}

TEST_CASE("json round trip preserves every field") {
  ExperimentConfig config;
  config.K = 5;
  config.kernel_sigma = 0.031;
  config.min_separation = 0.27;
  config.L = 12345;
  config.M = 17;
  config.delta = 0.0123456789012345;
  config.snr = 0.25;
  config.n_k = 64;
  config.n_phi = 48;
  config.cutoff = 99.5;
  config.t_count = 128;
  config.t_max = 1.25;
  config.debias = false;
  config.m_r = 7;
  config.delta_t = 0.033;
  config.solver.max_iters = 321;
  config.solver.step_size = 0.5;
  config.solver.backtrack = 0.25;
  config.solver.tolerance = 1e-7;
  config.solver.restarts = 4;
  config.solver.seed = 11;
  config.threshold = 2.5;
  config.seed = 987654321;
  config.output_dir = "some/dir";
  config.workers = 3;

  const ExperimentConfig back = config_from_json(config_to_json(config));
  CHECK(back.K == config.K);
  CHECK(back.kernel_sigma == config.kernel_sigma);
  CHECK(back.min_separation == config.min_separation);
  CHECK(back.L == config.L);
  CHECK(back.M == config.M);
  CHECK(back.delta == config.delta);
  CHECK(back.snr == config.snr);
  CHECK(back.n_k == config.n_k);
  CHECK(back.n_phi == config.n_phi);
  CHECK(back.cutoff == config.cutoff);
  CHECK(back.t_count == config.t_count);
  CHECK(back.t_max == config.t_max);
  CHECK(back.debias == config.debias);
  CHECK(back.m_r == config.m_r);
  CHECK(back.delta_t == config.delta_t);
  CHECK(back.solver.max_iters == config.solver.max_iters);
  CHECK(back.solver.step_size == config.solver.step_size);
  CHECK(back.solver.backtrack == config.solver.backtrack);
  CHECK(back.solver.tolerance == config.solver.tolerance);
  CHECK(back.solver.restarts == config.solver.restarts);
  CHECK(back.solver.seed == config.solver.seed);
  CHECK(back.threshold == config.threshold);
  CHECK(back.seed == config.seed);
  CHECK(back.output_dir == config.output_dir);
  CHECK(back.workers == config.workers);
}

TEST_CASE("partial json keeps defaults for missing keys") {
  const ExperimentConfig config = config_from_json("{\"K\": 4}");
  CHECK(config.K == 4);
  CHECK(config.M == 50);
  CHECK(config.debias == true);
}

TEST_CASE("validation names the offending key") {
  auto expect_message = [](ExperimentConfig config, const std::string& key) {
    try {
      config.validate();
      FAIL("expected a validation error for " << key);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  ExperimentConfig config;
  config.K = 0;
  expect_message(config, "K");
  config = {};
  config.kernel_sigma = 0.0;
  expect_message(config, "kernel_sigma");
  config = {};
  config.L = -1;
  expect_message(config, "L");
  config = {};
  config.M = -1;
  expect_message(config, "M");
  config = {};
  config.delta = 0.0;
  expect_message(config, "delta");
  config = {};
  config.n_k = 1;
  expect_message(config, "n_k");
  config = {};
  config.n_phi = 0;
  expect_message(config, "n_phi");
  config = {};
  config.t_count = 1;
  expect_message(config, "t_count");
  config = {};
  config.t_max = 0.0;
  expect_message(config, "t_max");
  config = {};
  config.m_r = 0;
  expect_message(config, "m_r");
  config = {};
  config.solver.max_iters = 0;
  expect_message(config, "max_iters");
  config = {};
  config.solver.backtrack = 1.0;
  expect_message(config, "backtrack");
  config = {};
  config.threshold = 0.0;
  expect_message(config, "threshold");
  config = {};
  config.workers = 0;
  expect_message(config, "workers");
}

TEST_CASE("cutoff past the pixel Nyquist is rejected") {
  ExperimentConfig config;
  config.cutoff = std::numbers::pi / config.delta * 1.01;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("config file io round trips and reports errors") {
  ExperimentConfig config;
  config.K = 6;
  config.seed = 77;
  const std::string path = "test_config_roundtrip.json";
  save_config(path, config);
  const ExperimentConfig back = load_config(path);
  CHECK(back.K == 6);
  CHECK(back.seed == 77);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("malformed json is a config error") {
  const std::string path = "test_config_bad.json";
  std::FILE* f = std::fopen(path.c_str(), "w");
  std::fputs("{not json", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  std::remove(path.c_str());
}
