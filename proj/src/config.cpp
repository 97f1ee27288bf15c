#include "uvt/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include "uvt/errors.hpp"

namespace uvt {

double ExperimentConfig::resolved_cutoff() const {
  return cutoff > 0 ? cutoff : std::numbers::pi / (2.0 * delta);
}

double ExperimentConfig::resolved_min_separation() const {
  return min_separation > 0 ? min_separation : 4.0 * kernel_sigma;
}

double ExperimentConfig::resolved_delta_t() const {
  return delta_t > 0 ? delta_t : voxel_size();
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (K < 1 || K > 64) fail("K out of range");
  if (kernel_sigma <= 0) fail("kernel_sigma must be > 0");
  if (min_separation < 0) fail("min_separation must be >= 0");
  if (L < 0) fail("L must be >= 0");
  if (M < 1) fail("M must be >= 1");
  if (delta <= 0) fail("delta must be > 0");
  if (n_k < 2) fail("n_k must be >= 2");
  if (n_phi < 4) fail("n_phi must be >= 4");
  if (cutoff < 0) fail("cutoff must be >= 0");
  if (resolved_cutoff() > std::numbers::pi / delta * (1.0 + 1e-12))
    fail("cutoff exceeds the Nyquist limit pi/delta");
  if (t_count < 2) fail("t_count must be >= 2");
  if (t_max <= 0) fail("t_max must be > 0");
  if (m_r < 1) fail("m_r must be >= 1");
  if (delta_t < 0) fail("delta_t must be >= 0");
  if (solver.max_iters < 1) fail("solver.max_iters must be >= 1");
  if (solver.step_size <= 0) fail("solver.step_size must be > 0");
  if (solver.backtrack <= 0 || solver.backtrack >= 1)
    fail("solver.backtrack must be in (0, 1)");
  if (solver.tolerance < 0) fail("solver.tolerance must be >= 0");
  if (solver.restarts < 1) fail("solver.restarts must be >= 1");
  if (threshold <= 0) fail("threshold must be > 0");
  if (workers < 1) fail("workers must be >= 1");
  if (output_dir.empty()) fail("output_dir must not be empty");
}

std::string config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["K"] = c.K;
  j["kernel_sigma"] = c.kernel_sigma;
  j["min_separation"] = c.min_separation;
  j["L"] = c.L;
  j["M"] = c.M;
  j["delta"] = c.delta;
  j["snr"] = c.snr;
  j["n_k"] = c.n_k;
  j["n_phi"] = c.n_phi;
  j["cutoff"] = c.cutoff;
  j["t_count"] = c.t_count;
  j["t_max"] = c.t_max;
  j["debias"] = c.debias;
  j["m_r"] = c.m_r;
  j["delta_t"] = c.delta_t;
  j["solver_max_iters"] = c.solver.max_iters;
  j["solver_step_size"] = c.solver.step_size;
  j["solver_backtrack"] = c.solver.backtrack;
  j["solver_tolerance"] = c.solver.tolerance;
  j["solver_restarts"] = c.solver.restarts;
  j["solver_seed"] = c.solver.seed;
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: bad JSON: ") + e.what());
  }
  ExperimentConfig c;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get("K", c.K);
  get("kernel_sigma", c.kernel_sigma);
  get("min_separation", c.min_separation);
  get("L", c.L);
  get("M", c.M);
  get("delta", c.delta);
  get("snr", c.snr);
  get("n_k", c.n_k);
  get("n_phi", c.n_phi);
  get("cutoff", c.cutoff);
  get("t_count", c.t_count);
  get("t_max", c.t_max);
  get("debias", c.debias);
  get("m_r", c.m_r);
  get("delta_t", c.delta_t);
  get("solver_max_iters", c.solver.max_iters);
  get("solver_step_size", c.solver.step_size);
  get("solver_backtrack", c.solver.backtrack);
  get("solver_tolerance", c.solver.tolerance);
  get("solver_restarts", c.solver.restarts);
  get("solver_seed", c.solver.seed);
  get("threshold", c.threshold);
  get("seed", c.seed);
  get("output_dir", c.output_dir);
  get("workers", c.workers);
  return c;
}

void save_config(const std::string& path, const ExperimentConfig& config) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << config_to_json(config);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace uvt
