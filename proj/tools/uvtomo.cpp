// uvtomo: simulate projection stacks, estimate rotation-invariant features,
// reconstruct point-source models, and evaluate against ground truth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uvt/config.hpp"
#include "uvt/errors.hpp"
#include "uvt/eval.hpp"
#include "uvt/features.hpp"
#include "uvt/forward.hpp"
#include "uvt/model.hpp"
#include "uvt/polar_ft.hpp"
#include "uvt/recon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kModelStream = 1;

struct Paths {
  fs::path dir;
  fs::path stack() const { return dir / "stack.uvts"; }
  fs::path model() const { return dir / "model.json"; }
  fs::path config() const { return dir / "config.json"; }
  fs::path b1() const { return dir / "b1.csv"; }
  fs::path b2() const { return dir / "b2.csv"; }
  fs::path mu() const { return dir / "mu.csv"; }
  fs::path c() const { return dir / "c.csv"; }
  fs::path features_meta() const { return dir / "features_meta.json"; }
  fs::path density() const { return dir / "density.uvtv"; }
  fs::path trace() const { return dir / "trace.csv"; }
  fs::path centers() const { return dir / "centers.json"; }
  fs::path recon_report() const { return dir / "recon_report.json"; }
  fs::path evaluation() const { return dir / "evaluation.json"; }
};

Paths make_output_dir(const uvt::ExperimentConfig& cfg) {
  Paths p{fs::path(cfg.output_dir)};
  std::error_code ec;
  fs::create_directories(p.dir, ec);
  if (ec) throw uvt::IoError("cannot create output dir: " + p.dir.string());
  return p;
}

void add_config_flags(CLI::App* cmd, uvt::ExperimentConfig& cfg,
                      std::string& config_path) {
  cmd->add_option("--config", config_path, "load config JSON, flags override");
  cmd->add_option("-K,--sources", cfg.K, "number of point sources");
  cmd->add_option("--kernel-sigma", cfg.kernel_sigma, "kernel width (box units)");
  cmd->add_option("--min-separation", cfg.min_separation,
                  "minimum center separation, 0 = 4*sigma");
  cmd->add_option("-L,--images", cfg.L, "number of projection images");
  cmd->add_option("-M,--half-width", cfg.M, "image half width in pixels");
  cmd->add_option("--delta", cfg.delta, "pixel width (box units)");
  cmd->add_option("--snr", cfg.snr, "target SNR, <= 0 = noiseless");
  cmd->add_option("--n-k", cfg.n_k, "radial quadrature nodes");
  cmd->add_option("--n-phi", cfg.n_phi, "angular samples");
  cmd->add_option("--cutoff", cfg.cutoff, "radial cutoff, 0 = pi/(2 delta)");
  cmd->add_option("--t-count", cfg.t_count, "feature grid size");
  cmd->add_option("--t-max", cfg.t_max, "feature grid extent");
  cmd->add_flag("--debias,!--no-debias", cfg.debias, "subtract B2 noise bias");
  cmd->add_option("--m-r", cfg.m_r, "voxel grid half width");
  cmd->add_option("--delta-t", cfg.delta_t, "distance bin width, 0 = voxel");
  cmd->add_option("--max-iters", cfg.solver.max_iters, "PGD iterations");
  cmd->add_option("--step-size", cfg.solver.step_size, "initial step size");
  cmd->add_option("--backtrack", cfg.solver.backtrack, "backtracking factor");
  cmd->add_option("--tolerance", cfg.solver.tolerance,
                  "relative objective change stop");
  cmd->add_option("--restarts", cfg.solver.restarts, "solver restarts");
  cmd->add_option("--threshold", cfg.threshold, "RMSD success threshold");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("-o,--out", cfg.output_dir, "output directory");
  cmd->add_option("--workers", cfg.workers, "worker threads");
}

uvt::ExperimentConfig finalize_config(CLI::App* cmd,
                                      uvt::ExperimentConfig& flags,
                                      const std::string& config_path) {
  uvt::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = uvt::load_config(config_path);
  // re-apply explicit flags on top of the loaded file
  uvt::ExperimentConfig merged = cfg;
  auto took = [&](const std::string& name) {
    return cmd->count(name) > 0;
  };
  if (took("--sources")) merged.K = flags.K;
  if (took("--kernel-sigma")) merged.kernel_sigma = flags.kernel_sigma;
  if (took("--min-separation")) merged.min_separation = flags.min_separation;
  if (took("--images")) merged.L = flags.L;
  if (took("--half-width")) merged.M = flags.M;
  if (took("--delta")) merged.delta = flags.delta;
  if (took("--snr")) merged.snr = flags.snr;
  if (took("--n-k")) merged.n_k = flags.n_k;
  if (took("--n-phi")) merged.n_phi = flags.n_phi;
  if (took("--cutoff")) merged.cutoff = flags.cutoff;
  if (took("--t-count")) merged.t_count = flags.t_count;
  if (took("--t-max")) merged.t_max = flags.t_max;
  if (took("--debias")) merged.debias = flags.debias;
  if (took("--m-r")) merged.m_r = flags.m_r;
  if (took("--delta-t")) merged.delta_t = flags.delta_t;
  if (took("--max-iters")) merged.solver.max_iters = flags.solver.max_iters;
  if (took("--step-size")) merged.solver.step_size = flags.solver.step_size;
  if (took("--backtrack")) merged.solver.backtrack = flags.solver.backtrack;
  if (took("--tolerance")) merged.solver.tolerance = flags.solver.tolerance;
  if (took("--restarts")) merged.solver.restarts = flags.solver.restarts;
  if (took("--threshold")) merged.threshold = flags.threshold;
  if (took("--seed")) merged.seed = flags.seed;
  if (took("--out")) merged.output_dir = flags.output_dir;
  if (took("--workers")) merged.workers = flags.workers;
  merged.validate();
  return merged;
}

double effective_cutoff(const uvt::ExperimentConfig& cfg, double delta) {
  return cfg.cutoff > 0 ? cfg.cutoff : std::numbers::pi / (2.0 * delta);
}

struct FeatureSet {
  uvt::BCurve b1, b2;
  uvt::FeatureCurve mu, c;
};

FeatureSet compute_features(const uvt::ProjectionStack& stack,
                            const uvt::ExperimentConfig& cfg) {
  const uvt::PolarGrid grid = uvt::make_polar_grid(
      cfg.n_k, cfg.n_phi, effective_cutoff(cfg, stack.delta));
  FeatureSet out;
  std::tie(out.b1, out.b2) =
      uvt::accumulate_b1_b2(stack, grid, cfg.debias, cfg.workers);
  const std::vector<double> t = uvt::uniform_t_grid(cfg.t_count, cfg.t_max);
  out.mu = uvt::sine_transform(out.b1, t);
  out.c = uvt::sine_transform(out.b2, t);
  return out;
}

// relative l2 error after matching the estimate's integral to the oracle's
double calibrated_error(const uvt::FeatureCurve& est,
                        const uvt::FeatureCurve& oracle) {
  const double mass = uvt::trapezoid_mass(est);
  if (mass == 0.0) return std::numeric_limits<double>::infinity();
  return uvt::feature_error(
      uvt::normalize_mass(est, uvt::trapezoid_mass(oracle)), oracle);
}

void write_centers_json(const fs::path& path, const std::vector<uvt::Vec3>& cs,
                        double voxel_size) {
  json j;
  j["voxel_size"] = voxel_size;
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({c.x(), c.y(), c.z()});
  j["centers"] = arr;
  std::ofstream f(path);
  if (!f) throw uvt::IoError("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

std::pair<std::vector<uvt::Vec3>, double> read_centers_json(
    const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw uvt::IoError("cannot open: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw uvt::IoError("bad centers json " + path.string() + ": " + e.what());
  }
  std::vector<uvt::Vec3> cs;
  for (const auto& row : j.at("centers"))
    cs.emplace_back(row.at(0).get<double>(), row.at(1).get<double>(),
                    row.at(2).get<double>());
  return {cs, j.value("voxel_size", 0.0)};
}

int cmd_simulate(const uvt::ExperimentConfig& cfg) {
  const Paths out = make_output_dir(cfg);
  uvt::RngStream model_rng(cfg.seed, kModelStream);
  const uvt::PointSourceModel model = uvt::random_model(
      cfg.K, cfg.resolved_min_separation(), cfg.kernel_sigma, model_rng);
  const double snr = cfg.snr > 0 ? cfg.snr : uvt::kSnrInfinite;
  const uvt::ProjectionStack stack = uvt::simulate_stack(
      model, cfg.L, cfg.M, cfg.delta, snr, cfg.seed, cfg.workers);
  uvt::write_stack(out.stack().string(), stack);
  uvt::save_model(out.model().string(), model);
  uvt::save_config(out.config().string(), cfg);
  if (stack.noise_sigma > 0 && stack.L() > 0) {
    const double s2 = stack.noise_sigma * stack.noise_sigma;
    const double empirical = (uvt::mean_pixel_power(stack) - s2) / s2;
    std::printf("simulate: L=%ld sigma=%.6g empirical snr=%.4g\n", stack.L(),
                stack.noise_sigma, empirical);
  } else {
    std::printf("simulate: L=%ld noiseless (snr=inf)\n", stack.L());
  }
  std::printf("simulate: wrote %s\n", out.stack().string().c_str());
  return 0;
}

int cmd_features(const uvt::ExperimentConfig& cfg, std::string stack_path,
                 const std::string& analytic_model) {
  const Paths out = make_output_dir(cfg);
  if (stack_path.empty()) stack_path = out.stack().string();
  const uvt::ProjectionStack stack = uvt::read_stack(stack_path);
  const FeatureSet fset = compute_features(stack, cfg);

  uvt::write_bcurve_csv(out.b1().string(), fset.b1);
  uvt::write_bcurve_csv(out.b2().string(), fset.b2);
  uvt::write_feature_csv(out.mu().string(), fset.mu);
  uvt::write_feature_csv(out.c().string(), fset.c);
  json meta;
  meta["stack"] = stack_path;
  meta["L"] = stack.L();
  meta["M"] = stack.half_width;
  meta["delta"] = stack.delta;
  meta["noise_sigma"] = stack.noise_sigma;
  meta["n_k"] = cfg.n_k;
  meta["n_phi"] = cfg.n_phi;
  meta["cutoff"] = effective_cutoff(cfg, stack.delta);
  meta["t_count"] = cfg.t_count;
  meta["t_max"] = cfg.t_max;
  meta["debias"] = cfg.debias;
  {
    std::ofstream f(out.features_meta());
    if (!f)
      throw uvt::IoError("cannot open for writing: " +
                         out.features_meta().string());
    f << meta.dump(2) << "\n";
  }
  uvt::save_config(out.config().string(), cfg);
  std::printf("features: wrote %s, %s\n", out.mu().string().c_str(),
              out.c().string().c_str());

  if (!analytic_model.empty()) {
    const uvt::PointSourceModel model = uvt::load_model(analytic_model);
    const std::vector<double> t = uvt::uniform_t_grid(cfg.t_count, cfg.t_max);
    const auto [amu, ac] = uvt::analytic_features(model, t);
    uvt::write_feature_csv((out.dir / "mu_analytic.csv").string(), amu);
    uvt::write_feature_csv((out.dir / "c_analytic.csv").string(), ac);
    std::printf("features: rel err mu=%.6g c=%.6g\n",
                calibrated_error(fset.mu, amu), calibrated_error(fset.c, ac));
  }
  return 0;
}

int cmd_reconstruct(const uvt::ExperimentConfig& cfg, std::string mu_path,
                    std::string c_path, const std::string& stack_path,
                    const std::string& model_path) {
  const Paths out = make_output_dir(cfg);
  uvt::FeatureCurve mu, c;
  if (!stack_path.empty()) {
    const uvt::ProjectionStack stack = uvt::read_stack(stack_path);
    FeatureSet fset = compute_features(stack, cfg);
    mu = std::move(fset.mu);
    c = std::move(fset.c);
  } else {
    if (mu_path.empty()) mu_path = out.mu().string();
    if (c_path.empty()) c_path = out.c().string();
    mu = uvt::read_feature_csv(mu_path, uvt::FeatureKind::Mean);
    c = uvt::read_feature_csv(c_path, uvt::FeatureKind::Autocorrelation);
  }
  const double K = cfg.K;
  mu = uvt::normalize_mass(mu, K);
  c = uvt::normalize_mass(c, K * K);

  const uvt::VoxelGrid grid{cfg.m_r, cfg.voxel_size()};
  const uvt::DistanceOperators ops =
      uvt::build_operators(grid, cfg.resolved_delta_t());
  const uvt::Targets targets = uvt::discretize_targets(mu, c, ops, K);
  double rsum = 0.0;
  for (double r : targets.radial) rsum += r;
  std::printf("reconstruct: radial targets sum to %.12g (K=%g)\n", rsum, K);

  if (!model_path.empty()) {
    const uvt::PointSourceModel truth = uvt::load_model(model_path);
    const double extent = (cfg.m_r + 0.5) * cfg.voxel_size();
    for (const auto& x : truth.centers)
      if (x.cwiseAbs().maxCoeff() > extent)
        std::printf(
            "reconstruct: warning: true center (%.3g, %.3g, %.3g) falls "
            "outside the voxel grid (extent %.3g)\n",
            x.x(), x.y(), x.z(), extent);
  }

  uvt::SolverOptions opts = cfg.solver;
  opts.seed = cfg.seed;
  uvt::RngStream init_rng(cfg.seed, uvt::kRestartStreamBase);
  const std::vector<double> init =
      uvt::spectral_init(targets.pair, targets.radial, ops, init_rng);
  const uvt::SolveResult result =
      uvt::pgd_solve(init, targets.pair, targets.radial, ops, opts);

  uvt::write_density(out.density().string(), result.phi, grid);
  uvt::write_trace_csv(out.trace().string(), result.trace);
  const std::vector<uvt::Vec3> centers =
      uvt::extract_centers(result.phi, grid, cfg.K);
  write_centers_json(out.centers(), centers, cfg.voxel_size());
  json report;
  report["objective"] = result.objective;
  report["best_restart"] = result.best_restart;
  report["iterations"] = result.trace.empty() ? 0 : result.trace.back().iter;
  {
    std::ofstream f(out.recon_report());
    if (!f)
      throw uvt::IoError("cannot open for writing: " +
                         out.recon_report().string());
    f << report.dump(2) << "\n";
  }
  uvt::save_config(out.config().string(), cfg);
  std::printf("reconstruct: objective=%.6g (restart %d), wrote %s\n",
              result.objective, result.best_restart,
              out.density().string().c_str());
  return 0;
}

int cmd_evaluate(const uvt::ExperimentConfig& cfg, std::string centers_path,
                 std::string model_path) {
  const Paths out = make_output_dir(cfg);
  if (centers_path.empty()) centers_path = out.centers().string();
  if (model_path.empty()) model_path = out.model().string();
  auto [est, voxel] = read_centers_json(centers_path);
  if (voxel <= 0) voxel = cfg.voxel_size();
  const uvt::PointSourceModel truth = uvt::load_model(model_path);
  const uvt::Alignment alignment = uvt::align(est, truth.centers, voxel);
  const bool ok = uvt::classify(alignment, cfg.threshold);
  {
    std::ofstream f(out.evaluation());
    if (!f)
      throw uvt::IoError("cannot open for writing: " +
                         out.evaluation().string());
    f << uvt::evaluation_report_json(est, truth.centers, alignment,
                                     cfg.threshold);
  }
  std::printf("evaluate: rmsd=%.6g (voxel units) success=%s\n", alignment.rmsd,
              ok ? "true" : "false");
  return 0;
}

int cmd_ablate(const uvt::ExperimentConfig& cfg, const std::string& axis,
               const std::vector<double>& values, int repeats) {
  if (axis != "L" && axis != "delta" && axis != "grid" && axis != "snr")
    throw std::invalid_argument("ablate: axis must be L, delta, grid or snr");
  if (values.empty()) throw std::invalid_argument("ablate: no sweep values");
  if (repeats < 1) throw std::invalid_argument("ablate: repeats must be >= 1");
  const Paths out = make_output_dir(cfg);

  uvt::RngStream model_rng(cfg.seed, kModelStream);
  const uvt::PointSourceModel model = uvt::random_model(
      cfg.K, cfg.resolved_min_separation(), cfg.kernel_sigma, model_rng);

  const fs::path csv_path = out.dir / ("ablate_" + axis + ".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw uvt::IoError("cannot open for writing: " + csv_path.string());
  csv << "value,seed,mu_error,c_error\n";
  csv.precision(17);

  for (size_t ci = 0; ci < values.size(); ++ci) {
    const double value = values[ci];
    uvt::ExperimentConfig cell = cfg;
    if (axis == "L") {
      cell.L = static_cast<long>(std::llround(value));
    } else if (axis == "delta") {
      cell.delta = value;
      cell.M = std::max(1, static_cast<int>(std::lround(0.5 / value)));
    } else if (axis == "grid") {
      const int n = static_cast<int>(std::lround(value));
      cell.n_k = n;
      cell.n_phi = n;
    } else {
      cell.snr = value;
    }
    cell.validate();
    std::vector<double> mu_errs, c_errs;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t cell_seed =
          cfg.seed + 1 + static_cast<std::uint64_t>(ci) * repeats + r;
      const double snr = cell.snr > 0 ? cell.snr : uvt::kSnrInfinite;
      const uvt::ProjectionStack stack = uvt::simulate_stack(
          model, cell.L, cell.M, cell.delta, snr, cell_seed, cell.workers);
      const FeatureSet fset = compute_features(stack, cell);
      const std::vector<double> t = uvt::uniform_t_grid(cell.t_count, cell.t_max);
      const auto [amu, ac] = uvt::analytic_features(model, t);
      const double me = calibrated_error(fset.mu, amu);
      const double ce = calibrated_error(fset.c, ac);
      csv << value << ',' << cell_seed << ',' << me << ',' << ce << '\n';
      mu_errs.push_back(me);
      c_errs.push_back(ce);
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    std::printf("ablate %s=%g: median mu err %.6g, c err %.6g\n", axis.c_str(),
                value, median(mu_errs), median(c_errs));
  }
  uvt::save_config(out.config().string(), cfg);
  std::printf("ablate: wrote %s\n", csv_path.string().c_str());
  return 0;
}

int cmd_pipeline(const uvt::ExperimentConfig& cfg) {
  const Paths out = make_output_dir(cfg);
  cmd_simulate(cfg);
  cmd_features(cfg, out.stack().string(), out.model().string());
  cmd_reconstruct(cfg, out.mu().string(), out.c().string(), "",
                  out.model().string());
  return cmd_evaluate(cfg, out.centers().string(), out.model().string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-source tomography from unknown views"};
  app.require_subcommand(1);

  uvt::ExperimentConfig flags;
  std::string config_path;
  std::string stack_path, analytic_model, mu_path, c_path, model_path;
  std::string centers_path, axis;
  std::vector<double> sweep_values;
  int repeats = 5;

  CLI::App* simulate = app.add_subcommand("simulate", "render a noisy stack");
  CLI::App* features =
      app.add_subcommand("features", "estimate B1/B2 and mu/C curves");
  features->add_option("--stack", stack_path, "input stack file");
  features->add_option("--analytic", analytic_model,
                       "model JSON for oracle curves");
  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "solve the distance problem");
  reconstruct->add_option("--mu", mu_path, "mean feature CSV");
  reconstruct->add_option("--c", c_path, "autocorrelation feature CSV");
  reconstruct->add_option("--stack", stack_path,
                          "compute features from this stack instead");
  reconstruct->add_option("--model", model_path,
                          "truth model JSON for geometry warnings");
  CLI::App* evaluate = app.add_subcommand("evaluate", "align and score");
  evaluate->add_option("--centers", centers_path, "estimated centers JSON");
  evaluate->add_option("--model", model_path, "truth model JSON");
  CLI::App* ablate = app.add_subcommand("ablate", "feature-error sweep");
  ablate->add_option("--axis", axis, "one of L, delta, grid, snr")->required();
  ablate->add_option("--values", sweep_values, "sweep values")->required();
  ablate->add_option("--repeats", repeats, "seeds per value");
  CLI::App* pipeline = app.add_subcommand("pipeline", "run all stages");

  for (CLI::App* cmd :
       {simulate, features, reconstruct, evaluate, ablate, pipeline})
    add_config_flags(cmd, flags, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const uvt::ExperimentConfig cfg = finalize_config(cmd, flags, config_path);
    if (cmd == simulate) return cmd_simulate(cfg);
    if (cmd == features) return cmd_features(cfg, stack_path, analytic_model);
    if (cmd == reconstruct)
      return cmd_reconstruct(cfg, mu_path, c_path, stack_path, model_path);
    if (cmd == evaluate) return cmd_evaluate(cfg, centers_path, model_path);
    if (cmd == ablate) return cmd_ablate(cfg, axis, sweep_values, repeats);
    return cmd_pipeline(cfg);
  } catch (const uvt::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}
