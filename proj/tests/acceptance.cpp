// One binary per acceptance gate: each criterion prints a single
// [PASS]/[FAIL] line; the exit status is 0 only if every line passed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "uvt/eval.hpp"
#include "uvt/features.hpp"
#include "uvt/quadrature.hpp"
#include "uvt/recon.hpp"

using namespace uvt;

namespace {

bool g_all_pass = true;
std::chrono::steady_clock::time_point g_t0;

void start() { g_t0 = std::chrono::steady_clock::now(); }

void report(const std::string& name, bool pass, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0)
          .count();
  std::printf("[%s] %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str(), secs);
  std::fflush(stdout);
  g_all_pass &= pass;
}

// ---- independent quadrature oracles ---------------------------------------

double adaptive_simpson_1d(const std::function<double(double)>& f, double a,
                           double b, double fa, double fm, double fb,
                           double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_1d(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
         adaptive_simpson_1d(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double tol) {
  const double m = 0.5 * (a + b);
  return adaptive_simpson_1d(f, a, b, f(a), f(m), f(b), tol, 30);
}

double pixel_oracle(const PointSourceModel& model, const Rotation& rot, int u,
                    int v, double delta) {
  const Projected2D proj = project_model(model, rot);
  const double s2 = 2.0 * proj.sigma * proj.sigma;
  const double norm = 1.0 / (2.0 * std::numbers::pi * proj.sigma * proj.sigma);
  auto density = [&](double x, double y) {
    double val = 0.0;
    for (const auto& src : proj.sources) {
      const double dx = x - src.x, dy = y - src.y;
      val += src.mass * norm * std::exp(-(dx * dx + dy * dy) / s2);
    }
    return val;
  };
  auto row = [&](double y) {
    return integrate_1d([&](double x) { return density(x, y); },
                        (u - 0.5) * delta, (u + 0.5) * delta, 1e-13);
  };
  return integrate_1d(row, (v - 0.5) * delta, (v + 0.5) * delta, 1e-13);
}

double shell_oracle(double t, const Vec3& c, double s) {
  const int n_mu = 80, n_phi = 160;
  const QuadratureRule mu_rule = gauss_legendre(n_mu, -1.0, 1.0);
  const double norm =
      1.0 / (std::pow(2.0 * std::numbers::pi, 1.5) * s * s * s);
  double acc = 0.0;
  for (int i = 0; i < n_mu; ++i) {
    const double cmu = mu_rule.nodes[i];
    const double smu = std::sqrt(std::max(0.0, 1.0 - cmu * cmu));
    double ring = 0.0;
    for (int p = 0; p < n_phi; ++p) {
      const double phi = 2.0 * std::numbers::pi * p / n_phi;
      const Vec3 x(t * smu * std::cos(phi), t * smu * std::sin(phi), t * cmu);
      ring += std::exp(-(x - c).squaredNorm() / (2.0 * s * s));
    }
    acc += mu_rule.weights[i] * ring * (2.0 * std::numbers::pi / n_phi);
  }
  return norm * t * t * acc;
}

// ---- shared pipeline helpers ----------------------------------------------

constexpr double kTMax = 1.7320508075688772;

struct FeatureErrors {
  double mu;
  double c;
};

// estimated-vs-analytic relative l2 errors after mass normalization
FeatureErrors feature_errors(const PointSourceModel& model, long L, int M,
                             double delta, double snr, int n,
                             std::uint64_t seed) {
  const ProjectionStack stack = simulate_stack(model, L, M, delta, snr, seed);
  const PolarGrid grid =
      make_polar_grid(n, n, std::numbers::pi / (2.0 * delta));
  const auto [b1, b2] = accumulate_b1_b2(stack, grid, true);
  const std::vector<double> t = uniform_t_grid(256, kTMax);
  const FeatureCurve mu = sine_transform(b1, t);
  const FeatureCurve c = sine_transform(b2, t);
  const auto [amu, ac] = analytic_features(model, t);
  return {feature_error(normalize_mass(mu, trapezoid_mass(amu)), amu),
          feature_error(normalize_mass(c, trapezoid_mass(ac)), ac)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::vector<double> radial_sums(const std::vector<double>& phi,
                                const DistanceOperators& ops) {
  std::vector<double> r(ops.n_radial_bins, 0.0);
  for (size_t i = 0; i < phi.size(); ++i) r[ops.radial_bin[i]] += phi[i];
  return r;
}

std::vector<double> random_feasible(const std::vector<double>& radial_targets,
                                    const DistanceOperators& ops,
                                    RngStream& rng) {
  std::vector<double> v(ops.grid.n());
  for (double& x : v) x = rng.uniform();
  return project_constraints(v, radial_targets, ops);
}

// random centers confined to a ball well inside the imaged field so no
// projected mass is clipped at the image edge (field half-width is M*delta;
// radius + 3 sigma must stay below it)
PointSourceModel field_model(int K, double radius, double min_sep, double sigma,
                             RngStream& rng) {
  PointSourceModel m;
  m.kernel_sigma = sigma;
  while (static_cast<int>(m.centers.size()) < K) {
    Vec3 c(rng.uniform(-radius, radius), rng.uniform(-radius, radius),
           rng.uniform(-radius, radius));
    if (c.norm() > radius) continue;
    bool good = true;
    for (const auto& o : m.centers)
      if ((o - c).norm() < min_sep) good = false;
    if (good) m.centers.push_back(c);
  }
  m.amplitudes.assign(K, 1.0);
  return m;
}

std::vector<double> brute_force_project(const std::vector<double>& v,
                                        double target) {
  const int n = static_cast<int>(v.size());
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) {
        sum += v[i];
        ++count;
      }
    const double lambda = (target - sum) / count;
    std::vector<double> x(n, 0.0);
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) {
        x[i] = v[i] + lambda;
        if (x[i] < -1e-12) feasible = false;
      } else if (v[i] + lambda > 1e-12) {
        feasible = false;
      }
    }
    if (!feasible) continue;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) dist += (x[i] - v[i]) * (x[i] - v[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

// ---- criteria -------------------------------------------------------------

void forward_exactness() {
  start();
  RngStream rng(201, 0);
  double max_err = 0.0;
  for (int block = 0; block < 10; ++block) {
    const PointSourceModel model = random_model(3, 0.1, 0.05, rng);
    const Rotation rot = sample_uniform_rotation(rng);
    const int M = 6;
    const double delta = 0.05;
    const ProjectionImage img = render(model, rot, M, delta);
    for (int probe = 0; probe < 100; ++probe) {
      const int u = static_cast<int>(rng.uniform() * (2 * M + 1)) - M;
      const int v = static_cast<int>(rng.uniform() * (2 * M + 1)) - M;
      max_err = std::max(
          max_err, std::abs(img.at(u, v) - pixel_oracle(model, rot, u, v, delta)));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "1000 pixels, max abs err %.2e", max_err);
  report("forward model exactness", max_err < 1e-8, buf);
}

void polar_transform_oracle() {
  start();
  RngStream rng(202, 0);
  double max_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    ProjectionImage img;
    img.half_width = 4 + static_cast<int>(rng.uniform() * 4);  // side <= 15
    img.delta = 0.1 + 0.2 * rng.uniform();
    img.pixels.resize(static_cast<size_t>(img.side()) * img.side());
    for (double& p : img.pixels) p = rng.normal();
    const int n_k = 4 + static_cast<int>(rng.uniform() * 13);   // <= 16
    const int n_phi = 4 + static_cast<int>(rng.uniform() * 13);  // <= 16
    const double cutoff =
        (0.3 + 0.7 * rng.uniform()) * std::numbers::pi / img.delta;
    const PolarGrid grid = make_polar_grid(n_k, n_phi, cutoff);
    const PolarSpectrum fast = polar_dft_fast(img, grid);
    const PolarSpectrum direct = polar_dft_direct(img, grid);
    for (size_t i = 0; i < fast.values.size(); ++i)
      max_err = std::max(max_err, std::abs(fast.values[i] - direct.values[i]));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "50 images, max abs err %.2e", max_err);
  report("polar transform vs direct sum", max_err < 1e-10, buf);
}

bool shell_oracle_gate() {
  start();
  RngStream rng(203, 0);
  double max_rel = 0.0;
  for (int pair = 0; pair < 10; ++pair) {
    const double r = 0.05 + 0.6 * rng.uniform();
    const double s = 0.02 + 0.08 * rng.uniform();
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const Vec3 c = r * dir;
    for (int j = 1; j <= 50; ++j) {
      const double t = 1.2 * j / 50.0;
      const double want = shell_oracle(t, c, s);
      if (std::abs(want) < 1e-12) continue;
      max_rel =
          std::max(max_rel, std::abs(shell(t, r, s) - want) / std::abs(want));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "500 samples, max rel err %.2e", max_rel);
  const bool pass = max_rel < 1e-6;
  report("shell formula vs sphere quadrature", pass, buf);
  return pass;
}

double g_noiseless_mu_err = 0.0;  // seed 1 at full scale, reused below
double g_noiseless_c_err = 0.0;

void feature_estimation_accuracy() {
  start();
  std::vector<double> mu_errs, c_errs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream model_rng(seed, 1);
    const PointSourceModel model = field_model(3, 0.35, 0.2, 0.05, model_rng);
    const FeatureErrors err =
        feature_errors(model, 2000, 50, 0.01, kSnrInfinite, 200, seed);
    mu_errs.push_back(err.mu);
    c_errs.push_back(err.c);
    if (seed == 1) {
      g_noiseless_mu_err = err.mu;
      g_noiseless_c_err = err.c;
    }
  }
  const double mu_med = median(mu_errs);
  const double c_med = median(c_errs);
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "median over 5 seeds: mu %.2f%%, C %.2f%%", 100 * mu_med,
                100 * c_med);
  report("feature estimation accuracy", mu_med < 0.05 && c_med < 0.08, buf);
}

void ablation_trends() {
  start();
  auto model_for = [](std::uint64_t seed) {
    RngStream mr(seed, 1);
    return field_model(3, 0.35, 0.2, 0.05, mr);
  };
  const std::vector<std::uint64_t> seeds{42, 43, 44};

  // error vs stack size, median over 3 seeds (nested stacks share the
  // leading images); the sweep stops before the estimate saturates at the
  // discretization floor, where monotonicity would be decided by noise
  std::vector<double> by_l;
  for (long L : {30L, 300L, 3000L}) {
    std::vector<double> errs;
    for (std::uint64_t seed : seeds)
      errs.push_back(
          feature_errors(model_for(seed), L, 25, 0.02, kSnrInfinite, 100, seed).c);
    by_l.push_back(median(errs));
  }
  const bool l_trend = by_l[0] > by_l[1] && by_l[1] > by_l[2];

  // error vs polar grid resolution, median over 3 seeds; the low end sits
  // below the quadrature resolution needed for the oscillatory sine
  // transform, the high end is fully converged
  std::vector<double> by_n;
  for (int n : {32, 40, 100}) {
    std::vector<double> errs;
    for (std::uint64_t seed : seeds)
      errs.push_back(
          feature_errors(model_for(seed), 2000, 25, 0.02, kSnrInfinite, n, seed).c);
    by_n.push_back(median(errs));
  }
  const bool n_trend = by_n[0] > by_n[1] && by_n[1] > by_n[2];
  const PointSourceModel model = model_for(42);

  // noise strictly hurts at log10 snr = -0.6
  const FeatureErrors clean =
      feature_errors(model, 2000, 25, 0.02, kSnrInfinite, 100, 42);
  const FeatureErrors noisy =
      feature_errors(model, 2000, 25, 0.02, std::pow(10.0, -0.6), 100, 42);
  const bool snr_gap = noisy.mu > clean.mu && noisy.c > clean.c;

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "C err by L {%.3f %.3f %.3f}, by N {%.3f %.3f %.3f}, "
                "snr-0.6 mu %.3f>%.3f c %.3f>%.3f",
                by_l[0], by_l[1], by_l[2], by_n[0], by_n[1], by_n[2], noisy.mu,
                clean.mu, noisy.c, clean.c);
  report("ablation trends", l_trend && n_trend && snr_gap, buf);
}

// distances all >= 6 sigma apart from zero and from each other, radii spread
// wider than the kernel, so every shell contributes its own local max
void peak_coincidence() {
  start();
  PointSourceModel model;
  // radii {0.16, 0.27, 0.38}, pairwise {0.30, 0.46, 0.62}; max radius keeps
  // 2.5 sigma of edge margin inside the 0.505 field half-width
  model.centers = {Vec3(0.16, 0.0, 0.0), Vec3(0.0265625, 0.2686902, 0.0),
                   Vec3(-0.13, -0.2980997, 0.1965620)};
  model.amplitudes = {1.0, 1.0, 1.0};
  model.kernel_sigma = 0.05;

  const ProjectionStack stack =
      simulate_stack(model, 2000, 50, 0.01, kSnrInfinite, 6);
  const PolarGrid grid =
      make_polar_grid(200, 200, std::numbers::pi / (2.0 * 0.01));
  const auto [b1, b2] = accumulate_b1_b2(stack, grid, true);
  const std::vector<double> t = uniform_t_grid(48, kTMax);
  const double step = t[1] - t[0];
  const FeatureCurve mu = sine_transform(b1, t);
  const FeatureCurve c = sine_transform(b2, t);

  auto local_maxima = [&](const FeatureCurve& curve) {
    std::vector<double> peaks;
    for (size_t j = 1; j + 1 < curve.t.size(); ++j)
      if (curve.values[j] > curve.values[j - 1] &&
          curve.values[j] > curve.values[j + 1])
        peaks.push_back(curve.t[j]);
    return peaks;
  };
  auto covered = [&](double d, const std::vector<double>& peaks) {
    for (double p : peaks)
      if (std::abs(p - d) <= step + 1e-12) return true;
    return false;
  };

  const DistanceLists dist = radial_and_pairwise_distances(model);
  const std::vector<double> mu_peaks = local_maxima(mu);
  const std::vector<double> c_peaks = local_maxima(c);
  bool ok = true;
  for (double r : dist.radial) ok &= covered(r, mu_peaks);
  for (double d : dist.pairwise) ok &= covered(d, c_peaks);

  char buf[128];
  std::snprintf(buf, sizeof buf,
                "%zu radial and %zu pairwise distances vs t-step %.4f",
                dist.radial.size(), dist.pairwise.size(), step);
  report("feature peaks mark the distances", ok, buf);
}

void debias_validation() {
  start();
  const double sigma = 0.7, delta = 0.11;
  const int M = 6;
  const long L = 5000;
  ProjectionStack stack;
  stack.half_width = M;
  stack.delta = delta;
  stack.noise_sigma = sigma;
  stack.seed = 77;
  stack.images.resize(L);
  for (long l = 0; l < L; ++l) {
    RngStream rng(77, kImageStreamBase + l);
    auto& img = stack.images[l];
    img.half_width = M;
    img.delta = delta;
    img.pixels.resize(static_cast<size_t>(img.side()) * img.side());
    for (double& p : img.pixels) p = sigma * rng.normal();
  }
  const PolarGrid grid = make_polar_grid(12, 16, 20.0);
  const double bias = noise_bias_b2(stack);
  std::vector<double> mean(12, 0.0), m2(12, 0.0);
  for (const auto& img : stack.images) {
    const PolarSpectrum spec = polar_dft(img, grid);
    for (int i = 0; i < 12; ++i) {
      double s = 0.0;
      for (int p = 0; p < 16; ++p) s += std::norm(spec.at(i, p));
      s /= 16.0;
      mean[i] += s;
      m2[i] += s * s;
    }
  }
  bool ok = true;
  double worst = 0.0;
  for (int i = 0; i < 12; ++i) {
    mean[i] /= L;
    const double var = m2[i] / L - mean[i] * mean[i];
    const double se = std::sqrt(var / L);
    const double z = std::abs(mean[i] - bias) / se;
    worst = std::max(worst, z);
    ok &= z < 3.0;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "noise-only L=5000, worst node %.2f SE", worst);
  report("B2 noise debias", ok, buf);
}

void solver_correctness() {
  start();
  bool grad_ok = true, trace_ok = true, fixed_ok = true;

  {  // gradient vs central differences at feasible points
    const VoxelGrid grid{2, 0.2};
    const DistanceOperators ops = build_operators(grid, 0.2);
    RngStream rng(204, 0);
    std::vector<double> pair_targets(ops.n_pair_bins);
    for (double& v : pair_targets) v = rng.uniform();
    std::vector<double> radial_targets(ops.n_radial_bins);
    for (double& v : radial_targets) v = 0.2 + rng.uniform();
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> phi = random_feasible(radial_targets, ops, rng);
      const std::vector<double> q = quadratic_form(phi, ops);
      const std::vector<double> g = udgp_gradient(phi, q, pair_targets, ops);
      for (int probe = 0; probe < 5; ++probe) {
        const size_t i = static_cast<size_t>(rng.uniform() * phi.size());
        const double h = 1e-6;
        std::vector<double> up = phi, dn = phi;
        up[i] += h;
        dn[i] -= h;
        const double fd =
            (udgp_objective(quadratic_form(up, ops), pair_targets) -
             udgp_objective(quadratic_form(dn, ops), pair_targets)) /
            (2.0 * h);
        if (std::abs(fd) > 1e-8)
          grad_ok &= std::abs(g[i] - fd) / std::abs(fd) < 1e-5;
        else
          grad_ok &= std::abs(g[i] - fd) < 1e-8;
      }
    }
  }

  {  // trace monotone under the accepted-step rule
    const VoxelGrid grid{2, 0.2};
    const DistanceOperators ops = build_operators(grid, 0.2);
    std::vector<double> z(grid.n(), 0.0);
    z[grid.index(2, 0, 0)] = z[grid.index(0, -1, 1)] = z[grid.index(-1, 2, 0)] =
        1.0;
    const std::vector<double> pair_targets = quadratic_form(z, ops);
    const std::vector<double> radial_targets = radial_sums(z, ops);
    SolverOptions opts;
    opts.restarts = 3;
    opts.max_iters = 150;
    RngStream rng(205, 0);
    const std::vector<double> init =
        spectral_init(pair_targets, radial_targets, ops, rng);
    const SolveResult res =
        pgd_solve(init, pair_targets, radial_targets, ops, opts);
    for (size_t i = 1; i < res.trace.size(); ++i)
      trace_ok &= res.trace[i].objective <= res.trace[i - 1].objective + 1e-9;
  }

  {  // exact indicator data is a fixed point with zero objective
    const VoxelGrid grid{1, 0.1};
    const DistanceOperators ops = build_operators(grid, 0.1);
    std::vector<double> z(grid.n(), 0.0);
    z[grid.index(1, 0, 0)] = z[grid.index(-1, 1, 0)] = 1.0;
    const std::vector<double> pair_targets = quadratic_form(z, ops);
    const std::vector<double> radial_targets = radial_sums(z, ops);
    SolverOptions opts;
    opts.restarts = 1;
    opts.max_iters = 50;
    const SolveResult res =
        pgd_solve(z, pair_targets, radial_targets, ops, opts);
    fixed_ok &= res.objective == 0.0;
    for (long i = 0; i < grid.n(); ++i) fixed_ok &= res.phi[i] == z[i];
  }

  char buf[128];
  std::snprintf(buf, sizeof buf, "gradient %s, trace %s, fixed point %s",
                grad_ok ? "ok" : "bad", trace_ok ? "ok" : "bad",
                fixed_ok ? "ok" : "bad");
  report("solver correctness", grad_ok && trace_ok && fixed_ok, buf);
}

void projection_exactness() {
  start();
  RngStream rng(206, 0);
  double max_dev = 0.0;
  bool exact_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 7);  // up to 8 voxels
    DistanceOperators ops;
    ops.grid = VoxelGrid{0, 1.0};
    ops.n_radial_bins = 1;
    ops.radial_bin.assign(n, 0);
    ops.radial_members = {{}};
    for (int i = 0; i < n; ++i) ops.radial_members[0].push_back(i);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    const double target = 0.1 + 2.0 * rng.uniform();
    const std::vector<double> got = project_constraints(v, {target}, ops);
    const std::vector<double> want = brute_force_project(v, target);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      max_dev = std::max(max_dev, std::abs(got[i] - want[i]));
      exact_ok &= got[i] >= 0.0;
      sum += got[i];
    }
    exact_ok &= std::abs(sum - target) < 1e-12;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "100 random bins, max deviation %.2e, constraints %s", max_dev,
                exact_ok ? "exact" : "violated");
  report("constraint projection vs brute force", max_dev < 1e-8 && exact_ok,
         buf);
}

void end_to_end_reconstruction() {
  start();
  const VoxelGrid grid{5, 0.1};
  // half-voxel distance bins sharpen the pair targets; a short multi-restart
  // scout picks the basin and a single long polish refines it
  const DistanceOperators ops = build_operators(grid, 0.5 * grid.voxel_size);
  const std::vector<double> t = uniform_t_grid(256, kTMax);

  int ok = 0;
  const int n_trials = 20;
  for (int trial = 0; trial < n_trials; ++trial) {
    RngStream rng(100 + trial, 7);
    std::vector<Vec3> centers;
    while (static_cast<int>(centers.size()) < 3) {
      Vec3 c(static_cast<int>(rng.uniform() * 9) - 4,
             static_cast<int>(rng.uniform() * 9) - 4,
             static_cast<int>(rng.uniform() * 9) - 4);
      c *= grid.voxel_size;
      bool good = true;
      for (const auto& o : centers)
        if ((o - c).norm() < 0.25) good = false;
      if (good) centers.push_back(c);
    }
    PointSourceModel model;
    model.centers = centers;
    model.kernel_sigma = 0.03;
    model.amplitudes = {1.0, 1.0, 1.0};
    const auto [mu, c] = analytic_features(model, t);
    const Targets targets = discretize_targets(mu, c, ops, 3.0);

    SolverOptions scout;
    scout.seed = 100 + trial;
    scout.max_iters = 300;
    RngStream init_rng(scout.seed, kRestartStreamBase);
    const std::vector<double> init =
        spectral_init(targets.pair, targets.radial, ops, init_rng);
    SolveResult res = pgd_solve(init, targets.pair, targets.radial, ops, scout);
    SolverOptions polish = scout;
    polish.restarts = 1;
    polish.max_iters = 1000;
    res = pgd_solve(res.phi, targets.pair, targets.radial, ops, polish);

    const std::vector<Vec3> est = extract_centers(res.phi, grid, 3);
    const Alignment a = align(est, model.centers, grid.voxel_size);
    ok += a.rmsd < 1.0;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d/%d trials under 1 voxel rmsd", ok,
                n_trials);
  report("end-to-end reconstruction", ok * 5 >= n_trials * 3, buf);
}

void rotation_invariance() {
  start();
  RngStream setup_rng(207, 0);
  const PointSourceModel model = field_model(3, 0.35, 0.2, 0.05, setup_rng);
  const PointSourceModel rotated =
      model.rotated(sample_uniform_rotation(setup_rng));

  const int reps = 10;
  const int t_count = 64;
  const std::vector<double> t = uniform_t_grid(t_count, kTMax);
  const PolarGrid grid =
      make_polar_grid(100, 100, std::numbers::pi / (2.0 * 0.02));

  auto estimate = [&](const PointSourceModel& m, std::uint64_t seed,
                      std::vector<double>& mean, std::vector<double>& se) {
    std::vector<std::vector<double>> runs;
    for (int rep = 0; rep < reps; ++rep) {
      const ProjectionStack stack =
          simulate_stack(m, 1000, 25, 0.02, kSnrInfinite, seed + rep);
      const auto [b1, b2] = accumulate_b1_b2(stack, grid, true);
      const FeatureCurve mu = sine_transform(b1, t);
      const FeatureCurve c = sine_transform(b2, t);
      std::vector<double> row = mu.values;
      row.insert(row.end(), c.values.begin(), c.values.end());
      runs.push_back(std::move(row));
    }
    const size_t cols = runs[0].size();
    mean.assign(cols, 0.0);
    se.assign(cols, 0.0);
    for (const auto& row : runs)
      for (size_t j = 0; j < cols; ++j) mean[j] += row[j];
    for (double& m2 : mean) m2 /= reps;
    for (const auto& row : runs)
      for (size_t j = 0; j < cols; ++j) {
        const double d = row[j] - mean[j];
        se[j] += d * d;
      }
    for (double& v : se) v = std::sqrt(v / (reps - 1) / reps);
  };

  std::vector<double> mean_a, se_a, mean_b, se_b;
  estimate(model, 400, mean_a, se_a);
  estimate(rotated, 500, mean_b, se_b);
  double worst = 0.0;
  for (size_t j = 0; j < mean_a.size(); ++j) {
    const double se = std::sqrt(se_a[j] * se_a[j] + se_b[j] * se_b[j]);
    if (se > 0.0) worst = std::max(worst, std::abs(mean_a[j] - mean_b[j]) / se);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "10 repeats at L=1000, worst node %.2f SE",
                worst);
  report("rotation invariance of the features", worst < 3.0, buf);
}

void classifier_labels() {
  start();
  Alignment a;
  a.rmsd = 1.0;
  const bool good = classify(a, 10.0);
  a.rmsd = 55.7578;
  const bool bad = classify(a, 10.0);
  report("success classifier labels", good && !bad,
         "rmsd 1.0 -> success, rmsd 55.7578 -> failure at threshold 10");
}

}  // namespace

int main() {
  forward_exactness();
  polar_transform_oracle();
  const bool shell_ok = shell_oracle_gate();
  if (shell_ok) {
    feature_estimation_accuracy();
    ablation_trends();
    peak_coincidence();
  } else {
    report("feature estimation accuracy", false, "skipped: shell gate failed");
    report("ablation trends", false, "skipped: shell gate failed");
    report("feature peaks mark the distances", false,
           "skipped: shell gate failed");
  }
  debias_validation();
  solver_correctness();
  projection_exactness();
  end_to_end_reconstruction();
  rotation_invariance();
  classifier_labels();
  std::printf("%s\n", g_all_pass ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return g_all_pass ? 0 : 1;
}
