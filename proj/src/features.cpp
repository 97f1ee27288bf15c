#include "uvt/features.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "uvt/parallel.hpp"
#include "uvt/errors.hpp"

namespace uvt {

std::vector<double> uniform_t_grid(int count, double t_max) {
  if (count < 2) throw std::invalid_argument("t grid needs at least 2 points");
  std::vector<double> t(count);
  for (int j = 0; j < count; ++j) t[j] = t_max * j / (count - 1);
  return t;
}

namespace {

constexpr long kChunk = 1024;

// per-image angular reduction of both curves, combined over images chunkwise
// in fixed order; one polar transform per image
std::pair<BCurve, BCurve> accumulate(const ProjectionStack& stack,
                                     const PolarGrid& grid, int workers) {
  const double nyquist = std::numbers::pi / stack.delta;
  if (grid.cutoff > nyquist * (1.0 + 1e-12))
    throw std::invalid_argument("accumulate: grid cutoff exceeds Nyquist");

  const long L = stack.L();
  const int n_k = grid.n_k();
  const int n_phi = grid.n_phi();
  const long n_chunks = (L + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial1(
      n_chunks, std::vector<double>(n_k, 0.0));
  std::vector<std::vector<double>> partial2 = partial1;

  parallel_chunks(L, kChunk, workers, [&](long chunk, long begin, long end) {
    std::vector<double>& acc1 = partial1[chunk];
    std::vector<double>& acc2 = partial2[chunk];
    for (long l = begin; l < end; ++l) {
      const PolarSpectrum spec = polar_dft(stack.images[l], grid);
      for (int i = 0; i < n_k; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (int p = 0; p < n_phi; ++p) {
          s1 += spec.at(i, p).real();
          s2 += std::norm(spec.at(i, p));
        }
        acc1[i] += s1;
        acc2[i] += s2;
      }
    }
  });

  BCurve b1, b2;
  b1.kind = BKind::B1;
  b2.kind = BKind::B2;
  b1.grid = b2.grid = grid;
  b1.n_images = b2.n_images = L;
  b1.values.assign(n_k, 0.0);
  b2.values.assign(n_k, 0.0);
  for (long chunk = 0; chunk < n_chunks; ++chunk)
    for (int i = 0; i < n_k; ++i) {
      b1.values[i] += partial1[chunk][i];
      b2.values[i] += partial2[chunk][i];
    }
  const double scale = L > 0 ? 1.0 / (static_cast<double>(L) * n_phi) : 0.0;
  for (double& v : b1.values) v *= scale;
  for (double& v : b2.values) v *= scale;
  return {std::move(b1), std::move(b2)};
}

}  // namespace

BCurve accumulate_b1(const ProjectionStack& stack, const PolarGrid& grid,
                     int workers) {
  return accumulate(stack, grid, workers).first;
}

std::pair<BCurve, BCurve> accumulate_b1_b2(const ProjectionStack& stack,
                                           const PolarGrid& grid, bool debias,
                                           int workers) {
  auto curves = accumulate(stack, grid, workers);
  if (debias && stack.noise_sigma > 0) {
    const double bias = noise_bias_b2(stack);
    for (double& v : curves.second.values) v -= bias;
  }
  return curves;
}

double noise_bias_b2(const ProjectionStack& stack) {
  const double d2 = stack.delta * stack.delta;
  const double side = 2.0 * stack.half_width + 1.0;
  return stack.noise_sigma * stack.noise_sigma * d2 * d2 * side * side;
}

BCurve accumulate_b2(const ProjectionStack& stack, const PolarGrid& grid,
                     bool debias, int workers) {
  return accumulate_b1_b2(stack, grid, debias, workers).second;
}

FeatureCurve sine_transform(const BCurve& b, const std::vector<double>& t_grid) {
  FeatureCurve out;
  out.kind = (b.kind == BKind::B1) ? FeatureKind::Mean
                                   : FeatureKind::Autocorrelation;
  out.t = t_grid;
  out.values.assign(t_grid.size(), 0.0);
  const int n_k = b.grid.n_k();
  for (size_t j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    double acc = 0.0;
    for (int i = 0; i < n_k; ++i) {
      const double k = b.grid.k_nodes[i];
      acc += b.grid.k_weights[i] * k * b.values[i] * std::sin(k * t);
    }
    out.values[j] = 2.0 * t / std::numbers::pi * acc;
  }
  return out;
}

double shell(double t, double r, double s) {
  if (t < 0) return 0.0;
  if (r < 1e-7 * s) {
    // Maxwell-type limit of a shell around the origin
    return std::sqrt(2.0 / std::numbers::pi) * t * t / (s * s * s) *
           std::exp(-t * t / (2.0 * s * s));
  }
  const double inv2s2 = 1.0 / (2.0 * s * s);
  const double dm = t - r;
  const double dp = t + r;
  return t / (r * s * std::sqrt(2.0 * std::numbers::pi)) *
         (std::exp(-dm * dm * inv2s2) - std::exp(-dp * dp * inv2s2));
}

std::pair<FeatureCurve, FeatureCurve> analytic_features(
    const PointSourceModel& model, const std::vector<double>& t_grid) {
  const int K = model.K();
  const double s_mu = model.kernel_sigma;
  const double s_c = model.kernel_sigma * std::numbers::sqrt2;

  FeatureCurve mu;
  mu.kind = FeatureKind::Mean;
  mu.t = t_grid;
  mu.values.assign(t_grid.size(), 0.0);
  FeatureCurve c;
  c.kind = FeatureKind::Autocorrelation;
  c.t = t_grid;
  c.values.assign(t_grid.size(), 0.0);

  for (size_t j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    double m = 0.0, cc = 0.0;
    for (int n = 0; n < K; ++n) {
      m += model.amplitudes[n] * shell(t, model.centers[n].norm(), s_mu);
      for (int q = 0; q < K; ++q) {
        const double d = (model.centers[n] - model.centers[q]).norm();
        cc += model.amplitudes[n] * model.amplitudes[q] * shell(t, d, s_c);
      }
    }
    mu.values[j] = m;
    c.values[j] = cc;
  }
  return {std::move(mu), std::move(c)};
}

double feature_error(const FeatureCurve& est, const FeatureCurve& truth) {
  if (est.t.size() != truth.t.size())
    throw std::invalid_argument("feature_error: t-grid size mismatch");
  for (size_t j = 0; j < est.t.size(); ++j)
    if (std::abs(est.t[j] - truth.t[j]) > 1e-12)
      throw std::invalid_argument("feature_error: t-grid mismatch");
  double num = 0.0, den = 0.0;
  for (size_t j = 0; j < est.values.size(); ++j) {
    const double d = est.values[j] - truth.values[j];
    num += d * d;
    den += truth.values[j] * truth.values[j];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

double trapezoid_mass(const FeatureCurve& curve) {
  double m = 0.0;
  for (size_t j = 0; j + 1 < curve.t.size(); ++j)
    m += 0.5 * (curve.values[j] + curve.values[j + 1]) *
         (curve.t[j + 1] - curve.t[j]);
  return m;
}

FeatureCurve normalize_mass(const FeatureCurve& curve, double target_mass) {
  const double m = trapezoid_mass(curve);
  if (m == 0.0)
    throw std::runtime_error("normalize_mass: curve has zero integral");
  FeatureCurve out = curve;
  const double f = target_mass / m;
  for (double& v : out.values) v *= f;
  return out;
}

void write_bcurve_csv(const std::string& path, const BCurve& b) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "k,value\n";
  f.precision(17);
  for (int i = 0; i < b.grid.n_k(); ++i)
    f << b.grid.k_nodes[i] << ',' << b.values[i] << '\n';
}

void write_feature_csv(const std::string& path, const FeatureCurve& curve) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "t,value\n";
  f.precision(17);
  for (size_t j = 0; j < curve.t.size(); ++j)
    f << curve.t[j] << ',' << curve.values[j] << '\n';
}

FeatureCurve read_feature_csv(const std::string& path, FeatureKind kind) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  FeatureCurve out;
  out.kind = kind;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t, v;
    char comma;
    if (!(ss >> t >> comma >> v))
      throw IoError("bad feature csv line: " + line);
    out.t.push_back(t);
    out.values.push_back(v);
  }
  return out;
}

}  // namespace uvt
