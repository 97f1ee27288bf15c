#include "uvt/forward.hpp"

#include <cmath>
#include <numbers>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "uvt/parallel.hpp"
#include "uvt/errors.hpp"

namespace uvt {

Projected2D project_model(const PointSourceModel& model, const Rotation& rot) {
  Projected2D out;
  out.sigma = model.kernel_sigma;
  out.sources.reserve(model.centers.size());
  for (int n = 0; n < model.K(); ++n) {
    const Vec3 y = rot.apply(model.centers[n]);
    out.sources.push_back({y.x(), y.y(), model.amplitudes[n]});
  }
  return out;
}

double ProjectionImage::pixel_sum() const {
  double s = 0.0;
  for (double p : pixels) s += p;
  return s;
}

namespace {

// Integral of a unit-mass 1D Gaussian over [lo, hi].
inline double gauss_cell(double lo, double hi, double mean, double sigma) {
  const double inv = 1.0 / (sigma * std::numbers::sqrt2);
  return 0.5 * (std::erf((hi - mean) * inv) - std::erf((lo - mean) * inv));
}

}  // namespace

ProjectionImage render(const PointSourceModel& model, const Rotation& rot,
                       int half_width, double delta) {
  if (half_width < 1) throw std::invalid_argument("render: M must be >= 1");
  if (delta <= 0) throw std::invalid_argument("render: delta must be > 0");

  const Projected2D proj = project_model(model, rot);
  const int M = half_width;
  const int side = 2 * M + 1;

  ProjectionImage img;
  img.half_width = M;
  img.delta = delta;
  img.truth = rot;
  img.pixels.assign(static_cast<size_t>(side) * side, 0.0);

  // separable erf factors per source and axis
  std::vector<double> fx(side), fy(side);
  for (const auto& src : proj.sources) {
    for (int u = -M; u <= M; ++u)
      fx[u + M] = gauss_cell((u - 0.5) * delta, (u + 0.5) * delta, src.x,
                             proj.sigma);
    for (int v = -M; v <= M; ++v)
      fy[v + M] = gauss_cell((v - 0.5) * delta, (v + 0.5) * delta, src.y,
                             proj.sigma);
    for (int v = 0; v < side; ++v) {
      const double fym = src.mass * fy[v];
      double* row = &img.pixels[static_cast<size_t>(v) * side];
      for (int u = 0; u < side; ++u) row[u] += fym * fx[u];
    }
  }
  return img;
}

double sigma_for_snr(const PointSourceModel& model, int half_width,
                     double delta, double target_snr, int n_calibration,
                     RngStream& rng) {
  if (target_snr <= 0)
    throw std::invalid_argument("sigma_for_snr: target_snr must be > 0");
  if (std::isinf(target_snr)) return 0.0;
  double power = 0.0;
  long n_pix = 0;
  for (int i = 0; i < n_calibration; ++i) {
    const Rotation rot = sample_uniform_rotation(rng);
    const ProjectionImage img = render(model, rot, half_width, delta);
    for (double p : img.pixels) power += p * p;
    n_pix += static_cast<long>(img.pixels.size());
  }
  return std::sqrt(power / static_cast<double>(n_pix) / target_snr);
}

ProjectionStack simulate_stack(const PointSourceModel& model, long L,
                               int half_width, double delta, double snr,
                               std::uint64_t seed, int workers) {
  if (L < 1) throw std::invalid_argument("simulate_stack: L must be >= 1");

  ProjectionStack stack;
  stack.half_width = half_width;
  stack.delta = delta;
  stack.requested_snr = snr;
  stack.seed = seed;
  if (std::isinf(snr)) {
    stack.noise_sigma = 0.0;
  } else {
    RngStream cal(seed, kCalibrationStream);
    stack.noise_sigma = sigma_for_snr(model, half_width, delta, snr, 256, cal);
  }

  stack.images.resize(L);
  const double sigma = stack.noise_sigma;
  parallel_chunks(L, 256, workers, [&](long, long begin, long end) {
    for (long l = begin; l < end; ++l) {
      RngStream rng(seed, kImageStreamBase + static_cast<std::uint64_t>(l));
      const Rotation rot = sample_uniform_rotation(rng);
      ProjectionImage img = render(model, rot, half_width, delta);
      if (sigma > 0)
        for (double& p : img.pixels) p += sigma * rng.normal();
      stack.images[l] = std::move(img);
    }
  });
  return stack;
}

double mean_pixel_power(const ProjectionStack& stack) {
  double power = 0.0;
  long n = 0;
  for (const auto& img : stack.images) {
    for (double p : img.pixels) power += p * p;
    n += static_cast<long>(img.pixels.size());
  }
  return n ? power / static_cast<double>(n) : 0.0;
}

namespace {

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void write_stack(const std::string& path, const ProjectionStack& stack) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write("UVTS", 4);
  put<std::uint32_t>(f, 1);  // version
  put<std::uint32_t>(f, static_cast<std::uint32_t>(stack.L()));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(stack.half_width));
  put<double>(f, stack.delta);
  put<double>(f, stack.noise_sigma);
  put<std::uint64_t>(f, stack.seed);
  std::vector<float> frame;
  for (const auto& img : stack.images) {
    frame.assign(img.pixels.begin(), img.pixels.end());
    f.write(reinterpret_cast<const char*>(frame.data()),
            static_cast<std::streamsize>(frame.size() * sizeof(float)));
  }
  if (!f) throw IoError("write failed: " + path);
}

ProjectionStack read_stack(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "UVTS", 4) != 0)
    throw IoError("not a UVTS stack: " + path);
  const auto version = get<std::uint32_t>(f);
  if (version != 1) throw IoError("unsupported UVTS version");
  const auto L = get<std::uint32_t>(f);
  const auto M = get<std::uint32_t>(f);

  ProjectionStack stack;
  stack.half_width = static_cast<int>(M);
  stack.delta = get<double>(f);
  stack.noise_sigma = get<double>(f);
  stack.seed = get<std::uint64_t>(f);
  const int side = 2 * stack.half_width + 1;
  const size_t n_pix = static_cast<size_t>(side) * side;
  std::vector<float> frame(n_pix);
  stack.images.resize(L);
  for (std::uint32_t l = 0; l < L; ++l) {
    f.read(reinterpret_cast<char*>(frame.data()),
           static_cast<std::streamsize>(n_pix * sizeof(float)));
    if (!f) throw IoError("truncated UVTS stack: " + path);
    auto& img = stack.images[l];
    img.half_width = stack.half_width;
    img.delta = stack.delta;
    img.pixels.assign(frame.begin(), frame.end());
  }
  return stack;
}

void write_frame_csv(const std::string& path, const ProjectionImage& image) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "u,v,value\n";
  const int M = image.half_width;
  for (int v = -M; v <= M; ++v)
    for (int u = -M; u <= M; ++u)
      f << u << ',' << v << ',' << image.at(u, v) << '\n';
}

}  // namespace uvt
