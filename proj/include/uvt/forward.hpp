#ifndef UVT_FORWARD_HPP
#define UVT_FORWARD_HPP

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uvt/model.hpp"

namespace uvt {

// A projected Gaussian mixture in the image plane. An isotropic 3D Gaussian
// integrates along z to an isotropic 2D Gaussian of the same width and mass.
struct ProjectedSource {
  double x, y;
  double mass;
};

struct Projected2D {
  std::vector<ProjectedSource> sources;
  double sigma;
};

Projected2D project_model(const PointSourceModel& model, const Rotation& rot);

// Square image with odd side 2M+1, pixels indexed u,v in {-M..M}.
// Pixel [u,v] covers [(u-1/2)Delta, (u+1/2)Delta] x [(v-1/2)Delta, (v+1/2)Delta].
struct ProjectionImage {
  int half_width = 0;  // M
  double delta = 0.0;
  std::vector<double> pixels;  // row-major, u fastest
  std::optional<Rotation> truth;  // simulation-only metadata

  int side() const { return 2 * half_width + 1; }
  double& at(int u, int v) {
    return pixels[(v + half_width) * side() + (u + half_width)];
  }
  double at(int u, int v) const {
    return pixels[(v + half_width) * side() + (u + half_width)];
  }
  double pixel_sum() const;
};

// Exact pixel integrals of the projected mixture: per source and axis, a
// difference of error functions.
ProjectionImage render(const PointSourceModel& model, const Rotation& rot,
                       int half_width, double delta);

struct ProjectionStack {
  std::vector<ProjectionImage> images;
  int half_width = 0;
  double delta = 0.0;
  double noise_sigma = 0.0;
  double requested_snr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  long L() const { return static_cast<long>(images.size()); }
};

constexpr double kSnrInfinite = std::numeric_limits<double>::infinity();

// Noise level for a target SNR (clean power / noise variance), estimated by
// averaging clean pixel power over n_calibration random orientations.
double sigma_for_snr(const PointSourceModel& model, int half_width,
                     double delta, double target_snr, int n_calibration,
                     RngStream& rng);

// L images, each with an independent Haar rotation and iid Gaussian pixel
// noise. Image l draws from stream (seed, kImageStreamBase + l), so the
// result is independent of worker count and order.
ProjectionStack simulate_stack(const PointSourceModel& model, long L,
                               int half_width, double delta, double snr,
                               std::uint64_t seed, int workers = 1);

// Mean squared pixel value over the stack.
double mean_pixel_power(const ProjectionStack& stack);

constexpr std::uint64_t kCalibrationStream = 2;
constexpr std::uint64_t kImageStreamBase = 1000;

// Binary stack format, little-endian:
//   magic "UVTS", version u32, L u32, M u32, Delta f64, sigma f64, seed u64,
//   then L frames of (2M+1)^2 f32 pixels row-major (u fastest).
void write_stack(const std::string& path, const ProjectionStack& stack);
ProjectionStack read_stack(const std::string& path);

void write_frame_csv(const std::string& path, const ProjectionImage& image);

}  // namespace uvt

#endif
