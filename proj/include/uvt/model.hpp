#ifndef UVT_MODEL_HPP
#define UVT_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "uvt/rng.hpp"

namespace uvt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Proper rotation (element of SO(3)).
struct Rotation {
  Mat3 m = Mat3::Identity();

  Vec3 apply(const Vec3& x) const { return m * x; }
  bool is_valid(double tol = 1e-12) const;
};

Rotation rotation_from_quaternion(double w, double x, double y, double z);

// Haar-uniform rotation: normalized 4D Gaussian quaternion.
Rotation sample_uniform_rotation(RngStream& rng);

// Sum of K isotropic Gaussian blobs inside the unit box [-1/2, 1/2]^3.
// Each kernel is normalized to unit integral, so source n carries mass
// amplitudes[n].
struct PointSourceModel {
  std::vector<Vec3> centers;
  double kernel_sigma = 0.05;
  std::vector<double> amplitudes;
  std::uint64_t seed = 0;

  int K() const { return static_cast<int>(centers.size()); }
  double total_mass() const;
  PointSourceModel rotated(const Rotation& r) const;
};

// K centers uniform in the box, resampled until all pairwise distances are
// >= min_separation. Throws std::runtime_error if 10^6 draws are exhausted.
PointSourceModel random_model(int K, double min_separation, double kernel_sigma,
                              RngStream& rng);

struct DistanceLists {
  std::vector<double> radial;    // {|x_n|}, ascending
  std::vector<double> pairwise;  // {|x_n - x_m|, n < m}, ascending
};

DistanceLists radial_and_pairwise_distances(const PointSourceModel& model);

std::string model_to_json(const PointSourceModel& model);
PointSourceModel model_from_json(const std::string& text);
void save_model(const std::string& path, const PointSourceModel& model);
PointSourceModel load_model(const std::string& path);

}  // namespace uvt

#endif
