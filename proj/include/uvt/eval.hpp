#ifndef UVT_EVAL_HPP
#define UVT_EVAL_HPP

#include <string>
#include <vector>

#include "uvt/model.hpp"

namespace uvt {

struct Alignment {
  Mat3 orthogonal = Mat3::Identity();  // det +-1, applied to est
  std::vector<int> permutation;        // truth n is matched to est[perm[n]]
  double rmsd = 0.0;                   // voxel units
};

// Exhaustive search over the K! point matchings; for each, the orthogonal
// Procrustes problem (no translation, reflections allowed) is solved in
// closed form via the SVD of the cross-covariance. K <= 8.
Alignment align(const std::vector<Vec3>& est, const std::vector<Vec3>& truth,
                double voxel_size);

constexpr double kDefaultRmsdThreshold = 10.0;

// success iff rmsd < threshold, strictly
bool classify(const Alignment& alignment,
              double threshold = kDefaultRmsdThreshold);

std::string evaluation_report_json(const std::vector<Vec3>& est,
                                   const std::vector<Vec3>& truth,
                                   const Alignment& alignment,
                                   double threshold);

}  // namespace uvt

#endif
