#include "uvt/eval.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace uvt {

namespace {

// Best orthogonal Q (det free) minimizing sum |Q a_n - b_n|^2 is U V^T from
// the SVD of H = sum b_n a_n^T.
Mat3 procrustes(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                const std::vector<int>& perm) {
  Mat3 h = Mat3::Zero();
  for (size_t n = 0; n < b.size(); ++n) h += b[n] * a[perm[n]].transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

Alignment align(const std::vector<Vec3>& est, const std::vector<Vec3>& truth,
                double voxel_size) {
  const int K = static_cast<int>(truth.size());
  if (static_cast<int>(est.size()) != K)
    throw std::invalid_argument("align: point count mismatch");
  if (K < 1) throw std::invalid_argument("align: empty point set");
  if (K > 8) throw std::invalid_argument("align: K > 8 not supported");
  if (voxel_size <= 0) throw std::invalid_argument("align: bad voxel size");

  Alignment best;
  best.rmsd = std::numeric_limits<double>::infinity();
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    const Mat3 q = procrustes(est, truth, perm);
    double ss = 0.0;
    for (int n = 0; n < K; ++n) ss += (q * est[perm[n]] - truth[n]).squaredNorm();
    const double rmsd = std::sqrt(ss / K) / voxel_size;
    // strict improvement keeps the lexicographically smallest permutation
    if (rmsd < best.rmsd) {
      best.rmsd = rmsd;
      best.orthogonal = q;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool classify(const Alignment& alignment, double threshold) {
  return alignment.rmsd < threshold;
}

std::string evaluation_report_json(const std::vector<Vec3>& est,
                                   const std::vector<Vec3>& truth,
                                   const Alignment& alignment,
                                   double threshold) {
  nlohmann::json j;
  auto points = [](const std::vector<Vec3>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Vec3& p : pts) arr.push_back({p.x(), p.y(), p.z()});
    return arr;
  };
  j["est_centers"] = points(est);
  j["truth_centers"] = points(truth);
  j["permutation"] = alignment.permutation;
  nlohmann::json q = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    q.push_back({alignment.orthogonal(r, 0), alignment.orthogonal(r, 1),
                 alignment.orthogonal(r, 2)});
  j["orthogonal"] = q;
  j["rmsd"] = alignment.rmsd;
  j["threshold"] = threshold;
  j["success"] = classify(alignment, threshold);
  return j.dump(2) + "\n";
}

}  // namespace uvt
