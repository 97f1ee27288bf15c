#ifndef UVT_RECON_HPP
#define UVT_RECON_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "uvt/features.hpp"
#include "uvt/model.hpp"

namespace uvt {

// Cubic voxel grid of side 2*half_width+1 centered on the origin; voxel
// (ix,iy,iz) in [-M_r, M_r]^3 sits at index*voxel_size.
struct VoxelGrid {
  int half_width = 0;  // M_r
  double voxel_size = 0.0;

  int side() const { return 2 * half_width + 1; }
  long n() const {
    const long s = side();
    return s * s * s;
  }
  long index(int ix, int iy, int iz) const {
    const long s = side();
    return ((iz + half_width) * s + (iy + half_width)) * s + (ix + half_width);
  }
  Vec3 center(long idx) const;
  void coords(long idx, int& ix, int& iy, int& iz) const;
};

// Distance-binned measurement operators. Voxels partition into radial bins
// by round(|o_i| / bin_width); ordered voxel pairs partition into pair bins
// by round(|o_i - o_j| / bin_width), with the diagonal in bin 0. Pairs are
// stored once (i < j) and count twice in the quadratic form.
struct DistanceOperators {
  VoxelGrid grid;
  double bin_width = 0.0;
  int n_radial_bins = 0;
  int n_pair_bins = 0;

  std::vector<int> radial_bin;                  // per voxel
  std::vector<std::vector<long>> radial_members;  // per radial bin

  std::vector<std::uint32_t> pair_i;  // i < j
  std::vector<std::uint32_t> pair_j;
  std::vector<std::uint16_t> pair_bin;

  double bin_center(int b) const { return b * bin_width; }
};

DistanceOperators build_operators(const VoxelGrid& grid, double bin_width);

struct Targets {
  std::vector<double> radial;  // sums to K
  std::vector<double> pair;    // sums to K^2
};

// Bin-integrate the feature curves (trapezoid on their t-grid), clamp
// negatives, rescale to total mass K and K^2.
Targets discretize_targets(const FeatureCurve& mu, const FeatureCurve& c,
                           const DistanceOperators& ops, double K);

// q_b = phi^T E_b phi for every pair bin.
std::vector<double> quadratic_form(const std::vector<double>& phi,
                                   const DistanceOperators& ops);

double udgp_objective(const std::vector<double>& q,
                      const std::vector<double>& pair_targets);

// grad f = -4 sum_b (C_b - q_b) E_b phi
std::vector<double> udgp_gradient(const std::vector<double>& phi,
                                  const std::vector<double>& q,
                                  const std::vector<double>& pair_targets,
                                  const DistanceOperators& ops);

// Exact Euclidean projection onto {phi >= 0, sum over radial bin b = r_b}.
// The radial bins are disjoint, so the projection factorizes into one scaled
// simplex projection per bin (sorted-threshold method).
std::vector<double> project_constraints(const std::vector<double>& phi,
                                        const std::vector<double>& radial_targets,
                                        const DistanceOperators& ops);

// Power iteration (200 steps) on A = sum_b C_b E_b; elementwise absolute
// value of the leading eigenvector, projected onto the constraint set.
std::vector<double> spectral_init(const std::vector<double>& pair_targets,
                                  const std::vector<double>& radial_targets,
                                  const DistanceOperators& ops, RngStream& rng);

struct SolverOptions {
  int max_iters = 800;
  double step_size = 1e-2;
  double backtrack = 0.5;
  double tolerance = 1e-10;
  int restarts = 10;
  std::uint64_t seed = 0;
};

struct TraceRow {
  int iter;
  double objective;
  double step;
};

struct SolveResult {
  std::vector<double> phi;
  double objective = 0.0;
  int best_restart = -1;
  std::vector<TraceRow> trace;  // of the best restart
};

constexpr std::uint64_t kRestartStreamBase = 500000;

// Projected gradient descent with backtracking line search; the supplied
// init seeds restart 0, later restarts use fresh spectral initializations.
// Throws std::runtime_error if every restart hits a non-finite objective.
SolveResult pgd_solve(const std::vector<double>& init,
                      const std::vector<double>& pair_targets,
                      const std::vector<double>& radial_targets,
                      const DistanceOperators& ops, const SolverOptions& opts);

// Threshold at 0.2*max, 26-connected components, K largest by mass
// (ties broken by smallest voxel index), mass-weighted centroids. If fewer
// than K components survive, the heaviest is split by k-means.
std::vector<Vec3> extract_centers(const std::vector<double>& phi,
                                  const VoxelGrid& grid, int K);

// Binary density format: magic "UVTV", version u32, M_r u32, voxel f64,
// then (2M_r+1)^3 f32 values (x fastest).
void write_density(const std::string& path, const std::vector<double>& phi,
                   const VoxelGrid& grid);
std::pair<std::vector<double>, VoxelGrid> read_density(const std::string& path);

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace);

}  // namespace uvt

#endif
