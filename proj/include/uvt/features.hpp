#ifndef UVT_FEATURES_HPP
#define UVT_FEATURES_HPP

#include <string>
#include <utility>
#include <vector>

#include "uvt/forward.hpp"
#include "uvt/polar_ft.hpp"

namespace uvt {

enum class BKind { B1, B2 };

// Angular average of the polar spectra over a stack: B1 averages the real
// part, B2 the squared magnitude.
struct BCurve {
  BKind kind = BKind::B1;
  std::vector<double> values;  // one per radial node
  PolarGrid grid;
  long n_images = 0;
};

enum class FeatureKind { Mean, Autocorrelation };

struct FeatureCurve {
  FeatureKind kind = FeatureKind::Mean;
  std::vector<double> t;
  std::vector<double> values;
};

std::vector<double> uniform_t_grid(int count, double t_max);

// B1(k_i) = (1 / (L N_phi)) sum_l sum_p Re s_hat_l(k_i, phi_p).
// Images are accumulated in fixed chunks of 1024 whose partial sums are
// combined in chunk order, so the result does not depend on worker count.
BCurve accumulate_b1(const ProjectionStack& stack, const PolarGrid& grid,
                     int workers = 1);

// B2(k_i) = (1 / (L N_phi)) sum_l sum_p |s_hat_l(k_i, phi_p)|^2, optionally
// debiased by the white-noise power sigma^2 Delta^4 (2M+1)^2.
BCurve accumulate_b2(const ProjectionStack& stack, const PolarGrid& grid,
                     bool debias, int workers = 1);

// Both curves from a single polar transform per image; identical to running
// accumulate_b1 and accumulate_b2 separately at half the cost.
std::pair<BCurve, BCurve> accumulate_b1_b2(const ProjectionStack& stack,
                                           const PolarGrid& grid, bool debias,
                                           int workers = 1);

double noise_bias_b2(const ProjectionStack& stack);

// value(t_j) = (2 t_j / pi) sum_i w(k_i) k_i b(k_i) sin(k_i t_j)
FeatureCurve sine_transform(const BCurve& b, const std::vector<double>& t_grid);

// Surface integral of a unit-mass isotropic 3D Gaussian of width s over the
// sphere of radius t centered a distance r from the Gaussian center.
double shell(double t, double r, double s);

// Closed-form mean and autocorrelation features of a Gaussian-source model:
//   mu(t) = sum_n a_n shell(t; |x_n|, sigma)
//   C(t)  = sum_{n,m} a_n a_m shell(t; |x_n - x_m|, sigma*sqrt(2))
std::pair<FeatureCurve, FeatureCurve> analytic_features(
    const PointSourceModel& model, const std::vector<double>& t_grid);

// |est - truth|_2 / |truth|_2; throws on mismatched t-grids.
double feature_error(const FeatureCurve& est, const FeatureCurve& truth);

double trapezoid_mass(const FeatureCurve& curve);

// Rescaled copy whose trapezoid integral equals target_mass.
FeatureCurve normalize_mass(const FeatureCurve& curve, double target_mass);

void write_bcurve_csv(const std::string& path, const BCurve& b);
void write_feature_csv(const std::string& path, const FeatureCurve& curve);
FeatureCurve read_feature_csv(const std::string& path, FeatureKind kind);

}  // namespace uvt

#endif
