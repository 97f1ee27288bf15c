#ifndef UVT_POLAR_FT_HPP
#define UVT_POLAR_FT_HPP

#include <complex>
#include <vector>

#include "uvt/forward.hpp"

namespace uvt {

// Polar frequency grid: Gauss-Legendre radial nodes on (0, cutoff] times
// uniform angles 2*pi*p/N_phi.
struct PolarGrid {
  std::vector<double> k_nodes;
  std::vector<double> k_weights;
  std::vector<double> angles;
  double cutoff = 0.0;

  int n_k() const { return static_cast<int>(k_nodes.size()); }
  int n_phi() const { return static_cast<int>(angles.size()); }
};

PolarGrid make_polar_grid(int n_k, int n_phi, double cutoff);

struct PolarSpectrum {
  int n_k = 0;
  int n_phi = 0;
  std::vector<std::complex<double>> values;  // [i * n_phi + p]

  std::complex<double>& at(int i, int p) { return values[i * n_phi + p]; }
  std::complex<double> at(int i, int p) const { return values[i * n_phi + p]; }
};

// value(k_i, phi_p) = Delta^2 * sum_{u,v} pixels[u,v]
//                     * exp(-i k_i (u Delta cos phi_p + v Delta sin phi_p))
// Reference evaluator; also the oracle the fast path is tested against.
PolarSpectrum polar_dft_direct(const ProjectionImage& image,
                               const PolarGrid& grid);

// Gridding evaluator: pixels are precompensated by the inverse Gaussian
// window, transformed by a zero-padded 2D FFT, and the polar samples are
// interpolated from the fine frequency grid with truncated Gaussian taps.
// Matches the direct sum to ~1e-11 relative. Complexity O(P^2 log P +
// N_k N_phi W^2) for padded side P vs O(N_k N_phi M^2) direct.
PolarSpectrum polar_dft_fast(const ProjectionImage& image,
                             const PolarGrid& grid);

// Dispatch: direct for images smaller than 32^2, gridding otherwise.
PolarSpectrum polar_dft(const ProjectionImage& image, const PolarGrid& grid);

}  // namespace uvt

#endif
