#include "uvt/polar_ft.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "uvt/quadrature.hpp"

namespace uvt {

PolarGrid make_polar_grid(int n_k, int n_phi, double cutoff) {
  if (n_k < 2) throw std::invalid_argument("make_polar_grid: N_k must be >= 2");
  if (n_phi < 4)
    throw std::invalid_argument("make_polar_grid: N_phi must be >= 4");
  if (cutoff <= 0)
    throw std::invalid_argument("make_polar_grid: cutoff must be > 0");
  PolarGrid grid;
  const QuadratureRule rule = gauss_legendre(n_k, 0.0, cutoff);
  grid.k_nodes = rule.nodes;
  grid.k_weights = rule.weights;
  grid.cutoff = cutoff;
  grid.angles.resize(n_phi);
  for (int p = 0; p < n_phi; ++p)
    grid.angles[p] = 2.0 * std::numbers::pi * p / n_phi;
  return grid;
}

namespace {

void check_nyquist(const ProjectionImage& image, const PolarGrid& grid) {
  const double nyquist = std::numbers::pi / image.delta;
  if (grid.cutoff > nyquist * (1.0 + 1e-12))
    throw std::invalid_argument("polar_dft: grid cutoff exceeds Nyquist pi/Delta");
}

// ---- gridding fast path ----------------------------------------------------
//
// The spectrum of the image is evaluated exactly on a uniform fine frequency
// grid (zero-padded FFT), then interpolated at the polar targets with a
// truncated Gaussian window; the matching deconvolution is applied to the
// pixels before the FFT. Aliasing lives in the spatial domain and is
// controlled by the padding guard band, so accuracy is independent of Delta
// and of the cutoff.

constexpr double kAccuracyExponent = 25.0;  // e^-25 ~ 1.4e-11 target

int next_fast_size(int n) {
  for (;; ++n) {
    int m = n;
    while (m % 2 == 0) m /= 2;
    while (m % 3 == 0) m /= 3;
    while (m % 5 == 0) m /= 5;
    if (m == 1) return n;
  }
}

struct GriddingPlan {
  int side = 0;
  int n_fine = 0;
  int taps_half = 0;             // W
  double rho_norm = 0.0;         // rho * Delta^2 (dimensionless)
  std::vector<double> correction;  // per axis offset u in [-M, M]
  std::vector<double> tap_base;    // e^{-(j hf)^2 / (4 rho)}, j in [-W, W]
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;

  GriddingPlan(int side_, int n_fine_) : side(side_), n_fine(n_fine_) {
    const int M = (side - 1) / 2;
    const double A = kAccuracyExponent;
    // All quantities in units of Delta; they cancel in the final weights.
    const double period = n_fine;
    const double x_max = M + 0.5;
    rho_norm = A / (period * (period - 2.0 * x_max));
    const double hf = 2.0 * std::numbers::pi / period;  // times 1/Delta
    taps_half = static_cast<int>(std::ceil(
        std::sqrt(4.0 * rho_norm * (A + rho_norm * x_max * x_max)) / hf));
    correction.resize(side);
    const double norm = std::sqrt(rho_norm / std::numbers::pi);
    for (int u = -M; u <= M; ++u)
      correction[u + M] = std::exp(rho_norm * u * u) / norm;
    tap_base.resize(2 * taps_half + 1);
    for (int j = -taps_half; j <= taps_half; ++j)
      tap_base[j + taps_half] = std::exp(-(j * hf) * (j * hf) / (4.0 * rho_norm));
    buf = fftw_alloc_complex(static_cast<size_t>(n_fine) * n_fine);
    plan = fftw_plan_dft_2d(n_fine, n_fine, buf, buf, FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  ~GriddingPlan() {
    if (plan) fftw_destroy_plan(plan);
    if (buf) fftw_free(buf);
  }
  GriddingPlan(const GriddingPlan&) = delete;
  GriddingPlan& operator=(const GriddingPlan&) = delete;
};

GriddingPlan& plan_for(int side) {
  thread_local std::unordered_map<int, std::unique_ptr<GriddingPlan>> cache;
  auto& slot = cache[side];
  if (!slot) {
    // FFTW planning is not thread-safe; execution on private buffers is.
    static std::mutex plan_mutex;
    std::lock_guard<std::mutex> lock(plan_mutex);
    // small images need proportionally more padding or the window taps
    // cover most of the fine grid and wrap-around spoils the accuracy
    const int padded = side < 48 ? 4 * side : 2 * side;
    slot = std::make_unique<GriddingPlan>(side, next_fast_size(padded));
  }
  return *slot;
}

// Window taps around a target frequency component. kc is in units of the
// fine grid spacing hf; returns the base index m0 and fills taps[0..2W].
int axis_taps(const GriddingPlan& plan, double kc, double* taps) {
  const int W = plan.taps_half;
  const double hf = 2.0 * std::numbers::pi / plan.n_fine;
  const int m0 = static_cast<int>(std::lround(kc));
  const double dx = (kc - m0) * hf;  // in 1/Delta units
  const double a = std::exp(-dx * dx / (4.0 * plan.rho_norm));
  const double r = std::exp(dx * hf / (2.0 * plan.rho_norm));
  double rj = std::exp(-W * dx * hf / (2.0 * plan.rho_norm));
  for (int j = 0; j <= 2 * W; ++j) {
    taps[j] = a * rj * plan.tap_base[j];
    rj *= r;
  }
  return m0;
}

}  // namespace

PolarSpectrum polar_dft_fast(const ProjectionImage& image,
                             const PolarGrid& grid) {
  check_nyquist(image, grid);
  GriddingPlan& plan = plan_for(image.side());
  const int side = plan.side;
  const int M = (side - 1) / 2;
  const int nf = plan.n_fine;
  const int W = plan.taps_half;

  // deconvolved pixels placed periodically on the padded grid
  std::fill(reinterpret_cast<double*>(plan.buf),
            reinterpret_cast<double*>(plan.buf) + 2ull * nf * nf, 0.0);
  for (int v = -M; v <= M; ++v) {
    const int iv = (v + nf) % nf;
    const double cv = plan.correction[v + M];
    for (int u = -M; u <= M; ++u) {
      const int iu = (u + nf) % nf;
      plan.buf[static_cast<size_t>(iv) * nf + iu][0] =
          image.at(u, v) * plan.correction[u + M] * cv;
    }
  }
  fftw_execute(plan.plan);

  PolarSpectrum out;
  out.n_k = grid.n_k();
  out.n_phi = grid.n_phi();
  out.values.assign(static_cast<size_t>(out.n_k) * out.n_phi, {});

  const bool half = (out.n_phi % 2 == 0);
  const int p_lim = half ? out.n_phi / 2 : out.n_phi;
  const double hf_inv = plan.n_fine / (2.0 * std::numbers::pi);
  // scale: Delta^2 from the transform definition times (hf/2pi)^2 per axis,
  // with hf in physical units 2pi/(nf*Delta) -> Delta^2 / (nf*Delta)^2
  const double scale = 1.0 / (static_cast<double>(nf) * nf);

  std::vector<double> tx(2 * W + 1), ty(2 * W + 1);
  std::vector<int> ix(2 * W + 1), iy(2 * W + 1);
  // wrapped index table for a tap window starting at m0 - W
  auto wrap_indices = [&](int m0, int* idx) {
    int base = (m0 - W) % nf;
    if (base < 0) base += nf;
    const bool contiguous = base + 2 * W < nf;
    if (contiguous) {
      for (int j = 0; j <= 2 * W; ++j) idx[j] = base + j;
    } else {
      for (int j = 0; j <= 2 * W; ++j) {
        idx[j] = base + j >= nf ? base + j - nf : base + j;
      }
    }
    return contiguous;
  };
  for (int p = 0; p < p_lim; ++p) {
    const double c = std::cos(grid.angles[p]);
    const double s = std::sin(grid.angles[p]);
    for (int i = 0; i < out.n_k; ++i) {
      // components in units of hf; k*Delta is the dimensionless frequency
      const double kd = grid.k_nodes[i] * image.delta;
      const int m0x = axis_taps(plan, kd * c * hf_inv, tx.data());
      const int m0y = axis_taps(plan, kd * s * hf_inv, ty.data());
      const bool x_contiguous = wrap_indices(m0x, ix.data());
      wrap_indices(m0y, iy.data());
      double re = 0.0, im = 0.0;
      for (int j2 = 0; j2 <= 2 * W; ++j2) {
        const fftw_complex* row = plan.buf + static_cast<size_t>(iy[j2]) * nf;
        double rr = 0.0, ri = 0.0;
        if (x_contiguous) {
          const fftw_complex* cell = row + ix[0];
          for (int j1 = 0; j1 <= 2 * W; ++j1) {
            rr += tx[j1] * cell[j1][0];
            ri += tx[j1] * cell[j1][1];
          }
        } else {
          for (int j1 = 0; j1 <= 2 * W; ++j1) {
            rr += tx[j1] * row[ix[j1]][0];
            ri += tx[j1] * row[ix[j1]][1];
          }
        }
        re += ty[j2] * rr;
        im += ty[j2] * ri;
      }
      out.at(i, p) = {re * scale * image.delta * image.delta,
                      im * scale * image.delta * image.delta};
    }
  }
  if (half) {
    for (int p = 0; p < p_lim; ++p)
      for (int i = 0; i < out.n_k; ++i)
        out.at(i, p + p_lim) = std::conj(out.at(i, p));
  }
  return out;
}

PolarSpectrum polar_dft_direct(const ProjectionImage& image,
                               const PolarGrid& grid) {
  check_nyquist(image, grid);
  const int M = image.half_width;
  const double delta = image.delta;
  PolarSpectrum out;
  out.n_k = grid.n_k();
  out.n_phi = grid.n_phi();
  out.values.assign(static_cast<size_t>(out.n_k) * out.n_phi, {});
  for (int p = 0; p < out.n_phi; ++p) {
    const double cx = std::cos(grid.angles[p]) * delta;
    const double cy = std::sin(grid.angles[p]) * delta;
    for (int i = 0; i < out.n_k; ++i) {
      const double k = grid.k_nodes[i];
      std::complex<double> acc = 0.0;
      for (int v = -M; v <= M; ++v)
        for (int u = -M; u <= M; ++u) {
          const double phase = -k * (u * cx + v * cy);
          acc += image.at(u, v) *
                 std::complex<double>(std::cos(phase), std::sin(phase));
        }
      out.at(i, p) = acc * (delta * delta);
    }
  }
  return out;
}

PolarSpectrum polar_dft(const ProjectionImage& image, const PolarGrid& grid) {
  if (image.side() < 32) return polar_dft_direct(image, grid);
  return polar_dft_fast(image, grid);
}

}  // namespace uvt
