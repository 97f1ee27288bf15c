#include "uvt/recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>
#include "uvt/errors.hpp"

namespace uvt {

Vec3 VoxelGrid::center(long idx) const {
  int ix, iy, iz;
  coords(idx, ix, iy, iz);
  return Vec3(ix, iy, iz) * voxel_size;
}

void VoxelGrid::coords(long idx, int& ix, int& iy, int& iz) const {
  const long s = side();
  ix = static_cast<int>(idx % s) - half_width;
  iy = static_cast<int>((idx / s) % s) - half_width;
  iz = static_cast<int>(idx / (s * s)) - half_width;
}

DistanceOperators build_operators(const VoxelGrid& grid, double bin_width) {
  if (bin_width <= 0)
    throw std::invalid_argument("build_operators: bin width must be > 0");
  DistanceOperators ops;
  ops.grid = grid;
  ops.bin_width = bin_width;

  const long n = grid.n();
  std::vector<Vec3> centers(n);
  for (long i = 0; i < n; ++i) centers[i] = grid.center(i);

  ops.radial_bin.resize(n);
  int max_rb = 0;
  for (long i = 0; i < n; ++i) {
    const int b = static_cast<int>(std::lround(centers[i].norm() / bin_width));
    ops.radial_bin[i] = b;
    max_rb = std::max(max_rb, b);
  }
  ops.n_radial_bins = max_rb + 1;
  ops.radial_members.assign(ops.n_radial_bins, {});
  for (long i = 0; i < n; ++i) ops.radial_members[ops.radial_bin[i]].push_back(i);

  const long n_pairs = n * (n - 1) / 2;
  ops.pair_i.reserve(n_pairs);
  ops.pair_j.reserve(n_pairs);
  ops.pair_bin.reserve(n_pairs);
  int max_pb = 0;
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      const double d = (centers[i] - centers[j]).norm();
      const int b = static_cast<int>(std::lround(d / bin_width));
      max_pb = std::max(max_pb, b);
      ops.pair_i.push_back(static_cast<std::uint32_t>(i));
      ops.pair_j.push_back(static_cast<std::uint32_t>(j));
      ops.pair_bin.push_back(static_cast<std::uint16_t>(b));
    }
  }
  ops.n_pair_bins = std::max(max_pb + 1, 1);
  return ops;
}

namespace {

// Integral of the piecewise-linear interpolant of (t, v) over [lo, hi].
double curve_integral(const std::vector<double>& t, const std::vector<double>& v,
                      double lo, double hi) {
  if (hi <= lo || t.size() < 2) return 0.0;
  double acc = 0.0;
  for (size_t s = 0; s + 1 < t.size(); ++s) {
    const double a = std::max(lo, t[s]);
    const double b = std::min(hi, t[s + 1]);
    if (b <= a) continue;
    const double dt = t[s + 1] - t[s];
    const double va = v[s] + (v[s + 1] - v[s]) * (a - t[s]) / dt;
    const double vb = v[s] + (v[s + 1] - v[s]) * (b - t[s]) / dt;
    acc += 0.5 * (va + vb) * (b - a);
  }
  return acc;
}

std::vector<double> bin_curve(const FeatureCurve& curve, int n_bins,
                              double bin_width) {
  std::vector<double> out(n_bins, 0.0);
  for (int b = 0; b < n_bins; ++b) {
    const double lo = std::max(0.0, (b - 0.5) * bin_width);
    const double hi = (b + 0.5) * bin_width;
    out[b] = std::max(0.0, curve_integral(curve.t, curve.values, lo, hi));
  }
  return out;
}

void rescale_to(std::vector<double>& v, double total) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s <= 0.0)
    throw std::runtime_error("discretize_targets: nonpositive target mass");
  for (double& x : v) x *= total / s;
}

}  // namespace

Targets discretize_targets(const FeatureCurve& mu, const FeatureCurve& c,
                           const DistanceOperators& ops, double K) {
  const double t_needed =
      (std::max(ops.n_radial_bins, ops.n_pair_bins) - 0.5) * ops.bin_width;
  if (mu.t.back() < (ops.n_radial_bins - 0.5) * ops.bin_width - 1e-9 ||
      c.t.back() < t_needed - 1e-9) {
    // tolerate curves that stop at the box diameter; anything shorter is an
    // input error
  }
  Targets out;
  out.radial = bin_curve(mu, ops.n_radial_bins, ops.bin_width);
  out.pair = bin_curve(c, ops.n_pair_bins, ops.bin_width);
  rescale_to(out.radial, K);
  rescale_to(out.pair, K * K);
  return out;
}

std::vector<double> quadratic_form(const std::vector<double>& phi,
                                   const DistanceOperators& ops) {
  std::vector<double> q(ops.n_pair_bins, 0.0);
  const size_t np = ops.pair_i.size();
  for (size_t p = 0; p < np; ++p)
    q[ops.pair_bin[p]] += phi[ops.pair_i[p]] * phi[ops.pair_j[p]];
  for (double& x : q) x *= 2.0;
  double diag = 0.0;
  for (double x : phi) diag += x * x;
  q[0] += diag;
  return q;
}

double udgp_objective(const std::vector<double>& q,
                      const std::vector<double>& pair_targets) {
  double f = 0.0;
  for (size_t b = 0; b < q.size(); ++b) {
    const double d = pair_targets[b] - q[b];
    f += d * d;
  }
  return f;
}

std::vector<double> udgp_gradient(const std::vector<double>& phi,
                                  const std::vector<double>& q,
                                  const std::vector<double>& pair_targets,
                                  const DistanceOperators& ops) {
  std::vector<double> coef(q.size());
  for (size_t b = 0; b < q.size(); ++b) coef[b] = -4.0 * (pair_targets[b] - q[b]);
  std::vector<double> g(phi.size(), 0.0);
  const size_t np = ops.pair_i.size();
  for (size_t p = 0; p < np; ++p) {
    const double cb = coef[ops.pair_bin[p]];
    const auto i = ops.pair_i[p];
    const auto j = ops.pair_j[p];
    g[i] += cb * phi[j];
    g[j] += cb * phi[i];
  }
  for (size_t i = 0; i < phi.size(); ++i) g[i] += coef[0] * phi[i];
  return g;
}

namespace {

// Euclidean projection of v onto {x >= 0, sum x = mass} by sorted threshold.
void simplex_project(std::vector<double>& v, double mass) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double tau = 0.0;
  for (size_t r = 0; r < u.size(); ++r) {
    css += u[r];
    const double cand = (css - mass) / static_cast<double>(r + 1);
    if (u[r] - cand > 0) tau = cand;
  }
  for (double& x : v) x = std::max(0.0, x - tau);
}

}  // namespace

std::vector<double> project_constraints(const std::vector<double>& phi,
                                        const std::vector<double>& radial_targets,
                                        const DistanceOperators& ops) {
  std::vector<double> out(phi.size(), 0.0);
  std::vector<double> sub;
  for (int b = 0; b < ops.n_radial_bins; ++b) {
    const double target =
        b < static_cast<int>(radial_targets.size()) ? radial_targets[b] : 0.0;
    const auto& members = ops.radial_members[b];
    if (members.empty()) continue;
    if (target <= 0.0) continue;  // zeroed bin
    sub.resize(members.size());
    for (size_t m = 0; m < members.size(); ++m) sub[m] = phi[members[m]];
    simplex_project(sub, target);
    for (size_t m = 0; m < members.size(); ++m) out[members[m]] = sub[m];
  }
  return out;
}

std::vector<double> spectral_init(const std::vector<double>& pair_targets,
                                  const std::vector<double>& radial_targets,
                                  const DistanceOperators& ops, RngStream& rng) {
  const long n = ops.grid.n();
  std::vector<double> v(n), w(n);
  for (long i = 0; i < n; ++i) v[i] = rng.normal();
  const size_t np = ops.pair_i.size();
  for (int iter = 0; iter < 200; ++iter) {
    std::fill(w.begin(), w.end(), 0.0);
    for (size_t p = 0; p < np; ++p) {
      const double cb = pair_targets[ops.pair_bin[p]];
      const auto i = ops.pair_i[p];
      const auto j = ops.pair_j[p];
      w[i] += cb * v[j];
      w[j] += cb * v[i];
    }
    const double c0 = pair_targets[0];
    for (long i = 0; i < n; ++i) w[i] += c0 * v[i];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (long i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  for (double& x : v) x = std::abs(x);
  return project_constraints(v, radial_targets, ops);
}

SolveResult pgd_solve(const std::vector<double>& init,
                      const std::vector<double>& pair_targets,
                      const std::vector<double>& radial_targets,
                      const DistanceOperators& ops, const SolverOptions& opts) {
  SolveResult best;
  best.objective = std::numeric_limits<double>::infinity();
  int completed = 0;

  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    std::vector<double> phi;
    if (restart == 0) {
      phi = project_constraints(init, radial_targets, ops);
    } else {
      RngStream rng(opts.seed, kRestartStreamBase + restart);
      phi = spectral_init(pair_targets, radial_targets, ops, rng);
    }

    std::vector<double> q = quadratic_form(phi, ops);
    double f = udgp_objective(q, pair_targets);
    double target_scale = 0.0;
    for (double c : pair_targets) target_scale = std::max(target_scale, std::abs(c));
    double step = opts.step_size / std::max(1.0, target_scale);

    std::vector<TraceRow> trace;
    trace.push_back({0, f, step});
    bool aborted = false;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
      const std::vector<double> g = udgp_gradient(phi, q, pair_targets, ops);
      std::vector<double> cand;
      std::vector<double> qc;
      double fc = f;
      bool accepted = false;
      while (step >= 1e-8 * opts.step_size) {
        std::vector<double> raw(phi.size());
        for (size_t i = 0; i < phi.size(); ++i) raw[i] = phi[i] - step * g[i];
        cand = project_constraints(raw, radial_targets, ops);
        qc = quadratic_form(cand, ops);
        fc = udgp_objective(qc, pair_targets);
        if (!std::isfinite(fc)) {
          aborted = true;
          break;
        }
        if (fc <= f + 1e-9) {
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      if (aborted || !accepted) break;
      const double rel_change = (f - fc) / std::max(f, 1e-300);
      phi.swap(cand);
      q.swap(qc);
      f = fc;
      trace.push_back({iter, f, step});
      step /= opts.backtrack;  // allow the step to grow back
      if (rel_change < opts.tolerance) break;
    }

    if (aborted) continue;
    ++completed;
    if (f < best.objective) {
      best.objective = f;
      best.phi = std::move(phi);
      best.best_restart = restart;
      best.trace = std::move(trace);
    }
  }

  if (completed == 0)
    throw std::runtime_error("pgd_solve: all restarts hit non-finite objectives");
  return best;
}

namespace {

struct Component {
  std::vector<long> voxels;
  double mass = 0.0;
  long min_voxel = std::numeric_limits<long>::max();
};

std::vector<Component> connected_components(const std::vector<double>& phi,
                                            const VoxelGrid& grid,
                                            double threshold) {
  const long n = grid.n();
  std::vector<char> occupied(n, 0);
  for (long i = 0; i < n; ++i) occupied[i] = phi[i] >= threshold;
  std::vector<char> seen(n, 0);
  std::vector<Component> comps;
  const int M = grid.half_width;
  std::deque<long> queue;
  for (long start = 0; start < n; ++start) {
    if (!occupied[start] || seen[start]) continue;
    Component comp;
    seen[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const long i = queue.front();
      queue.pop_front();
      comp.voxels.push_back(i);
      comp.mass += phi[i];
      comp.min_voxel = std::min(comp.min_voxel, i);
      int ix, iy, iz;
      grid.coords(i, ix, iy, iz);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const int jx = ix + dx, jy = iy + dy, jz = iz + dz;
            if (std::abs(jx) > M || std::abs(jy) > M || std::abs(jz) > M)
              continue;
            const long j = grid.index(jx, jy, jz);
            if (occupied[j] && !seen[j]) {
              seen[j] = 1;
              queue.push_back(j);
            }
          }
    }
    comps.push_back(std::move(comp));
  }
  return comps;
}

// deterministic weighted 2-means on voxel centers
std::pair<Component, Component> split_component(const Component& comp,
                                                const std::vector<double>& phi,
                                                const VoxelGrid& grid) {
  // seed with the farthest voxel pair
  long a = comp.voxels[0], b = comp.voxels[0];
  double far2 = -1.0;
  for (long i : comp.voxels)
    for (long j : comp.voxels) {
      const double d2 = (grid.center(i) - grid.center(j)).squaredNorm();
      if (d2 > far2) {
        far2 = d2;
        a = i;
        b = j;
      }
    }
  Vec3 ca = grid.center(a), cb = grid.center(b);
  std::vector<char> label(comp.voxels.size(), 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (size_t m = 0; m < comp.voxels.size(); ++m) {
      const Vec3 c = grid.center(comp.voxels[m]);
      const char want = (c - ca).squaredNorm() <= (c - cb).squaredNorm() ? 0 : 1;
      if (want != label[m]) {
        label[m] = want;
        changed = true;
      }
    }
    Vec3 sa = Vec3::Zero(), sb = Vec3::Zero();
    double wa = 0.0, wb = 0.0;
    for (size_t m = 0; m < comp.voxels.size(); ++m) {
      const long i = comp.voxels[m];
      if (label[m] == 0) {
        sa += phi[i] * grid.center(i);
        wa += phi[i];
      } else {
        sb += phi[i] * grid.center(i);
        wb += phi[i];
      }
    }
    if (wa > 0) ca = sa / wa;
    if (wb > 0) cb = sb / wb;
    if (!changed) break;
  }
  Component first, second;
  for (size_t m = 0; m < comp.voxels.size(); ++m) {
    const long i = comp.voxels[m];
    Component& dst = (label[m] == 0) ? first : second;
    dst.voxels.push_back(i);
    dst.mass += phi[i];
    dst.min_voxel = std::min(dst.min_voxel, i);
  }
  if (first.voxels.empty() || second.voxels.empty()) {
    // degenerate split: peel off the single heaviest voxel
    first = Component{};
    second = Component{};
    long heaviest = comp.voxels[0];
    for (long i : comp.voxels)
      if (phi[i] > phi[heaviest]) heaviest = i;
    for (long i : comp.voxels) {
      Component& dst = (i == heaviest) ? second : first;
      dst.voxels.push_back(i);
      dst.mass += phi[i];
      dst.min_voxel = std::min(dst.min_voxel, i);
    }
  }
  return {std::move(first), std::move(second)};
}

}  // namespace

std::vector<Vec3> extract_centers(const std::vector<double>& phi,
                                  const VoxelGrid& grid, int K) {
  double peak = 0.0;
  for (double x : phi) peak = std::max(peak, x);
  if (peak <= 0.0)
    throw std::invalid_argument("extract_centers: density is identically zero");

  auto by_mass = [](const Component& a, const Component& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return a.min_voxel < b.min_voxel;
  };

  std::vector<Component> comps = connected_components(phi, grid, 0.2 * peak);
  std::sort(comps.begin(), comps.end(), by_mass);
  if (static_cast<int>(comps.size()) > K) comps.resize(K);
  while (static_cast<int>(comps.size()) < K) {
    // split the heaviest splittable component
    size_t target = comps.size();
    for (size_t i = 0; i < comps.size(); ++i)
      if (comps[i].voxels.size() > 1) {
        target = i;
        break;
      }
    if (target == comps.size())
      throw std::runtime_error("extract_centers: cannot split into K blobs");
    auto [a, b] = split_component(comps[target], phi, grid);
    comps.erase(comps.begin() + target);
    comps.push_back(std::move(a));
    comps.push_back(std::move(b));
    std::sort(comps.begin(), comps.end(), by_mass);
  }

  std::vector<Vec3> centers;
  centers.reserve(K);
  for (const auto& comp : comps) {
    Vec3 c = Vec3::Zero();
    for (long i : comp.voxels) c += phi[i] * grid.center(i);
    centers.push_back(c / comp.mass);
  }
  return centers;
}

void write_density(const std::string& path, const std::vector<double>& phi,
                   const VoxelGrid& grid) {
  if (static_cast<long>(phi.size()) != grid.n())
    throw std::invalid_argument("write_density: size mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write("UVTV", 4);
  const std::uint32_t version = 1, mr = grid.half_width;
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&mr), 4);
  f.write(reinterpret_cast<const char*>(&grid.voxel_size), 8);
  std::vector<float> vals(phi.begin(), phi.end());
  f.write(reinterpret_cast<const char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (!f) throw IoError("write failed: " + path);
}

std::pair<std::vector<double>, VoxelGrid> read_density(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "UVTV", 4) != 0)
    throw IoError("not a UVTV density: " + path);
  std::uint32_t version = 0, mr = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  if (version != 1) throw IoError("unsupported UVTV version");
  f.read(reinterpret_cast<char*>(&mr), 4);
  VoxelGrid grid;
  grid.half_width = static_cast<int>(mr);
  f.read(reinterpret_cast<char*>(&grid.voxel_size), 8);
  std::vector<float> vals(grid.n());
  f.read(reinterpret_cast<char*>(vals.data()),
         static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (!f) throw IoError("truncated UVTV density: " + path);
  return {std::vector<double>(vals.begin(), vals.end()), grid};
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRow>& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "iter,objective,step\n";
  f.precision(17);
  for (const auto& row : trace)
    f << row.iter << ',' << row.objective << ',' << row.step << '\n';
}

}  // namespace uvt
