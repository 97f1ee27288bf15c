#include "uvt/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include "uvt/errors.hpp"

namespace uvt {

bool Rotation::is_valid(double tol) const {
  const Mat3 err = m.transpose() * m - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

Rotation rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n == 0.0) throw std::invalid_argument("zero quaternion");
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Rotation r;
  r.m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

Rotation sample_uniform_rotation(RngStream& rng) {
  double q[4];
  double n2;
  do {
    for (double& v : q) v = rng.normal();
    n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
  } while (n2 == 0.0);
  return rotation_from_quaternion(q[0], q[1], q[2], q[3]);
}

double PointSourceModel::total_mass() const {
  double m = 0.0;
  for (double a : amplitudes) m += a;
  return m;
}

PointSourceModel PointSourceModel::rotated(const Rotation& r) const {
  PointSourceModel out = *this;
  for (auto& c : out.centers) c = r.apply(c);
  return out;
}

PointSourceModel random_model(int K, double min_separation, double kernel_sigma,
                              RngStream& rng) {
  if (K < 1) throw std::invalid_argument("random_model: K must be >= 1");
  if (min_separation < 0)
    throw std::invalid_argument("random_model: negative min_separation");
  if (kernel_sigma <= 0)
    throw std::invalid_argument("random_model: kernel_sigma must be positive");

  constexpr long kMaxDraws = 1000000;
  PointSourceModel model;
  model.kernel_sigma = kernel_sigma;
  model.seed = rng.seed();
  model.centers.reserve(K);
  long draws = 0;
  while (static_cast<int>(model.centers.size()) < K) {
    if (draws++ >= kMaxDraws)
      throw std::runtime_error(
          "random_model: rejection cap exceeded; min_separation infeasible");
    Vec3 c(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
           rng.uniform(-0.5, 0.5));
    bool ok = true;
    for (const auto& prev : model.centers) {
      if ((c - prev).norm() < min_separation) {
        ok = false;
        break;
      }
    }
    if (ok) model.centers.push_back(c);
  }
  model.amplitudes.assign(K, 1.0);
  return model;
}

DistanceLists radial_and_pairwise_distances(const PointSourceModel& model) {
  DistanceLists out;
  const int K = model.K();
  out.radial.reserve(K);
  for (const auto& c : model.centers) out.radial.push_back(c.norm());
  for (int n = 0; n < K; ++n)
    for (int m = n + 1; m < K; ++m)
      out.pairwise.push_back((model.centers[n] - model.centers[m]).norm());
  std::sort(out.radial.begin(), out.radial.end());
  std::sort(out.pairwise.begin(), out.pairwise.end());
  return out;
}

std::string model_to_json(const PointSourceModel& model) {
  nlohmann::json j;
  auto& centers = j["centers"];
  for (const auto& c : model.centers)
    centers.push_back({c.x(), c.y(), c.z()});
  j["kernel_sigma"] = model.kernel_sigma;
  j["amplitudes"] = model.amplitudes;
  j["seed"] = model.seed;
  return j.dump(2);
}

PointSourceModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
  PointSourceModel model;
  for (const auto& c : j.at("centers"))
    model.centers.emplace_back(c.at(0).get<double>(), c.at(1).get<double>(),
                               c.at(2).get<double>());
  model.kernel_sigma = j.at("kernel_sigma").get<double>();
  if (j.contains("amplitudes"))
    model.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  else
    model.amplitudes.assign(model.centers.size(), 1.0);
  if (j.contains("seed")) model.seed = j.at("seed").get<std::uint64_t>();
  if (model.amplitudes.size() != model.centers.size())
    throw std::runtime_error("model json: amplitude/center count mismatch");
  return model;
}

void save_model(const std::string& path, const PointSourceModel& model) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << model_to_json(model) << "\n";
}

PointSourceModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace uvt
