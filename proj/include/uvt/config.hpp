#ifndef UVT_CONFIG_HPP
#define UVT_CONFIG_HPP

#include <cstdint>
#include <string>

#include "uvt/recon.hpp"

namespace uvt {

// Flat experiment configuration. Lengths are in box units (the model lives
// in [-1/2, 1/2]^3), frequencies in radians per box unit. Zero means
// "derive the default": cutoff -> pi/(2 delta), min_separation -> 4 sigma,
// delta_t -> voxel size. snr <= 0 means noiseless.
struct ExperimentConfig {
  // model
  int K = 3;
  double kernel_sigma = 0.05;
  double min_separation = 0.0;

  // acquisition
  long L = 1000;
  int M = 50;
  double delta = 0.01;
  double snr = 0.0;

  // features
  int n_k = 200;
  int n_phi = 200;
  double cutoff = 0.0;
  int t_count = 256;
  double t_max = 1.7320508075688772;
  bool debias = true;

  // reconstruction
  int m_r = 5;
  double delta_t = 0.0;
  SolverOptions solver;

  double threshold = 10.0;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int workers = 1;

  double resolved_cutoff() const;
  double resolved_min_separation() const;
  double voxel_size() const { return 0.5 / m_r; }
  double resolved_delta_t() const;

  // throws std::invalid_argument with the offending key
  void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
void save_config(const std::string& path, const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

}  // namespace uvt

#endif
