#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "schurgan/matrix.hpp"
#include "schurgan/net.hpp"

namespace schurgan::metrics {

struct FeatureStats {
  std::vector<double> mean;
  Matrix cov;  // symmetric PSD
  std::size_t count = 0;
};

// Frozen seeded 3-layer conv stack with global average pooling, d = 64.
// A stand-in embedding: absolute distances are only comparable under the
// identical embedding seed.
Matrix feature_embed(const net::Tensor4& batch, std::uint64_t seed);

FeatureStats gaussian_stats(const Matrix& features);

// ||mu_r - mu_g||^2 + Tr(C_r + C_g - 2 (C_r C_g)^(1/2)), via the
// symmetrized product C_r^(1/2) C_g C_r^(1/2).
double frechet_distance(const FeatureStats& r, const FeatureStats& g);

struct GmmSpec {
  std::vector<std::pair<double, double>> centers;
  double sigma = 0.05;

  // ten modes on a circle, separated well beyond 6 sigma
  static GmmSpec ring(double radius = 2.0, double sigma = 0.05);
  void validate() const;
};

// n x 2 sample matrix, uniform component choice, isotropic noise.
Matrix gmm_sample(const GmmSpec& spec, std::size_t n, std::uint64_t seed);

struct ModeReport {
  std::size_t detected = 0;
  std::vector<std::size_t> per_mode;
};

// A sample is captured by its nearest center iff within
// capture_radius_mult * sigma; a mode is detected iff it captures at
// least min_fraction of all samples.
ModeReport count_modes(const Matrix& samples, const GmmSpec& spec,
                       double capture_radius_mult = 3.0, double min_fraction = 0.01);

}  // namespace schurgan::metrics
