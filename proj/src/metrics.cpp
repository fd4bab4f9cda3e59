#include "schurgan/metrics.hpp"

#include <cmath>

#include "schurgan/linalg.hpp"
#include "schurgan/rng.hpp"

namespace schurgan::metrics {

namespace {
constexpr std::size_t kFeatureDim = 64;
constexpr double kPi = 3.141592653589793238462643383279;
}  // namespace

Matrix feature_embed(const net::Tensor4& batch, std::uint64_t seed) {
  if (batch.c != 1 || batch.h < 8 || batch.h != batch.w)
    throw std::invalid_argument("feature_embed: expected (n,1,side,side) with side >= 8");
  using namespace net;
  std::vector<LayerSpec> layers;
  layers.push_back(conv(1, 16, 3, 2, 1));
  layers.push_back(leaky_relu());
  layers.push_back(conv(16, 32, 3, 2, 1));
  layers.push_back(leaky_relu());
  layers.push_back(conv(32, kFeatureDim, 3, 2, 1));
  layers.push_back(leaky_relu());
  const Net embed(std::move(layers), 1, batch.h, batch.w);

  // Frozen weights: He-style scale keeps activations bounded.
  Rng rng = Rng::stream(seed, 0xFEA7);
  std::vector<float> params(embed.param_count(), 0.0f);
  for (const LayerSpec& l : embed.layers()) {
    if (l.kind != LayerKind::conv) continue;
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(l.in_ch * l.kernel * l.kernel));
    float* base = params.data() + l.param_offset;
    const std::size_t wcount = l.param_count - l.out_ch;
    for (std::size_t i = 0; i < wcount; ++i)
      base[i] = static_cast<float>(rng.normal(0.0, std_dev));
  }

  const Tensor4 out = embed.forward(params, batch);
  Matrix features(batch.n, kFeatureDim);
  const double denom = static_cast<double>(out.h * out.w);
  for (std::size_t i = 0; i < batch.n; ++i)
    for (std::size_t ch = 0; ch < kFeatureDim; ++ch) {
      double acc = 0.0;
      for (std::size_t y = 0; y < out.h; ++y)
        for (std::size_t x = 0; x < out.w; ++x) acc += out.at(i, ch, y, x);
      features(i, ch) = acc / denom;
    }
  return features;
}

FeatureStats gaussian_stats(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) throw std::invalid_argument("gaussian_stats: need at least 2 samples");
  FeatureStats st;
  st.count = n;
  st.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += features(i, j);
  for (double& v : st.mean) v /= static_cast<double>(n);
  st.cov = Matrix(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = features(i, a) - st.mean[a];
      for (std::size_t b = a; b < d; ++b)
        st.cov(a, b) += da * (features(i, b) - st.mean[b]);
    }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      st.cov(a, b) /= denom;
      st.cov(b, a) = st.cov(a, b);
    }
  return st;
}

double frechet_distance(const FeatureStats& r, const FeatureStats& g) {
  if (r.mean.size() != g.mean.size()) throw std::invalid_argument("frechet: dim mismatch");
  const std::size_t d = r.mean.size();
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = r.mean[i] - g.mean[i];
    mean_term += diff * diff;
  }
  const Matrix root_r = la::matrix_sqrt_psd(r.cov);
  Matrix inner = root_r * g.cov * root_r;
  inner = 0.5 * (inner + inner.transposed());
  const Matrix cross = la::matrix_sqrt_psd(inner);
  const double value = mean_term + trace(r.cov) + trace(g.cov) - 2.0 * trace(cross);
  if (value < -1e-6) throw std::runtime_error("frechet: strongly negative distance");
  return std::max(0.0, value);
}

GmmSpec GmmSpec::ring(double radius, double sigma) {
  GmmSpec spec;
  spec.sigma = sigma;
  for (int i = 0; i < 10; ++i) {
    const double ang = 2.0 * kPi * static_cast<double>(i) / 10.0;
    spec.centers.emplace_back(radius * std::cos(ang), radius * std::sin(ang));
  }
  spec.validate();
  return spec;
}

void GmmSpec::validate() const {
  if (centers.size() != 10) throw std::invalid_argument("gmm spec: exactly 10 centers");
  if (!(sigma > 0.0)) throw std::invalid_argument("gmm spec: sigma must be > 0");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      const double dx = centers[i].first - centers[j].first;
      const double dy = centers[i].second - centers[j].second;
      if (std::sqrt(dx * dx + dy * dy) <= 6.0 * sigma)
        throw std::invalid_argument("gmm spec: centers closer than 6 sigma");
    }
}

Matrix gmm_sample(const GmmSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gmm_sample: n must be >= 1");
  spec.validate();
  Rng rng = Rng::stream(seed, 0x63636);
  Matrix pts(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.below(spec.centers.size());
    pts(i, 0) = spec.centers[k].first + spec.sigma * rng.normal();
    pts(i, 1) = spec.centers[k].second + spec.sigma * rng.normal();
  }
  return pts;
}

ModeReport count_modes(const Matrix& samples, const GmmSpec& spec,
                       double capture_radius_mult, double min_fraction) {
  if (samples.rows() == 0 || samples.cols() != 2)
    throw std::invalid_argument("count_modes: expected non-empty n x 2 samples");
  spec.validate();
  ModeReport report;
  report.per_mode.assign(spec.centers.size(), 0);
  const double radius = capture_radius_mult * spec.sigma;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < spec.centers.size(); ++k) {
      const double dx = samples(i, 0) - spec.centers[k].first;
      const double dy = samples(i, 1) - spec.centers[k].second;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best_d <= radius) report.per_mode[best] += 1;
  }
  const double threshold = min_fraction * static_cast<double>(samples.rows());
  for (std::size_t c : report.per_mode)
    if (static_cast<double>(c) >= threshold && c > 0) report.detected += 1;
  return report;
}

}  // namespace schurgan::metrics
