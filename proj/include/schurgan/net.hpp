#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "schurgan/rng.hpp"

namespace schurgan::net {

struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

// Batched activations, NCHW row-major.
struct Tensor4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, 0.0) {}

  std::size_t size() const { return data.size(); }
  std::size_t index(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) const {
    return ((in * c + ic) * h + iy) * w + ix;
  }
  double& at(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) {
    return data[index(in, ic, iy, ix)];
  }
  double at(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) const {
    return data[index(in, ic, iy, ix)];
  }
  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

enum class LayerKind : std::uint8_t {
  dense,
  conv,
  transposed_conv,
  batch_norm,
  relu,
  leaky_relu,
  tanh_act,
};

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t kernel = 0, stride = 1, pad = 0, out_pad = 0;
  std::size_t in_ch = 0, out_ch = 0;
  // dense reshapes its output to (out_ch, out_h, out_w)
  std::size_t out_h = 1, out_w = 1;
  double leaky_slope = 0.2;

  // resolved at Net construction
  std::size_t in_h = 0, in_w = 0;
  std::size_t res_out_h = 0, res_out_w = 0;
  std::size_t param_offset = 0, param_count = 0;
};

LayerSpec dense(std::size_t in_dim, std::size_t out_ch, std::size_t out_h = 1,
                std::size_t out_w = 1);
LayerSpec conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
               std::size_t pad);
LayerSpec transposed_conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                          std::size_t stride, std::size_t pad, std::size_t out_pad);
LayerSpec batch_norm(std::size_t channels);
LayerSpec relu();
LayerSpec leaky_relu(double slope = 0.2);
LayerSpec tanh_act();

// Feed-forward stack over a flat parameter vector with per-layer offsets.
class Net {
 public:
  Net() = default;
  Net(std::vector<LayerSpec> layers, std::size_t in_c, std::size_t in_h, std::size_t in_w);

  std::size_t param_count() const { return param_count_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  // Centered gaussian weights (std 0.02), zero biases, identity batch norm.
  std::vector<float> init_params(Rng& rng, double stddev = 0.02) const;

  struct Cache {
    std::vector<Tensor4> acts;                    // acts[i] feeds layer i
    std::vector<std::vector<double>> bn_norm;     // normalized values per BN layer
    std::vector<std::vector<double>> bn_invstd;   // per-channel inv stddev
  };

  Tensor4 forward(std::span<const float> params, const Tensor4& input,
                  Cache* cache = nullptr) const;

  // Returns the gradient w.r.t. the input; accumulates parameter gradients.
  Tensor4 backward(std::span<const float> params, const Cache& cache,
                   const Tensor4& grad_out, std::vector<double>& grad_params) const;

 private:
  std::vector<LayerSpec> layers_;
  std::size_t in_c_ = 0, in_h_ = 0, in_w_ = 0;
  std::size_t param_count_ = 0;
};

}  // namespace schurgan::net
