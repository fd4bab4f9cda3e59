#include "schurgan/net.hpp"

#include <cmath>

namespace schurgan::net {

namespace {
constexpr double kBnEps = 1e-5;
}

LayerSpec dense(std::size_t in_dim, std::size_t out_ch, std::size_t out_h,
                std::size_t out_w) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in_ch = in_dim;
  s.out_ch = out_ch;
  s.out_h = out_h;
  s.out_w = out_w;
  return s;
}

LayerSpec conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
               std::size_t pad) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec transposed_conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                          std::size_t stride, std::size_t pad, std::size_t out_pad) {
  LayerSpec s;
  s.kind = LayerKind::transposed_conv;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  s.out_pad = out_pad;
  return s;
}

LayerSpec batch_norm(std::size_t channels) {
  LayerSpec s;
  s.kind = LayerKind::batch_norm;
  s.in_ch = channels;
  s.out_ch = channels;
  return s;
}

LayerSpec relu() {
  LayerSpec s;
  s.kind = LayerKind::relu;
  return s;
}

LayerSpec leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::leaky_relu;
  s.leaky_slope = slope;
  return s;
}

LayerSpec tanh_act() {
  LayerSpec s;
  s.kind = LayerKind::tanh_act;
  return s;
}

Net::Net(std::vector<LayerSpec> layers, std::size_t in_c, std::size_t in_h, std::size_t in_w)
    : layers_(std::move(layers)), in_c_(in_c), in_h_(in_h), in_w_(in_w) {
  std::size_t c = in_c, h = in_h, w = in_w;
  std::size_t offset = 0;
  for (LayerSpec& l : layers_) {
    l.in_h = h;
    l.in_w = w;
    switch (l.kind) {
      case LayerKind::dense: {
        if (l.in_ch != c * h * w)
          throw std::invalid_argument("dense layer input dim mismatch");
        const std::size_t out_dim = l.out_ch * l.out_h * l.out_w;
        l.param_count = out_dim * l.in_ch + out_dim;
        c = l.out_ch;
        h = l.res_out_h = l.out_h;
        w = l.res_out_w = l.out_w;
        break;
      }
      case LayerKind::conv: {
        if (l.in_ch != c) throw std::invalid_argument("conv layer channel mismatch");
        if (h + 2 * l.pad < l.kernel || w + 2 * l.pad < l.kernel)
          throw std::invalid_argument("conv kernel larger than padded input");
        l.res_out_h = (h + 2 * l.pad - l.kernel) / l.stride + 1;
        l.res_out_w = (w + 2 * l.pad - l.kernel) / l.stride + 1;
        l.param_count = l.out_ch * l.in_ch * l.kernel * l.kernel + l.out_ch;
        c = l.out_ch;
        h = l.res_out_h;
        w = l.res_out_w;
        break;
      }
      case LayerKind::transposed_conv: {
        if (l.in_ch != c) throw std::invalid_argument("transposed conv channel mismatch");
        l.res_out_h = (h - 1) * l.stride + l.kernel + l.out_pad - 2 * l.pad;
        l.res_out_w = (w - 1) * l.stride + l.kernel + l.out_pad - 2 * l.pad;
        l.param_count = l.in_ch * l.out_ch * l.kernel * l.kernel + l.out_ch;
        c = l.out_ch;
        h = l.res_out_h;
        w = l.res_out_w;
        break;
      }
      case LayerKind::batch_norm: {
        if (l.in_ch != c) throw std::invalid_argument("batch norm channel mismatch");
        l.param_count = 2 * c;
        l.res_out_h = h;
        l.res_out_w = w;
        break;
      }
      default: {
        l.in_ch = l.out_ch = c;
        l.param_count = 0;
        l.res_out_h = h;
        l.res_out_w = w;
        break;
      }
    }
    l.param_offset = offset;
    offset += l.param_count;
  }
  param_count_ = offset;
}

std::vector<float> Net::init_params(Rng& rng, double stddev) const {
  std::vector<float> p(param_count_, 0.0f);
  for (const LayerSpec& l : layers_) {
    float* base = p.data() + l.param_offset;
    switch (l.kind) {
      case LayerKind::dense: {
        const std::size_t out_dim = l.out_ch * l.out_h * l.out_w;
        for (std::size_t i = 0; i < out_dim * l.in_ch; ++i)
          base[i] = static_cast<float>(rng.normal(0.0, stddev));
        break;  // biases stay zero
      }
      case LayerKind::conv:
      case LayerKind::transposed_conv: {
        const std::size_t wcount = l.param_count - l.out_ch;
        for (std::size_t i = 0; i < wcount; ++i)
          base[i] = static_cast<float>(rng.normal(0.0, stddev));
        break;
      }
      case LayerKind::batch_norm: {
        for (std::size_t i = 0; i < l.in_ch; ++i) base[i] = 1.0f;  // gamma
        break;                                                     // beta zero
      }
      default:
        break;
    }
  }
  return p;
}

Tensor4 Net::forward(std::span<const float> params, const Tensor4& input,
                     Cache* cache) const {
  if (input.c != in_c_ || input.h != in_h_ || input.w != in_w_)
    throw std::invalid_argument("net forward: input shape mismatch");
  if (params.size() != param_count_)
    throw std::invalid_argument("net forward: parameter count mismatch");

  Tensor4 x = input;
  if (cache) {
    cache->acts.clear();
    cache->bn_norm.assign(layers_.size(), {});
    cache->bn_invstd.assign(layers_.size(), {});
  }
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerSpec& l = layers_[li];
    if (cache) cache->acts.push_back(x);
    const float* p = params.data() + l.param_offset;
    Tensor4 y(x.n, l.param_count ? l.out_ch : x.c, l.res_out_h, l.res_out_w);
    switch (l.kind) {
      case LayerKind::dense: {
        const std::size_t in_dim = l.in_ch;
        const std::size_t out_dim = l.out_ch * l.out_h * l.out_w;
        const float* bias = p + out_dim * in_dim;
        for (std::size_t bn = 0; bn < x.n; ++bn) {
          const double* xin = x.data.data() + bn * in_dim;
          double* yout = y.data.data() + bn * out_dim;
          for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = bias[o];
            const float* wrow = p + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i)
              acc += static_cast<double>(wrow[i]) * xin[i];
            yout[o] = acc;
          }
        }
        break;
      }
      case LayerKind::conv: {
        const std::size_t k = l.kernel;
        const float* bias = p + l.out_ch * l.in_ch * k * k;
        for (std::size_t bn = 0; bn < x.n; ++bn)
          for (std::size_t oc = 0; oc < l.out_ch; ++oc)
            for (std::size_t oy = 0; oy < l.res_out_h; ++oy)
              for (std::size_t ox = 0; ox < l.res_out_w; ++ox) {
                double acc = bias[oc];
                for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
                  const float* wk = p + ((oc * l.in_ch + ic) * k) * k;
                  for (std::size_t ky = 0; ky < k; ++ky) {
                    const long iy =
                        static_cast<long>(oy * l.stride + ky) - static_cast<long>(l.pad);
                    if (iy < 0 || iy >= static_cast<long>(l.in_h)) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                      const long ix =
                          static_cast<long>(ox * l.stride + kx) - static_cast<long>(l.pad);
                      if (ix < 0 || ix >= static_cast<long>(l.in_w)) continue;
                      acc += static_cast<double>(wk[ky * k + kx]) *
                             x.at(bn, ic, static_cast<std::size_t>(iy),
                                  static_cast<std::size_t>(ix));
                    }
                  }
                }
                y.at(bn, oc, oy, ox) = acc;
              }
        break;
      }
      case LayerKind::transposed_conv: {
        const std::size_t k = l.kernel;
        const float* bias = p + l.in_ch * l.out_ch * k * k;
        for (std::size_t bn = 0; bn < y.n; ++bn)
          for (std::size_t oc = 0; oc < l.out_ch; ++oc)
            for (std::size_t oy = 0; oy < l.res_out_h; ++oy)
              for (std::size_t ox = 0; ox < l.res_out_w; ++ox)
                y.at(bn, oc, oy, ox) = bias[oc];
        for (std::size_t bn = 0; bn < x.n; ++bn)
          for (std::size_t ic = 0; ic < l.in_ch; ++ic)
            for (std::size_t iy = 0; iy < l.in_h; ++iy)
              for (std::size_t ix = 0; ix < l.in_w; ++ix) {
                const double v = x.at(bn, ic, iy, ix);
                if (v == 0.0) continue;
                for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
                  const float* wk = p + ((ic * l.out_ch + oc) * k) * k;
                  for (std::size_t ky = 0; ky < k; ++ky) {
                    const long oy =
                        static_cast<long>(iy * l.stride + ky) - static_cast<long>(l.pad);
                    if (oy < 0 || oy >= static_cast<long>(l.res_out_h)) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                      const long ox =
                          static_cast<long>(ix * l.stride + kx) - static_cast<long>(l.pad);
                      if (ox < 0 || ox >= static_cast<long>(l.res_out_w)) continue;
                      y.at(bn, oc, static_cast<std::size_t>(oy),
                           static_cast<std::size_t>(ox)) +=
                          static_cast<double>(wk[ky * k + kx]) * v;
                    }
                  }
                }
              }
        break;
      }
      case LayerKind::batch_norm: {
        const std::size_t m = x.n * x.h * x.w;
        std::vector<double> invstd(x.c);
        std::vector<double>* norm_store = nullptr;
        if (cache) {
          cache->bn_norm[li].resize(x.size());
          norm_store = &cache->bn_norm[li];
        }
        for (std::size_t ch = 0; ch < x.c; ++ch) {
          double mean = 0.0;
          for (std::size_t bn = 0; bn < x.n; ++bn)
            for (std::size_t iy = 0; iy < x.h; ++iy)
              for (std::size_t ix = 0; ix < x.w; ++ix) mean += x.at(bn, ch, iy, ix);
          mean /= static_cast<double>(m);
          double var = 0.0;
          for (std::size_t bn = 0; bn < x.n; ++bn)
            for (std::size_t iy = 0; iy < x.h; ++iy)
              for (std::size_t ix = 0; ix < x.w; ++ix) {
                const double d = x.at(bn, ch, iy, ix) - mean;
                var += d * d;
              }
          var /= static_cast<double>(m);
          invstd[ch] = 1.0 / std::sqrt(var + kBnEps);
          const double gamma = p[ch];
          const double beta = p[x.c + ch];
          for (std::size_t bn = 0; bn < x.n; ++bn)
            for (std::size_t iy = 0; iy < x.h; ++iy)
              for (std::size_t ix = 0; ix < x.w; ++ix) {
                const double nv = (x.at(bn, ch, iy, ix) - mean) * invstd[ch];
                if (norm_store) (*norm_store)[x.index(bn, ch, iy, ix)] = nv;
                y.at(bn, ch, iy, ix) = gamma * nv + beta;
              }
        }
        if (cache) cache->bn_invstd[li] = std::move(invstd);
        break;
      }
      case LayerKind::relu: {
        for (std::size_t i = 0; i < x.size(); ++i)
          y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
        break;
      }
      case LayerKind::leaky_relu: {
        for (std::size_t i = 0; i < x.size(); ++i)
          y.data[i] = x.data[i] > 0.0 ? x.data[i] : l.leaky_slope * x.data[i];
        break;
      }
      case LayerKind::tanh_act: {
        for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = std::tanh(x.data[i]);
        break;
      }
    }
    x = std::move(y);
  }
  if (cache) cache->acts.push_back(x);
  return x;
}

Tensor4 Net::backward(std::span<const float> params, const Cache& cache,
                      const Tensor4& grad_out, std::vector<double>& grad_params) const {
  if (grad_params.size() != param_count_) grad_params.assign(param_count_, 0.0);
  Tensor4 g = grad_out;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerSpec& l = layers_[li];
    const Tensor4& x = cache.acts[li];
    const float* p = params.data() + l.param_offset;
    double* gp = grad_params.data() + l.param_offset;
    Tensor4 gin(x.n, x.c, x.h, x.w);
    switch (l.kind) {
      case LayerKind::dense: {
        const std::size_t in_dim = l.in_ch;
        const std::size_t out_dim = l.out_ch * l.out_h * l.out_w;
        double* gb = gp + out_dim * in_dim;
        for (std::size_t bn = 0; bn < x.n; ++bn) {
          const double* xin = x.data.data() + bn * in_dim;
          const double* go = g.data.data() + bn * out_dim;
          double* gi = gin.data.data() + bn * in_dim;
          for (std::size_t o = 0; o < out_dim; ++o) {
            const double gv = go[o];
            gb[o] += gv;
            const float* wrow = p + o * in_dim;
            double* gw = gp + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) {
              gw[i] += gv * xin[i];
              gi[i] += gv * static_cast<double>(wrow[i]);
            }
          }
        }
        break;
      }
      case LayerKind::conv: {
        const std::size_t k = l.kernel;
        double* gb = gp + l.out_ch * l.in_ch * k * k;
        for (std::size_t bn = 0; bn < x.n; ++bn)
          for (std::size_t oc = 0; oc < l.out_ch; ++oc)
            for (std::size_t oy = 0; oy < l.res_out_h; ++oy)
              for (std::size_t ox = 0; ox < l.res_out_w; ++ox) {
                const double gv = g.at(bn, oc, oy, ox);
                if (gv == 0.0) continue;
                gb[oc] += gv;
                for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
                  const float* wk = p + ((oc * l.in_ch + ic) * k) * k;
                  double* gw = gp + ((oc * l.in_ch + ic) * k) * k;
                  for (std::size_t ky = 0; ky < k; ++ky) {
                    const long iy =
                        static_cast<long>(oy * l.stride + ky) - static_cast<long>(l.pad);
                    if (iy < 0 || iy >= static_cast<long>(l.in_h)) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                      const long ix =
                          static_cast<long>(ox * l.stride + kx) - static_cast<long>(l.pad);
                      if (ix < 0 || ix >= static_cast<long>(l.in_w)) continue;
                      const double xv = x.at(bn, ic, static_cast<std::size_t>(iy),
                                             static_cast<std::size_t>(ix));
                      gw[ky * k + kx] += gv * xv;
                      gin.at(bn, ic, static_cast<std::size_t>(iy),
                             static_cast<std::size_t>(ix)) +=
                          gv * static_cast<double>(wk[ky * k + kx]);
                    }
                  }
                }
              }
        break;
      }
      case LayerKind::transposed_conv: {
        const std::size_t k = l.kernel;
        double* gb = gp + l.in_ch * l.out_ch * k * k;
        for (std::size_t bn = 0; bn < g.n; ++bn)
          for (std::size_t oc = 0; oc < l.out_ch; ++oc)
            for (std::size_t oy = 0; oy < l.res_out_h; ++oy)
              for (std::size_t ox = 0; ox < l.res_out_w; ++ox)
                gb[oc] += g.at(bn, oc, oy, ox);
        for (std::size_t bn = 0; bn < x.n; ++bn)
          for (std::size_t ic = 0; ic < l.in_ch; ++ic)
            for (std::size_t iy = 0; iy < l.in_h; ++iy)
              for (std::size_t ix = 0; ix < l.in_w; ++ix) {
                const double xv = x.at(bn, ic, iy, ix);
                double acc = 0.0;
                for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
                  const float* wk = p + ((ic * l.out_ch + oc) * k) * k;
                  double* gw = gp + ((ic * l.out_ch + oc) * k) * k;
                  for (std::size_t ky = 0; ky < k; ++ky) {
                    const long oy =
                        static_cast<long>(iy * l.stride + ky) - static_cast<long>(l.pad);
                    if (oy < 0 || oy >= static_cast<long>(l.res_out_h)) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                      const long ox =
                          static_cast<long>(ix * l.stride + kx) - static_cast<long>(l.pad);
                      if (ox < 0 || ox >= static_cast<long>(l.res_out_w)) continue;
                      const double gv = g.at(bn, oc, static_cast<std::size_t>(oy),
                                             static_cast<std::size_t>(ox));
                      acc += gv * static_cast<double>(wk[ky * k + kx]);
                      gw[ky * k + kx] += gv * xv;
                    }
                  }
                }
                gin.at(bn, ic, iy, ix) = acc;
              }
        break;
      }
      case LayerKind::batch_norm: {
        const std::size_t m = x.n * x.h * x.w;
        const std::vector<double>& norm = cache.bn_norm[li];
        const std::vector<double>& invstd = cache.bn_invstd[li];
        for (std::size_t ch = 0; ch < x.c; ++ch) {
          const double gamma = p[ch];
          double sum_gy = 0.0, sum_gy_norm = 0.0;
          for (std::size_t bn = 0; bn < x.n; ++bn)
            for (std::size_t iy = 0; iy < x.h; ++iy)
              for (std::size_t ix = 0; ix < x.w; ++ix) {
                const std::size_t idx = x.index(bn, ch, iy, ix);
                sum_gy += g.data[idx];
                sum_gy_norm += g.data[idx] * norm[idx];
              }
          gp[ch] += sum_gy_norm;   // d gamma
          gp[x.c + ch] += sum_gy;  // d beta
          const double inv_m = 1.0 / static_cast<double>(m);
          for (std::size_t bn = 0; bn < x.n; ++bn)
            for (std::size_t iy = 0; iy < x.h; ++iy)
              for (std::size_t ix = 0; ix < x.w; ++ix) {
                const std::size_t idx = x.index(bn, ch, iy, ix);
                gin.data[idx] =
                    gamma * invstd[ch] *
                    (g.data[idx] - inv_m * sum_gy - inv_m * norm[idx] * sum_gy_norm);
              }
        }
        break;
      }
      case LayerKind::relu: {
        for (std::size_t i = 0; i < x.size(); ++i)
          gin.data[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;
        break;
      }
      case LayerKind::leaky_relu: {
        for (std::size_t i = 0; i < x.size(); ++i)
          gin.data[i] = x.data[i] > 0.0 ? g.data[i] : l.leaky_slope * g.data[i];
        break;
      }
      case LayerKind::tanh_act: {
        const Tensor4& y = cache.acts[li + 1];
        for (std::size_t i = 0; i < x.size(); ++i)
          gin.data[i] = (1.0 - y.data[i] * y.data[i]) * g.data[i];
        break;
      }
    }
    g = std::move(gin);
  }
  for (double v : grad_params)
    if (!std::isfinite(v)) throw NonFiniteGradient("parameter gradient is not finite");
  if (!g.all_finite()) throw NonFiniteGradient("input gradient is not finite");
  return g;
}

}  // namespace schurgan::net
