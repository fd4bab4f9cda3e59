#include "schurgan/gan.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace schurgan::gan {

namespace {

bool power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t up_blocks(std::size_t side) {
  std::size_t k = 0, s = 4;
  while (s < side) {
    s *= 2;
    ++k;
  }
  return k;
}

std::vector<double> score_vector(const net::Tensor4& t) {
  std::vector<double> out(t.n);
  for (std::size_t i = 0; i < t.n; ++i) out[i] = t.data[i * t.c * t.h * t.w];
  return out;
}

void adam_update(std::vector<float>& params, AdamOpt& opt, const std::vector<double>& grad,
                 const GanConfig& cfg) {
  if (opt.m.size() != params.size()) opt.m.assign(params.size(), 0.0f);
  if (opt.v.size() != params.size()) opt.v.assign(params.size(), 0.0f);
  opt.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    const double m = cfg.beta1 * static_cast<double>(opt.m[i]) + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * static_cast<double>(opt.v[i]) + (1.0 - cfg.beta2) * g * g;
    opt.m[i] = static_cast<float>(m);
    opt.v[i] = static_cast<float>(v);
    const double step = cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + 1e-8);
    params[i] = static_cast<float>(static_cast<double>(params[i]) - step);
  }
}

// ---- byte-buffer serialization -------------------------------------------

struct Writer {
  std::vector<unsigned char> buf;
  void raw(const void* p, std::size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), b, b + len);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void f32v(const std::vector<float>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    raw(v.data(), v.size() * sizeof(float));
  }
};

struct Reader {
  const unsigned char* p;
  const unsigned char* end;
  void raw(void* out, std::size_t len) {
    if (p + len > end) throw std::runtime_error("checkpoint: truncated record");
    std::memcpy(out, p, len);
    p += len;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::vector<float> f32v() {
    const std::uint32_t n = u32();
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return v;
  }
};

void write_config(Writer& w, const GanConfig& c) {
  w.f64(c.a);
  w.f64(c.b);
  w.f64(c.c);
  w.f64(c.epsilon);
  w.f64(c.penalty_weight);
  w.f64(c.lagrange_eta);
  w.f64(c.lr);
  w.f64(c.beta1);
  w.f64(c.beta2);
  w.f64(c.ema_decay);
  w.u8(static_cast<std::uint8_t>(c.penalty_mode));
  w.u8(static_cast<std::uint8_t>(c.arch));
  w.u8(c.d_loss_symmetric ? 1 : 0);
  w.u64(c.latent_dim);
  w.u64(c.side);
  w.u64(c.base_channels);
  w.u64(c.batch_size);
  w.u64(c.seed);
  w.u64(c.checkpoint_every);
}

GanConfig read_config(Reader& r) {
  GanConfig c;
  c.a = r.f64();
  c.b = r.f64();
  c.c = r.f64();
  c.epsilon = r.f64();
  c.penalty_weight = r.f64();
  c.lagrange_eta = r.f64();
  c.lr = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.ema_decay = r.f64();
  c.penalty_mode = static_cast<PenaltyMode>(r.u8());
  c.arch = static_cast<ArchKind>(r.u8());
  c.d_loss_symmetric = r.u8() != 0;
  c.latent_dim = r.u64();
  c.side = r.u64();
  c.base_channels = r.u64();
  c.batch_size = r.u64();
  c.seed = r.u64();
  c.checkpoint_every = r.u64();
  return c;
}

std::vector<unsigned char> serialize_state(const TrainState& st, std::uint64_t config_hash) {
  Writer w;
  w.raw("SGCK", 4);
  w.u8(1);  // version
  w.u64(config_hash);
  write_config(w, st.config);
  w.u64(st.iter);
  w.u64(st.rng.state());
  w.u8(st.rng.has_spare() ? 1 : 0);
  w.f64(st.rng.spare());
  w.f64(st.dfn_real_ema);
  w.u8(st.ema_initialized ? 1 : 0);
  w.f64(st.epsilon_used);
  w.u8(st.epsilon_resolved ? 1 : 0);
  w.f64(st.lambda_p);
  w.f32v(st.gen_params);
  w.f32v(st.disc_params);
  w.f32v(st.gen_opt.m);
  w.f32v(st.gen_opt.v);
  w.u64(st.gen_opt.t);
  w.f32v(st.disc_opt.m);
  w.f32v(st.disc_opt.v);
  w.u64(st.disc_opt.t);
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, w.buf.data(), static_cast<uInt>(w.buf.size())));
  w.u32(crc);
  return std::move(w.buf);
}

}  // namespace

void GanConfig::validate() const {
  if (epsilon < 0.0) throw std::invalid_argument("gan config: epsilon must be >= 0");
  if (penalty_weight < 0.0)
    throw std::invalid_argument("gan config: penalty weight must be >= 0");
  if (arch == ArchKind::spectrogram && (!power_of_two(side) || side < 16))
    throw std::invalid_argument("gan config: side must be a power of two >= 16");
  if (checkpoint_every < 1)
    throw std::invalid_argument("gan config: checkpoint_every must be >= 1");
  if (latent_dim == 0 || batch_size == 0 || base_channels == 0)
    throw std::invalid_argument("gan config: zero dimension");
}

net::Net build_generator(const GanConfig& cfg) {
  using namespace net;
  std::vector<LayerSpec> layers;
  if (cfg.arch == ArchKind::gmm2d) {
    layers.push_back(dense(cfg.latent_dim, 64));
    layers.push_back(relu());
    layers.push_back(dense(64, 64));
    layers.push_back(relu());
    layers.push_back(dense(64, 2));
    return Net(std::move(layers), cfg.latent_dim, 1, 1);
  }
  const std::size_t k = up_blocks(cfg.side);  // seed map is 4x4
  const std::size_t c0 = cfg.base_channels << (k - 1);
  layers.push_back(dense(cfg.latent_dim, c0, 4, 4));
  layers.push_back(relu());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t cin = c0 >> i;
    const std::size_t cout = (i + 1 == k) ? 1 : (c0 >> (i + 1));
    layers.push_back(transposed_conv(cin, cout, 3, 2, 1, 1));
    if (i + 1 == k) {
      layers.push_back(tanh_act());
    } else {
      layers.push_back(batch_norm(cout));
      layers.push_back(relu());
    }
  }
  return Net(std::move(layers), cfg.latent_dim, 1, 1);
}

net::Net build_discriminator(const GanConfig& cfg) {
  using namespace net;
  std::vector<LayerSpec> layers;
  if (cfg.arch == ArchKind::gmm2d) {
    layers.push_back(dense(2, 64));
    layers.push_back(leaky_relu());
    layers.push_back(dense(64, 64));
    layers.push_back(leaky_relu());
    layers.push_back(dense(64, 1));
    return Net(std::move(layers), 2, 1, 1);
  }
  const std::size_t k = up_blocks(cfg.side);
  std::size_t ch = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t cout = cfg.base_channels << i;
    layers.push_back(conv(ch, cout, 5, 2, 2));
    layers.push_back(leaky_relu());
    ch = cout;
  }
  layers.push_back(dense(ch * 4 * 4, 1));
  return Net(std::move(layers), 1, cfg.side, cfg.side);
}

TrainState init_train_state(const GanConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.config = cfg;
  const net::Net gen = build_generator(cfg);
  const net::Net disc = build_discriminator(cfg);
  Rng gen_rng = Rng::stream(cfg.seed, 1);
  Rng disc_rng = Rng::stream(cfg.seed, 2);
  st.gen_params = gen.init_params(gen_rng);
  st.disc_params = disc.init_params(disc_rng);
  st.gen_opt.m.assign(st.gen_params.size(), 0.0f);
  st.gen_opt.v.assign(st.gen_params.size(), 0.0f);
  st.disc_opt.m.assign(st.disc_params.size(), 0.0f);
  st.disc_opt.v.assign(st.disc_params.size(), 0.0f);
  st.rng = Rng::stream(cfg.seed, 3);
  st.lambda_p = cfg.penalty_weight;
  if (cfg.epsilon > 0.0) {
    st.epsilon_used = cfg.epsilon;
    st.epsilon_resolved = true;
  }
  return st;
}

double d_loss(const std::vector<double>& scores_real, const std::vector<double>& scores_fake,
              double a, double b, bool symmetric) {
  if (scores_real.empty() || scores_fake.empty())
    throw std::invalid_argument("d_loss: empty score batch");
  double real_term = 0.0;
  for (double s : scores_real) real_term += (s - b) * (s - b);
  real_term /= static_cast<double>(scores_real.size());
  double fake_term = 0.0;
  for (double s : scores_fake) fake_term += (s - a) * (s - a);
  fake_term /= static_cast<double>(scores_fake.size());
  return 0.5 * real_term + (symmetric ? 0.5 : 1.0) * fake_term;
}

GLossParts g_loss(const std::vector<double>& scores_fake, double c, double dfn_fake_mean,
                  double dfn_real_mean, double epsilon, double lambda_p) {
  if (scores_fake.empty()) throw std::invalid_argument("g_loss: empty score batch");
  if (lambda_p < 0.0 || epsilon < 0.0)
    throw std::invalid_argument("g_loss: negative epsilon or penalty weight");
  GLossParts parts;
  for (double s : scores_fake) parts.ls += (s - c) * (s - c);
  parts.ls = 0.5 * parts.ls / static_cast<double>(scores_fake.size());
  const double gap = std::fabs(dfn_fake_mean - dfn_real_mean);
  parts.penalty = lambda_p * std::max(0.0, gap - epsilon);
  parts.total = parts.ls + parts.penalty;
  return parts;
}

Matrix sample_map(const net::Tensor4& batch, std::size_t index) {
  if (batch.h != batch.w) throw std::invalid_argument("sample_map: non-square map");
  Matrix m(batch.h, batch.w);
  for (std::size_t y = 0; y < batch.h; ++y)
    for (std::size_t x = 0; x < batch.w; ++x) m(y, x) = batch.at(index, 0, y, x);
  return m;
}

Matrix batch_scatter_matrix(const net::Tensor4& batch) {
  if (batch.c * batch.h * batch.w != 2)
    throw std::invalid_argument("batch_scatter_matrix: expected 2-D points");
  const std::size_t n = batch.n;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += batch.data[i * 2];
    my += batch.data[i * 2 + 1];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  Matrix c(2, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = batch.data[i * 2] - mx;
    const double dy = batch.data[i * 2 + 1] - my;
    c(0, 0) += dx * dx;
    c(0, 1) += dx * dy;
    c(1, 0) += dy * dx;
    c(1, 1) += dy * dy;
  }
  for (double& v : c.data()) v /= static_cast<double>(n);
  return c;
}

net::Tensor4 sample_latent(Rng& rng, std::size_t batch, std::size_t latent_dim) {
  net::Tensor4 z(batch, latent_dim, 1, 1);
  for (double& v : z.data) v = rng.normal();
  return z;
}

double batch_dfn_mean(const GanConfig& cfg, const net::Tensor4& batch) {
  if (cfg.arch == ArchKind::gmm2d) return la::dfn(batch_scatter_matrix(batch));
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i) acc += la::dfn(sample_map(batch, i));
  return acc / static_cast<double>(batch.n);
}

StepStats train_step(TrainState& st, const net::Tensor4& real_batch,
                     const net::Tensor4& z_batch) {
  const GanConfig& cfg = st.config;
  const net::Net gen = build_generator(cfg);
  const net::Net disc = build_discriminator(cfg);
  const std::size_t batch = real_batch.n;
  if (z_batch.n != batch) throw std::invalid_argument("train_step: batch size mismatch");

  const bool need_dfn =
      (cfg.penalty_mode == PenaltyMode::lagrange) || cfg.penalty_weight > 0.0;

  if (need_dfn && !st.epsilon_resolved) {
    if (cfg.epsilon > 0.0) {
      st.epsilon_used = cfg.epsilon;
    } else if (cfg.arch == ArchKind::gmm2d) {
      st.epsilon_used = std::max(
          la::suggest_epsilon({batch_scatter_matrix(real_batch)}), 1e-6);
    } else {
      std::vector<Matrix> mats;
      mats.reserve(batch);
      for (std::size_t i = 0; i < batch; ++i) mats.push_back(sample_map(real_batch, i));
      st.epsilon_used = la::suggest_epsilon(mats);
    }
    st.epsilon_resolved = true;
  }

  StepStats stats;

  // ---- discriminator update ----
  {
    const net::Tensor4 fake = gen.forward(st.gen_params, z_batch);
    net::Net::Cache cache_r, cache_f;
    const std::vector<double> sr = score_vector(disc.forward(st.disc_params, real_batch, &cache_r));
    const std::vector<double> sf = score_vector(disc.forward(st.disc_params, fake, &cache_f));
    stats.d_loss = d_loss(sr, sf, cfg.a, cfg.b, cfg.d_loss_symmetric);
    if (!std::isfinite(stats.d_loss)) throw NonFiniteLoss("discriminator loss is not finite");

    // d/ds of 0.5*mean((s-b)^2) is (s-b)/B; the fake term carries 2x
    // unless the symmetric variant halves it too.
    const double fake_coeff = cfg.d_loss_symmetric ? 1.0 : 2.0;
    net::Tensor4 gr(batch, 1, 1, 1), gf(batch, 1, 1, 1);
    for (std::size_t i = 0; i < batch; ++i) {
      gr.data[i] = (sr[i] - cfg.b) / static_cast<double>(batch);
      gf.data[i] = fake_coeff * (sf[i] - cfg.a) / static_cast<double>(batch);
    }
    std::vector<double> grad_d(st.disc_params.size(), 0.0);
    disc.backward(st.disc_params, cache_r, gr, grad_d);
    disc.backward(st.disc_params, cache_f, gf, grad_d);
    adam_update(st.disc_params, st.disc_opt, grad_d, cfg);
  }

  // ---- running real-batch DFN mean ----
  if (need_dfn) {
    const double real_mean = batch_dfn_mean(cfg, real_batch);
    if (st.ema_initialized) {
      st.dfn_real_ema = cfg.ema_decay * st.dfn_real_ema + (1.0 - cfg.ema_decay) * real_mean;
    } else {
      st.dfn_real_ema = real_mean;
      st.ema_initialized = true;
    }
  }

  // ---- generator update ----
  {
    net::Net::Cache cache_g, cache_d;
    const net::Tensor4 fake = gen.forward(st.gen_params, z_batch, &cache_g);
    const std::vector<double> sf = score_vector(disc.forward(st.disc_params, fake, &cache_d));

    double dfn_fake_mean = 0.0;
    std::vector<Matrix> fake_maps;
    Matrix scatter;
    if (need_dfn) {
      if (cfg.arch == ArchKind::gmm2d) {
        scatter = batch_scatter_matrix(fake);
        dfn_fake_mean = la::dfn(scatter);
      } else {
        fake_maps.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) fake_maps.push_back(sample_map(fake, i));
        for (const Matrix& m : fake_maps) dfn_fake_mean += la::dfn(m);
        dfn_fake_mean /= static_cast<double>(batch);
      }
      stats.dfn_evaluated = true;
    }

    const GLossParts parts = g_loss(sf, cfg.c, dfn_fake_mean,
                                    need_dfn ? st.dfn_real_ema : 0.0, st.epsilon_used,
                                    need_dfn ? st.lambda_p : 0.0);
    if (!std::isfinite(parts.total)) throw NonFiniteLoss("generator loss is not finite");
    stats.g_total = parts.total;
    stats.g_ls = parts.ls;
    stats.g_penalty = parts.penalty;
    stats.dfn_fake_mean = dfn_fake_mean;
    stats.dfn_real_ema = st.dfn_real_ema;
    stats.dfn_gap = std::fabs(dfn_fake_mean - st.dfn_real_ema);

    net::Tensor4 gs(batch, 1, 1, 1);
    for (std::size_t i = 0; i < batch; ++i)
      gs.data[i] = (sf[i] - cfg.c) / static_cast<double>(batch);
    std::vector<double> grad_disc_scratch(st.disc_params.size(), 0.0);
    net::Tensor4 dfake = disc.backward(st.disc_params, cache_d, gs, grad_disc_scratch);

    const double gap_signed = dfn_fake_mean - st.dfn_real_ema;
    if (need_dfn && st.lambda_p > 0.0 && std::fabs(gap_signed) > st.epsilon_used) {
      const double sign = gap_signed >= 0.0 ? 1.0 : -1.0;
      const double coeff = st.lambda_p * sign / static_cast<double>(batch);
      if (cfg.arch == ArchKind::gmm2d) {
        const Matrix g = la::dfn_gradient_robust(scatter);
        // chain through the centered scatter: d dfn/dp_k = (1/B)(G+G^T)(p_k - mu)
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < batch; ++i) {
          mx += fake.data[i * 2];
          my += fake.data[i * 2 + 1];
        }
        mx /= static_cast<double>(batch);
        my /= static_cast<double>(batch);
        const double s00 = 2.0 * g(0, 0), s11 = 2.0 * g(1, 1);
        const double s01 = g(0, 1) + g(1, 0);
        for (std::size_t i = 0; i < batch; ++i) {
          const double dx = fake.data[i * 2] - mx;
          const double dy = fake.data[i * 2 + 1] - my;
          dfake.data[i * 2] += st.lambda_p * sign * (s00 * dx + s01 * dy) /
                               static_cast<double>(batch);
          dfake.data[i * 2 + 1] += st.lambda_p * sign * (s01 * dx + s11 * dy) /
                                   static_cast<double>(batch);
        }
      } else {
        for (std::size_t i = 0; i < batch; ++i) {
          const Matrix g = la::dfn_gradient_robust(fake_maps[i]);
          for (std::size_t y = 0; y < g.rows(); ++y)
            for (std::size_t x = 0; x < g.cols(); ++x)
              dfake.at(i, 0, y, x) += coeff * g(y, x);
        }
      }
    }

    std::vector<double> grad_g(st.gen_params.size(), 0.0);
    gen.backward(st.gen_params, cache_g, dfake, grad_g);
    adam_update(st.gen_params, st.gen_opt, grad_g, cfg);

    if (cfg.penalty_mode == PenaltyMode::lagrange)
      st.lambda_p += cfg.lagrange_eta * std::max(0.0, stats.dfn_gap - st.epsilon_used);
  }

  st.iter += 1;
  return stats;
}

void save_checkpoint(const TrainState& st, const std::string& path,
                     std::uint64_t config_hash) {
  const std::vector<unsigned char> bytes = serialize_state(st, config_hash);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 9 || std::memcmp(bytes.data(), "SGCK", 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  if (bytes[4] != 1) throw VersionMismatch("unsupported checkpoint version");
  if (bytes.size() < 13) throw ChecksumError("checkpoint too short");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  const std::uint32_t computed =
      static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body)));
  if (stored != computed) throw ChecksumError("checkpoint checksum mismatch");

  Reader r{bytes.data() + 5, bytes.data() + body};
  LoadedCheckpoint out;
  out.config_hash = r.u64();
  out.state.config = read_config(r);
  out.state.iter = r.u64();
  const std::uint64_t rng_state = r.u64();
  const bool has_spare = r.u8() != 0;
  const double spare = r.f64();
  out.state.rng.restore(rng_state, has_spare, spare);
  out.state.dfn_real_ema = r.f64();
  out.state.ema_initialized = r.u8() != 0;
  out.state.epsilon_used = r.f64();
  out.state.epsilon_resolved = r.u8() != 0;
  out.state.lambda_p = r.f64();
  out.state.gen_params = r.f32v();
  out.state.disc_params = r.f32v();
  out.state.gen_opt.m = r.f32v();
  out.state.gen_opt.v = r.f32v();
  out.state.gen_opt.t = r.u64();
  out.state.disc_opt.m = r.f32v();
  out.state.disc_opt.v = r.f32v();
  out.state.disc_opt.t = r.u64();
  return out;
}

std::uint64_t state_hash(const TrainState& st) {
  const std::vector<unsigned char> bytes = serialize_state(st, 0);
  return fnv1a(bytes.data(), bytes.size());
}

}  // namespace schurgan::gan
