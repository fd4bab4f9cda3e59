#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "schurgan/gan.hpp"
#include "schurgan/metrics.hpp"

using namespace schurgan;
using namespace schurgan::gan;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

GanConfig tiny_config() {
  GanConfig cfg;
  cfg.side = 16;
  cfg.base_channels = 4;
  cfg.latent_dim = 8;
  cfg.batch_size = 4;
  cfg.seed = 99;
  return cfg;
}

net::Tensor4 random_real_batch(Rng& rng, std::size_t batch, std::size_t side) {
  net::Tensor4 t(batch, 1, side, side);
  for (double& v : t.data) v = std::tanh(rng.normal());
  return t;
}

}  // namespace

TEST_CASE("config validation") {
  GanConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  GanConfig bad = cfg;
  bad.side = 24;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.side = 8;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.epsilon = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.checkpoint_every = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("d_loss closed forms and oracle") {
  SUBCASE("targets hit exactly give zero") {
    std::vector<double> sr(5, 1.0), sf(5, 0.0);
    CHECK(d_loss(sr, sf, 0.0, 1.0) == 0.0);
  }
  SUBCASE("real off by one gives one half") {
    std::vector<double> sr(7, 2.0), sf(7, 0.0);
    CHECK(d_loss(sr, sf, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("random scores against direct scalar evaluation") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> sr(6), sf(9);
      for (double& v : sr) v = rng.normal();
      for (double& v : sf) v = rng.normal();
      const double a = rng.normal(), b = rng.normal();
      double want_r = 0.0, want_f = 0.0;
      for (double v : sr) want_r += (v - b) * (v - b);
      for (double v : sf) want_f += (v - a) * (v - a);
      CHECK(d_loss(sr, sf, a, b, false) ==
            doctest::Approx(0.5 * want_r / 6.0 + want_f / 9.0).epsilon(1e-14));
      CHECK(d_loss(sr, sf, a, b, true) ==
            doctest::Approx(0.5 * want_r / 6.0 + 0.5 * want_f / 9.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("g_loss hinge algebra") {
  SUBCASE("on-target scores inside the band give zero") {
    std::vector<double> s(4, 1.0);
    auto parts = g_loss(s, 1.0, 0.5, 0.4, 0.2, 10.0);
    CHECK(parts.total == 0.0);
    CHECK(parts.penalty == 0.0);
  }
  SUBCASE("plain ls term") {
    std::vector<double> s(4, 3.0);
    auto parts = g_loss(s, 1.0, 0.0, 0.0, 0.0, 0.0);
    CHECK(parts.total == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("hinge arithmetic") {
    std::vector<double> s(4, 1.0);
    auto parts = g_loss(s, 1.0, 1.7, 0.0, 1.2, 10.0);
    CHECK(parts.penalty == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("lambda zero recovers the plain loss bit-for-bit") {
    Rng rng(23);
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> s(5);
      for (double& v : s) v = rng.normal();
      const double c = rng.normal();
      auto with = g_loss(s, c, rng.uniform(), rng.uniform(), rng.uniform(), 0.0);
      auto plain = g_loss(s, c, 0.0, 0.0, 0.0, 0.0);
      CHECK(with.total == plain.total);
      CHECK(with.penalty == 0.0);
    }
  }
  SUBCASE("penalty is a hinge in the gap") {
    std::vector<double> s(3, 0.0);
    const double eps = 0.5, lam = 2.0;
    for (double gap : {0.0, 0.2, 0.5}) {
      CHECK(g_loss(s, 0.0, gap, 0.0, eps, lam).penalty == 0.0);
    }
    for (double gap : {0.6, 1.0, 3.0}) {
      CHECK(g_loss(s, 0.0, gap, 0.0, eps, lam).penalty ==
            doctest::Approx(lam * (gap - eps)).epsilon(1e-14));
      CHECK(g_loss(s, 0.0, 0.0, gap, eps, lam).penalty ==
            doctest::Approx(lam * (gap - eps)).epsilon(1e-14));
    }
  }
}

TEST_CASE("generator and discriminator contracts") {
  GanConfig cfg;
  cfg.side = 32;
  cfg.base_channels = 4;
  cfg.latent_dim = 8;
  const net::Net gen = build_generator(cfg);
  const net::Net disc = build_discriminator(cfg);

  SUBCASE("zero parameters produce zero output (tanh(0))") {
    std::vector<float> p(gen.param_count(), 0.0f);
    net::Tensor4 z(2, 8, 1, 1);
    for (double& v : z.data) v = 1.0;
    net::Tensor4 out = gen.forward(p, z);
    for (double v : out.data) CHECK(v == 0.0);
  }

  SUBCASE("output shape and range") {
    Rng rng(29);
    std::vector<float> p = gen.init_params(rng);
    net::Tensor4 z = sample_latent(rng, 2, 8);
    net::Tensor4 out = gen.forward(p, z);
    CHECK(out.n == 2);
    CHECK(out.c == 1);
    CHECK(out.h == 32);
    CHECK(out.w == 32);
    for (double v : out.data) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }

  SUBCASE("deterministic outputs for fixed seed and z") {
    Rng rng1(42), rng2(42);
    std::vector<float> p1 = gen.init_params(rng1);
    std::vector<float> p2 = gen.init_params(rng2);
    CHECK(p1 == p2);
    net::Tensor4 z = sample_latent(rng1, 3, 8);
    net::Tensor4 a = gen.forward(p1, z);
    net::Tensor4 b = gen.forward(p2, z);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
  }

  SUBCASE("zero discriminator scores equal the output bias") {
    std::vector<float> p(disc.param_count(), 0.0f);
    Rng rng(31);
    net::Tensor4 x(3, 1, 32, 32);
    for (double& v : x.data) v = rng.normal();
    net::Tensor4 s = disc.forward(p, x);
    CHECK(s.n == 3);
    CHECK(s.c * s.h * s.w == 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.data[i] == 0.0);
  }

  SUBCASE("discriminator score matches finite difference under input perturbation") {
    Rng rng(37);
    std::vector<float> p = disc.init_params(rng, 0.05);
    net::Tensor4 x(1, 1, 32, 32);
    for (double& v : x.data) v = rng.normal();
    net::Net::Cache cache;
    net::Tensor4 s = disc.forward(p, x, &cache);
    net::Tensor4 gy(1, 1, 1, 1);
    gy.data[0] = 1.0;
    std::vector<double> gp(disc.param_count(), 0.0);
    net::Tensor4 gin = disc.backward(p, cache, gy, gp);

    const double h = 1e-4;
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      const std::size_t idx = (i * 97) % x.size();
      net::Tensor4 xp = x, xm = x;
      xp.data[idx] += h;
      xm.data[idx] -= h;
      const double fd = (disc.forward(p, xp).data[0] - disc.forward(p, xm).data[0]) / (2 * h);
      worst = std::max(worst, std::fabs(fd - gin.data[idx]));
      scale = std::max(scale, std::fabs(fd));
    }
    CHECK(worst <= 1e-4 * std::max(scale, 1e-6));
  }
}

TEST_CASE("end-to-end generator gradient with the dfn penalty") {
  // <= 2000 parameter generator: n=16, two up blocks
  GanConfig cfg = tiny_config();
  cfg.base_channels = 2;  // generator params: dense 8->(4*4*4) + tconv stack
  cfg.penalty_weight = 0.7;
  cfg.epsilon = 1e-9;
  TrainState st = init_train_state(cfg);
  const net::Net gen = build_generator(cfg);
  const net::Net disc = build_discriminator(cfg);
  REQUIRE(gen.param_count() <= 2000);

  Rng rng(43);
  net::Tensor4 z = sample_latent(rng, 2, cfg.latent_dim);
  const double dfn_ref = 0.0;  // forces an active hinge with positive sign

  auto loss = [&](const std::vector<float>& gp) {
    net::Tensor4 fake = gen.forward(gp, z);
    net::Tensor4 s = disc.forward(st.disc_params, fake);
    std::vector<double> scores(fake.n);
    for (std::size_t i = 0; i < fake.n; ++i) scores[i] = s.data[i];
    double dfn_mean = 0.0;
    for (std::size_t i = 0; i < fake.n; ++i) dfn_mean += la::dfn(sample_map(fake, i));
    dfn_mean /= static_cast<double>(fake.n);
    return g_loss(scores, cfg.c, dfn_mean, dfn_ref, cfg.epsilon, cfg.penalty_weight).total;
  };

  // analytic gradient via the same composition train_step uses
  net::Net::Cache cg, cd;
  net::Tensor4 fake = gen.forward(st.gen_params, z, &cg);
  net::Tensor4 s = disc.forward(st.disc_params, fake, &cd);
  net::Tensor4 gs(fake.n, 1, 1, 1);
  for (std::size_t i = 0; i < fake.n; ++i)
    gs.data[i] = (s.data[i] - cfg.c) / static_cast<double>(fake.n);
  std::vector<double> scratch(disc.param_count(), 0.0);
  net::Tensor4 dfake = disc.backward(st.disc_params, cd, gs, scratch);
  for (std::size_t i = 0; i < fake.n; ++i) {
    Matrix g = la::dfn_gradient_robust(sample_map(fake, i));
    for (std::size_t y = 0; y < g.rows(); ++y)
      for (std::size_t x = 0; x < g.cols(); ++x)
        dfake.at(i, 0, y, x) += cfg.penalty_weight * g(y, x) / static_cast<double>(fake.n);
  }
  std::vector<double> grad(gen.param_count(), 0.0);
  gen.backward(st.gen_params, cg, dfake, grad);

  // finite differences over every generator parameter
  std::vector<float> p = st.gen_params;
  double scale = 0.0;
  for (double v : grad) scale = std::max(scale, std::fabs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const float orig = p[i];
    const double h = 1e-4;
    const float up = static_cast<float>(static_cast<double>(orig) + h);
    const float down = static_cast<float>(static_cast<double>(orig) - h);
    p[i] = up;
    const double fp = loss(p);
    p[i] = down;
    const double fm = loss(p);
    p[i] = orig;
    const double step = static_cast<double>(up) - static_cast<double>(down);
    worst = std::max(worst, std::fabs((fp - fm) / step - grad[i]));
  }
  CHECK(worst <= 1e-3 * std::max(scale, 1e-6));
}

TEST_CASE("train_step basics") {
  SUBCASE("zero learning rate leaves parameters unchanged") {
    GanConfig cfg = tiny_config();
    cfg.lr = 0.0;
    TrainState st = init_train_state(cfg);
    const std::vector<float> gen0 = st.gen_params;
    const std::vector<float> disc0 = st.disc_params;
    Rng rng(47);
    net::Tensor4 real = random_real_batch(rng, cfg.batch_size, cfg.side);
    net::Tensor4 z = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
    train_step(st, real, z);
    CHECK(st.iter == 1);
    CHECK(st.gen_params == gen0);
    CHECK(st.disc_params == disc0);
  }

  SUBCASE("identical runs produce identical state hashes") {
    for (int variant = 0; variant < 2; ++variant) {
      GanConfig cfg = tiny_config();
      cfg.penalty_weight = variant == 0 ? 0.0 : 1.0;
      std::uint64_t h1, h2;
      for (int run = 0; run < 2; ++run) {
        TrainState st = init_train_state(cfg);
        Rng data_rng(123);
        for (int i = 0; i < 3; ++i) {
          net::Tensor4 real = random_real_batch(data_rng, cfg.batch_size, cfg.side);
          net::Tensor4 z = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
          train_step(st, real, z);
        }
        (run == 0 ? h1 : h2) = state_hash(st);
      }
      CHECK(h1 == h2);
    }
  }

  SUBCASE("epsilon resolves from the first real batch") {
    GanConfig cfg = tiny_config();
    cfg.penalty_weight = 1.0;
    cfg.epsilon = 0.0;
    TrainState st = init_train_state(cfg);
    CHECK_FALSE(st.epsilon_resolved);
    Rng rng(53);
    net::Tensor4 real = random_real_batch(rng, cfg.batch_size, cfg.side);
    net::Tensor4 z = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
    train_step(st, real, z);
    CHECK(st.epsilon_resolved);
    CHECK(st.epsilon_used > 0.0);
  }

  SUBCASE("gmm toy run: generator loss decreases (5-seed median)") {
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GanConfig cfg;
      cfg.arch = ArchKind::gmm2d;
      cfg.latent_dim = 8;
      cfg.batch_size = 64;
      cfg.penalty_weight = 1.0;
      cfg.seed = seed;
      TrainState st = init_train_state(cfg);
      auto spec = metrics::GmmSpec::ring();
      Matrix pts = metrics::gmm_sample(spec, 4096, seed);
      std::size_t cursor = 0;
      double first = 0.0, last = 0.0;
      for (int iter = 0; iter < 200; ++iter) {
        net::Tensor4 real(cfg.batch_size, 2, 1, 1);
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
          real.data[i * 2] = pts(cursor % 4096, 0);
          real.data[i * 2 + 1] = pts(cursor % 4096, 1);
          ++cursor;
        }
        net::Tensor4 z = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
        StepStats stats = train_step(st, real, z);
        if (iter == 0) first = stats.g_total;
        last = stats.g_total;
      }
      ratios.push_back((first - last) / std::max(first, 1e-12));
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(ratios[2] >= 0.2);  // median
  }
}

TEST_CASE("checkpoint round trip") {
  GanConfig cfg = tiny_config();
  cfg.penalty_weight = 1.0;
  TrainState st = init_train_state(cfg);
  Rng rng(61);
  net::Tensor4 real = random_real_batch(rng, cfg.batch_size, cfg.side);
  net::Tensor4 z = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
  train_step(st, real, z);

  const std::string path = temp_path("sg_ckpt.bin");
  save_checkpoint(st, path, 0xDEADBEEFULL);

  SUBCASE("load restores every field bit-exactly") {
    LoadedCheckpoint lc = load_checkpoint(path);
    CHECK(lc.config_hash == 0xDEADBEEFULL);
    CHECK(lc.state.iter == st.iter);
    CHECK(lc.state.gen_params == st.gen_params);
    CHECK(lc.state.disc_params == st.disc_params);
    CHECK(lc.state.gen_opt.m == st.gen_opt.m);
    CHECK(lc.state.gen_opt.v == st.gen_opt.v);
    CHECK(lc.state.disc_opt.t == st.disc_opt.t);
    CHECK(lc.state.rng.state() == st.rng.state());
    CHECK(lc.state.dfn_real_ema == st.dfn_real_ema);
    CHECK(lc.state.epsilon_used == st.epsilon_used);
    CHECK(state_hash(lc.state) == state_hash(st));

    // resumed training matches uninterrupted training
    net::Tensor4 real2 = random_real_batch(rng, cfg.batch_size, cfg.side);
    net::Tensor4 za = sample_latent(st.rng, cfg.batch_size, cfg.latent_dim);
    net::Tensor4 zb = sample_latent(lc.state.rng, cfg.batch_size, cfg.latent_dim);
    train_step(st, real2, za);
    train_step(lc.state, real2, zb);
    CHECK(state_hash(st) == state_hash(lc.state));
  }

  SUBCASE("truncated file fails the checksum") {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 7);
    const std::string tpath = temp_path("sg_ckpt_trunc.bin");
    std::ofstream(tpath, std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(load_checkpoint(tpath), ChecksumError);
  }

  SUBCASE("bumped version byte is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes[4] = 2;
    const std::string vpath = temp_path("sg_ckpt_ver.bin");
    std::ofstream(vpath, std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(load_checkpoint(vpath), VersionMismatch);
  }
}

TEST_CASE("gmm2d dfn path: scatter matrices are normal, penalty stays inert") {
  GanConfig cfg;
  cfg.arch = ArchKind::gmm2d;
  cfg.latent_dim = 8;
  cfg.batch_size = 32;
  cfg.seed = 7;

  Rng rng(71);
  net::Tensor4 pts(32, 2, 1, 1);
  for (double& v : pts.data) v = rng.normal();
  Matrix scatter = batch_scatter_matrix(pts);
  CHECK(scatter(0, 1) == doctest::Approx(scatter(1, 0)));
  CHECK(la::dfn(scatter) <= 1e-10 * (1.0 + frobenius_norm_sq(scatter)));

  // baseline and dfn-variant trajectories coincide exactly
  GanConfig base = cfg;
  base.penalty_weight = 0.0;
  GanConfig dfnv = cfg;
  dfnv.penalty_weight = 1.0;
  TrainState st_base = init_train_state(base);
  TrainState st_dfn = init_train_state(dfnv);
  Rng data_rng(83);
  for (int i = 0; i < 5; ++i) {
    net::Tensor4 real(cfg.batch_size, 2, 1, 1);
    for (double& v : real.data) v = data_rng.normal();
    net::Tensor4 z1 = sample_latent(st_base.rng, cfg.batch_size, cfg.latent_dim);
    net::Tensor4 z2 = sample_latent(st_dfn.rng, cfg.batch_size, cfg.latent_dim);
    train_step(st_base, real, z1);
    train_step(st_dfn, real, z2);
  }
  CHECK(st_base.gen_params == st_dfn.gen_params);
  CHECK(st_base.disc_params == st_dfn.disc_params);
}
