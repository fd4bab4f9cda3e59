#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "schurgan/linalg.hpp"
#include "schurgan/matrix.hpp"
#include "schurgan/net.hpp"
#include "schurgan/rng.hpp"

namespace schurgan::gan {

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};
struct VersionMismatch : std::runtime_error {
  explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct ChecksumError : std::runtime_error {
  explicit ChecksumError(const std::string& what) : std::runtime_error(what) {}
};

enum class PenaltyMode : std::uint8_t { hinge = 0, lagrange = 1 };
enum class ArchKind : std::uint8_t { spectrogram = 0, gmm2d = 1 };

struct GanConfig {
  // least-squares targets
  double a = 0.0, b = 1.0, c = 1.0;
  // departure-from-normality constraint
  double epsilon = 0.0;  // <= 0 resolves via suggest_epsilon on the first real batch
  double penalty_weight = 1.0;
  PenaltyMode penalty_mode = PenaltyMode::hinge;
  double lagrange_eta = 0.01;
  ArchKind arch = ArchKind::spectrogram;
  std::size_t latent_dim = 64;
  std::size_t side = 32;  // n; generator output is side x side
  std::size_t base_channels = 16;
  std::size_t batch_size = 16;
  double lr = 2e-4;
  double beta1 = 0.5, beta2 = 0.999;
  double ema_decay = 0.99;
  std::uint64_t seed = 1;
  std::uint64_t checkpoint_every = 500;
  bool d_loss_symmetric = false;  // halve both terms instead of the real one only

  void validate() const;
};

struct AdamOpt {
  std::vector<float> m, v;
  std::uint64_t t = 0;
};

struct TrainState {
  GanConfig config;
  std::vector<float> gen_params, disc_params;
  AdamOpt gen_opt, disc_opt;
  std::uint64_t iter = 0;
  Rng rng;  // drives z draws and data shuffles in the training loop
  double dfn_real_ema = 0.0;
  bool ema_initialized = false;
  double epsilon_used = 0.0;
  bool epsilon_resolved = false;
  double lambda_p = 0.0;  // current penalty weight (grows in lagrange mode)
};

net::Net build_generator(const GanConfig& cfg);
net::Net build_discriminator(const GanConfig& cfg);
TrainState init_train_state(const GanConfig& cfg);

// 0.5 E[(D(x) - b)^2] + E[(D(G(z)) - a)^2], as printed; the symmetric
// variant halves the fake term as well.
double d_loss(const std::vector<double>& scores_real, const std::vector<double>& scores_fake,
              double a, double b, bool symmetric = false);

struct GLossParts {
  double total = 0.0;
  double ls = 0.0;
  double penalty = 0.0;
};

// 0.5 E[(D(G(z)) - c)^2] + lambda_p * max(0, |dfn_fake - dfn_real| - eps).
GLossParts g_loss(const std::vector<double>& scores_fake, double c, double dfn_fake_mean,
                  double dfn_real_mean, double epsilon, double lambda_p);

// Channel-0 map of one batch member as a square matrix.
Matrix sample_map(const net::Tensor4& batch, std::size_t index);

// Centered 2x2 scatter matrix of a batch of 2-D points (gmm2d mode).
Matrix batch_scatter_matrix(const net::Tensor4& batch);

net::Tensor4 sample_latent(Rng& rng, std::size_t batch, std::size_t latent_dim);

struct StepStats {
  double d_loss = 0.0;
  double g_total = 0.0, g_ls = 0.0, g_penalty = 0.0;
  double dfn_fake_mean = 0.0, dfn_real_ema = 0.0, dfn_gap = 0.0;
  bool dfn_evaluated = false;
};

// One discriminator update then one generator update on the same z batch.
StepStats train_step(TrainState& state, const net::Tensor4& real_batch,
                     const net::Tensor4& z_batch);

// Mean dfn over a batch under the config's arch (per-sample maps for
// spectrogram outputs, one scatter matrix for 2-D points).
double batch_dfn_mean(const GanConfig& cfg, const net::Tensor4& batch);

void save_checkpoint(const TrainState& state, const std::string& path,
                     std::uint64_t config_hash);
struct LoadedCheckpoint {
  TrainState state;
  std::uint64_t config_hash = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

// Hash of the full serialized state; equal states hash equal.
std::uint64_t state_hash(const TrainState& state);

}  // namespace schurgan::gan
