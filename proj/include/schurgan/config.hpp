#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "schurgan/cwt.hpp"
#include "schurgan/gan.hpp"

namespace schurgan::io {

// Flat key=value configuration. The sorted canonical text is what gets
// hashed, so reordered files and override paths hash identically.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_text(const std::string& text);
KvMap load_kv_file(const std::string& path);
std::string canonical_kv_text(const KvMap& kv);
std::uint64_t kv_hash(const KvMap& kv);

// "key=value" strings from the command line, applied over the file.
void apply_overrides(KvMap& kv, const std::vector<std::string>& overrides);

struct ManifestEntry {
  std::string path;
  std::string label;
  double duration = 0.0;
};

struct DatasetManifest {
  std::string split;
  std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

struct ExperimentConfig {
  KvMap raw;

  std::string manifest_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  // spectrogram pipeline
  double frame_ms = 50.0;
  double overlap = 0.5;
  std::size_t n = 32;
  double omega0 = 6.0;
  double f_min = 40.0;
  double f_max_fraction = 0.95;
  double target_rate = 16000.0;
  std::vector<sig::ScaleKind> scale_kinds = {sig::ScaleKind::linear, sig::ScaleKind::log,
                                             sig::ScaleKind::logRe};
  std::vector<double> pitch_scales = {0.75, 0.9, 1.15, 1.5};
  double augment_below_seconds = 2.0;
  bool export_png = false;

  // training
  gan::GanConfig gan;
  sig::ScaleKind train_kind = sig::ScaleKind::log;
  std::size_t max_iters = 5000;

  // evaluation
  std::size_t fid_sample_count = 256;
  std::size_t snr_sample_count = 16;
  std::uint64_t embed_seed = 1234;

  // gmm benchmark
  std::size_t gmm_repeats = 5;
  std::size_t gmm_iters = 5000;
  std::size_t gmm_eval_samples = 2000;

  static ExperimentConfig from_kv(const KvMap& kv);
  std::uint64_t hash() const { return kv_hash(raw); }
};

// Applies the named model variant (lsgan011, lsgan-110, with/without
// _dfn suffix) onto the gan targets and penalty.
void apply_variant(gan::GanConfig& cfg, const std::string& variant);
std::vector<std::string> all_variants();

}  // namespace schurgan::io
