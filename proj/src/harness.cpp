#include "schurgan/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "schurgan/cwt.hpp"
#include "schurgan/metrics.hpp"
#include "schurgan/png_io.hpp"
#include "schurgan/signal.hpp"
#include "schurgan/tensor_file.hpp"

namespace schurgan::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return fnv1a(bytes.data(), bytes.size());
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

struct SpectrogramIndexEntry {
  std::string file;
  std::string source;
  std::string tag;   // orig / ps<scale>
  std::string kind;  // linear / log / logRe
  std::string phase_ref;
};

void write_spectrogram_index(const std::string& path,
                             const std::vector<SpectrogramIndexEntry>& entries,
                             std::uint64_t config_hash, std::uint64_t seed) {
  json j;
  j["config_hash"] = hex64(config_hash);
  j["seed"] = seed;
  j["items"] = json::array();
  for (const auto& e : entries)
    j["items"].push_back({{"file", e.file},
                          {"source", e.source},
                          {"tag", e.tag},
                          {"kind", e.kind},
                          {"phase_ref", e.phase_ref}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<SpectrogramIndexEntry> read_spectrogram_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spectrogram index: " + path);
  json j;
  in >> j;
  std::vector<SpectrogramIndexEntry> out;
  for (const auto& item : j.at("items"))
    out.push_back({item.at("file").get<std::string>(), item.at("source").get<std::string>(),
                   item.at("tag").get<std::string>(), item.at("kind").get<std::string>(),
                   item.at("phase_ref").get<std::string>()});
  return out;
}

// Dataset affine map to the generator's tanh range.
struct Normalization {
  double lo = 0.0, hi = 1.0;
  double to_unit(double v) const { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
  double from_unit(double v) const { return lo + (v + 1.0) * 0.5 * (hi - lo); }
};

Normalization dataset_range(const std::vector<Matrix>& mats) {
  Normalization n;
  n.lo = 1e300;
  n.hi = -1e300;
  for (const Matrix& m : mats)
    for (double v : m.data()) {
      n.lo = std::min(n.lo, v);
      n.hi = std::max(n.hi, v);
    }
  if (!(n.hi > n.lo)) n.hi = n.lo + 1.0;
  return n;
}

struct TrainData {
  std::vector<Matrix> mats;
  std::vector<SpectrogramIndexEntry> entries;  // aligned with mats
  Normalization norm;
};

TrainData load_train_data(const io::ExperimentConfig& cfg, sig::ScaleKind kind) {
  TrainData data;
  const auto index = read_spectrogram_index(spectrogram_manifest_path(cfg));
  const std::string kind_name = sig::scale_kind_name(kind);
  for (const auto& e : index) {
    if (e.kind != kind_name) continue;
    io::TensorFile t = io::read_tensor(e.file);
    data.mats.push_back(t.as_matrix());
    data.entries.push_back(e);
  }
  if (data.mats.empty())
    throw std::runtime_error("no spectrograms of kind " + kind_name +
                             " found; run make-spectrograms first");
  data.norm = dataset_range(data.mats);
  return data;
}

net::Tensor4 batch_from(const std::vector<Matrix>& mats, const std::vector<std::size_t>& idx,
                        const Normalization& norm, std::size_t n) {
  net::Tensor4 t(idx.size(), 1, n, n);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Matrix& m = mats[idx[b]];
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) t.at(b, 0, y, x) = norm.to_unit(m(y, x));
  }
  return t;
}

json eval_record(std::uint64_t iter, double fid, double snr_mean, const json& modes,
                 double dfn_gap) {
  json r;
  r["iter"] = iter;
  r["fid"] = fid;
  r["snr_mean"] = snr_mean;
  r["modes_detected"] = modes;
  r["dfn_gap"] = dfn_gap;
  return r;
}

net::Tensor4 generate_batch(const net::Net& gen, const std::vector<float>& params,
                            Rng& rng, std::size_t count, std::size_t latent_dim) {
  net::Tensor4 z = gan::sample_latent(rng, count, latent_dim);
  return gen.forward(params, z);
}

}  // namespace

std::string variant_name(const gan::GanConfig& cfg) {
  std::string base;
  if (cfg.a == 0.0 && cfg.b == 1.0 && cfg.c == 1.0) {
    base = "lsgan011";
  } else if (cfg.a == -1.0 && cfg.b == 1.0 && cfg.c == 0.0) {
    base = "lsgan-110";
  } else {
    std::ostringstream os;
    os << "lsgan_a" << cfg.a << "_b" << cfg.b << "_c" << cfg.c;
    base = os.str();
  }
  const bool dfn = cfg.penalty_weight > 0.0 || cfg.penalty_mode == gan::PenaltyMode::lagrange;
  return dfn ? base + "_dfn" : base;
}

std::string spectrogram_manifest_path(const io::ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "spectrograms.json").string();
}

std::string checkpoint_dir(const io::ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "checkpoints" / variant_name(cfg.gan)).string();
}

int cmd_make_spectrograms(const io::ExperimentConfig& cfg, std::ostream& log) {
  const io::DatasetManifest manifest = io::load_manifest(cfg.manifest_path);
  const std::uint64_t config_hash = cfg.hash();
  const fs::path spec_dir = fs::path(cfg.out_dir) / "spectrograms";
  fs::create_directories(spec_dir);

  sig::MorletConfig morlet;
  morlet.frame_ms = cfg.frame_ms;
  morlet.overlap = cfg.overlap;
  morlet.n_scales = cfg.n;
  morlet.omega0 = cfg.omega0;
  morlet.f_min = cfg.f_min;
  morlet.f_max_fraction = cfg.f_max_fraction;

  std::vector<SpectrogramIndexEntry> index;
  std::size_t written = 0, skipped = 0, failed = 0;

  for (std::size_t ei = 0; ei < manifest.entries.size(); ++ei) {
    const auto& entry = manifest.entries[ei];
    try {
      const std::uint64_t src_hash = file_content_hash(entry.path);
      const std::string source_id = entry.path + "#" + hex64(src_hash);
      sig::Signal raw = sig::load_wav(entry.path);
      const double source_seconds = raw.duration_seconds();
      sig::Signal base = sig::resample(raw, cfg.target_rate);

      std::vector<std::pair<std::string, sig::Signal>> variants;
      variants.emplace_back("orig", std::move(base));
      if (source_seconds < cfg.augment_below_seconds) {
        for (double scale : cfg.pitch_scales) {
          std::ostringstream tag;
          tag << "ps" << scale;
          variants.emplace_back(tag.str(), sig::pitch_shift(variants[0].second, scale));
        }
      }

      for (const auto& [tag, signal] : variants) {
        const std::string stem =
            std::to_string(ei) + "__" + stem_of(entry.path) + "__" + tag;
        const std::string phase_path = (spec_dir / (stem + "__phase.dfnt")).string();

        bool phase_fresh = false;
        if (fs::exists(phase_path)) {
          try {
            const io::TensorFile head = io::read_tensor_header(phase_path);
            phase_fresh = head.config_hash == config_hash && head.source_id == source_id;
          } catch (const std::exception&) {
            phase_fresh = false;
          }
        }

        sig::ComplexSpectrogram cwt;
        bool have_cwt = false;
        if (!phase_fresh) {
          cwt = sig::cwt_morlet(signal, morlet);
          have_cwt = true;
          io::TensorFile pt;
          pt.config_hash = config_hash;
          pt.seed = cfg.seed;
          pt.scale_kind = sig::ScaleKind::none;
          pt.sample_rate = cwt.sample_rate;
          pt.frame_hop = static_cast<std::uint32_t>(cwt.frame_hop);
          pt.scale_frequencies = cwt.scale_frequencies;
          pt.source_id = source_id;
          pt.set_matrix(cwt.phase);
          io::write_tensor(phase_path, pt);
          ++written;
        } else {
          ++skipped;
        }

        for (sig::ScaleKind kind : cfg.scale_kinds) {
          const std::string out_path =
              (spec_dir / (stem + "__" + sig::scale_kind_name(kind) + ".dfnt")).string();
          bool fresh = false;
          if (fs::exists(out_path)) {
            try {
              const io::TensorFile head = io::read_tensor_header(out_path);
              fresh = head.config_hash == config_hash && head.source_id == source_id;
            } catch (const std::exception&) {
              fresh = false;
            }
          }
          if (!fresh) {
            if (!have_cwt) {
              cwt = sig::cwt_morlet(signal, morlet);
              have_cwt = true;
            }
            sig::Spectrogram view = sig::magnitude_view(cwt, kind);
            sig::Spectrogram square = sig::resize_bilinear(view, cfg.n);
            io::TensorFile t;
            t.config_hash = config_hash;
            t.seed = cfg.seed;
            t.scale_kind = kind;
            t.sample_rate = cwt.sample_rate;
            t.frame_hop = static_cast<std::uint32_t>(cwt.frame_hop);
            t.scale_frequencies = cwt.scale_frequencies;
            t.source_id = source_id;
            t.phase_ref = phase_path;
            t.set_matrix(square.data);
            io::write_tensor(out_path, t);
            if (cfg.export_png)
              io::write_png_gray(out_path + ".png", square.data);
            ++written;
          } else {
            ++skipped;
          }
          index.push_back({out_path, source_id, tag, sig::scale_kind_name(kind), phase_path});
        }
      }
    } catch (const std::exception& ex) {
      ++failed;
      log << "error: " << entry.path << ": " << ex.what() << "\n";
    }
  }

  write_spectrogram_index(spectrogram_manifest_path(cfg), index, config_hash, cfg.seed);
  log << "spectrograms: " << written << " written, " << skipped << " up to date, " << failed
      << " failed\n";
  if (failed > 0 && index.empty()) return 1;
  return failed > 0 ? 2 : 0;
}

int cmd_train(const io::ExperimentConfig& cfg, std::ostream& log) {
  const std::uint64_t config_hash = cfg.hash();
  const TrainData data = load_train_data(cfg, cfg.train_kind);
  const std::string variant = variant_name(cfg.gan);
  const fs::path ckpt_dir = checkpoint_dir(cfg);
  fs::create_directories(ckpt_dir);
  const std::string metrics_path =
      (fs::path(cfg.out_dir) / ("train_" + variant + ".jsonl")).string();
  std::ofstream metrics(metrics_path);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);

  gan::TrainState st = gan::init_train_state(cfg.gan);
  const std::size_t batch = cfg.gan.batch_size;
  const net::Net gen = gan::build_generator(cfg.gan);

  auto emit_checkpoint = [&](const gan::StepStats* stats) {
    const std::string path =
        (ckpt_dir / ("ckpt_" + std::to_string(st.iter) + ".bin")).string();
    gan::save_checkpoint(st, path, config_hash);
    json rec;
    rec["iter"] = st.iter;
    rec["variant"] = variant;
    if (stats) {
      rec["d_loss"] = stats->d_loss;
      rec["g_loss"] = stats->g_total;
      rec["g_penalty"] = stats->g_penalty;
      if (stats->dfn_evaluated) {
        rec["dfn_gap"] = stats->dfn_gap;
      } else {
        // reference-only gap for plain LS-GAN runs, computed at emission
        Rng probe = Rng::stream(cfg.seed, 0xD0F ^ st.iter);
        std::vector<std::size_t> idx(batch);
        for (auto& v : idx) v = probe.below(data.mats.size());
        const net::Tensor4 real = batch_from(data.mats, idx, data.norm, cfg.n);
        net::Tensor4 z = gan::sample_latent(probe, batch, cfg.gan.latent_dim);
        const net::Tensor4 fake = gen.forward(st.gen_params, z);
        rec["dfn_gap"] = std::fabs(gan::batch_dfn_mean(cfg.gan, fake) -
                                   gan::batch_dfn_mean(cfg.gan, real));
      }
    }
    metrics << rec.dump() << "\n";
    return path;
  };

  std::string last_good = emit_checkpoint(nullptr);

  std::vector<std::size_t> order(data.mats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // trigger reshuffle on first use

  try {
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
      std::vector<std::size_t> idx(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        if (cursor >= order.size()) {
          for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[st.rng.below(i)]);
          cursor = 0;
        }
        idx[b] = order[cursor++];
      }
      const net::Tensor4 real = batch_from(data.mats, idx, data.norm, cfg.n);
      const net::Tensor4 z = gan::sample_latent(st.rng, batch, cfg.gan.latent_dim);
      const gan::StepStats stats = gan::train_step(st, real, z);
      if (st.iter % cfg.gan.checkpoint_every == 0 || st.iter == cfg.max_iters)
        last_good = emit_checkpoint(&stats);
    }
  } catch (const gan::NonFiniteLoss& ex) {
    log << "aborted: " << ex.what() << "; last good checkpoint: " << last_good << "\n";
    return 1;
  }

  log << "trained " << variant << " for " << st.iter << " iterations; checkpoints in "
      << ckpt_dir.string() << "\n";
  return 0;
}

int cmd_eval(const io::ExperimentConfig& cfg, const std::string& checkpoint_path,
             bool with_fid, bool with_snr, std::ostream& log) {
  const std::uint64_t config_hash = cfg.hash();
  gan::LoadedCheckpoint lc = gan::load_checkpoint(checkpoint_path);
  if (lc.config_hash != config_hash) {
    log << "error: checkpoint config hash " << hex64(lc.config_hash)
        << " does not match current config " << hex64(config_hash) << "\n";
    return 1;
  }
  const gan::GanConfig& gcfg = lc.state.config;
  const std::string variant = variant_name(gcfg);
  const net::Net gen = gan::build_generator(gcfg);

  json report;
  report["config_hash"] = hex64(config_hash);
  report["seed"] = cfg.seed;
  report["variant"] = variant;
  report["iter"] = lc.state.iter;
  report["rows"] = json::array();

  std::ostringstream table;
  table << "variant=" << variant << " iter=" << lc.state.iter << "\n";
  table << "kind        fid           snr_mean_db   snr_excluded\n";

  const TrainData data = load_train_data(cfg, cfg.train_kind);

  double fid = std::nan("");
  if (with_fid) {
    const std::size_t count = std::min(cfg.fid_sample_count, data.mats.size());
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    const net::Tensor4 real = batch_from(data.mats, idx, data.norm, cfg.n);
    const Matrix real_feat = metrics::feature_embed(real, cfg.embed_seed);

    Rng zrng = Rng::stream(cfg.seed, 0xF1D ^ lc.state.iter);
    const net::Tensor4 fake =
        generate_batch(gen, lc.state.gen_params, zrng, cfg.fid_sample_count, gcfg.latent_dim);
    const Matrix fake_feat = metrics::feature_embed(fake, cfg.embed_seed);
    fid = metrics::frechet_distance(metrics::gaussian_stats(real_feat),
                                    metrics::gaussian_stats(fake_feat));
  }

  double snr_mean = std::nan("");
  std::size_t snr_excluded = 0;
  if (with_snr) {
    Rng pick = Rng::stream(cfg.seed, 0x5A6 ^ lc.state.iter);
    double snr_acc = 0.0;
    std::size_t snr_count = 0;
    for (std::size_t k = 0; k < cfg.snr_sample_count; ++k) {
      const std::size_t ri = pick.below(data.mats.size());
      const io::TensorFile real_t = io::read_tensor(data.entries[ri].file);
      const io::TensorFile phase_t = io::read_tensor(data.entries[ri].phase_ref);
      const Matrix phase = phase_t.as_matrix();

      net::Tensor4 z = gan::sample_latent(pick, 1, gcfg.latent_dim);
      const net::Tensor4 fake = gen.forward(lc.state.gen_params, z);
      Matrix fake_map(cfg.n, cfg.n);
      for (std::size_t y = 0; y < cfg.n; ++y)
        for (std::size_t x = 0; x < cfg.n; ++x)
          fake_map(y, x) = data.norm.from_unit(fake.at(0, 0, y, x));

      const Matrix gen_mag = sig::unmap_magnitude(
          sig::resize_bilinear(fake_map, phase.rows(), phase.cols()), real_t.scale_kind);
      const Matrix real_mag = sig::unmap_magnitude(
          sig::resize_bilinear(real_t.as_matrix(), phase.rows(), phase.cols()),
          real_t.scale_kind);
      try {
        const sig::Signal recon_real =
            sig::invert_cwt(real_mag, phase, phase_t.scale_frequencies, phase_t.frame_hop,
                            phase_t.sample_rate, cfg.omega0);
        const sig::Signal gen_sig =
            sig::invert_cwt(gen_mag, phase, phase_t.scale_frequencies, phase_t.frame_hop,
                            phase_t.sample_rate, cfg.omega0);
        snr_acc += sig::snr_db(recon_real, gen_sig);
        ++snr_count;
      } catch (const sig::ZeroPowerGenerated&) {
        ++snr_excluded;
      }
    }
    if (snr_count > 0) snr_mean = snr_acc / static_cast<double>(snr_count);
  }

  json row;
  row["kind"] = sig::scale_kind_name(cfg.train_kind);
  row["fid"] = fid;
  row["snr_mean_db"] = snr_mean;
  row["snr_excluded"] = snr_excluded;
  report["rows"].push_back(row);
  report["records"] = json::array();
  report["records"].push_back(
      eval_record(lc.state.iter, fid, snr_mean, nullptr, lc.state.dfn_real_ema));

  char fid_s[32], snr_s[32];
  std::snprintf(fid_s, sizeof(fid_s), "%.6g", fid);
  std::snprintf(snr_s, sizeof(snr_s), "%.6g", snr_mean);
  table << sig::scale_kind_name(cfg.train_kind) << "  " << fid_s << "  " << snr_s << "  "
        << snr_excluded << "\n";

  const std::string base = (fs::path(cfg.out_dir) /
                            ("eval_" + variant + "_" + std::to_string(lc.state.iter)))
                               .string();
  std::ofstream(base + ".json") << report.dump(2) << "\n";
  std::ofstream(base + ".txt") << table.str();
  log << table.str();
  return 0;
}

int cmd_gmm_benchmark(const io::ExperimentConfig& cfg, std::ostream& log) {
  const std::uint64_t config_hash = cfg.hash();
  const metrics::GmmSpec spec = metrics::GmmSpec::ring();
  fs::create_directories(cfg.out_dir);

  json report;
  report["config_hash"] = hex64(config_hash);
  report["seed"] = cfg.seed;
  report["rows"] = json::array();

  std::ostringstream table;
  table << "variant          mean_modes  per_mode_mean_counts\n";

  for (const std::string& variant : io::all_variants()) {
    std::vector<std::size_t> detected;
    std::vector<double> per_mode_mean(10, 0.0);
    for (std::size_t rep = 0; rep < cfg.gmm_repeats; ++rep) {
      gan::GanConfig gcfg;
      gcfg.arch = gan::ArchKind::gmm2d;
      gcfg.latent_dim = 8;
      gcfg.batch_size = 64;
      gcfg.seed = cfg.seed + rep;
      gcfg.penalty_weight = 1.0;
      io::apply_variant(gcfg, variant);

      gan::TrainState st = gan::init_train_state(gcfg);
      const Matrix pool = metrics::gmm_sample(spec, 8192, cfg.seed + rep);
      std::size_t cursor = 0;
      for (std::size_t it = 0; it < cfg.gmm_iters; ++it) {
        net::Tensor4 real(gcfg.batch_size, 2, 1, 1);
        for (std::size_t b = 0; b < gcfg.batch_size; ++b) {
          real.data[b * 2] = pool(cursor % pool.rows(), 0);
          real.data[b * 2 + 1] = pool(cursor % pool.rows(), 1);
          ++cursor;
        }
        const net::Tensor4 z = gan::sample_latent(st.rng, gcfg.batch_size, gcfg.latent_dim);
        gan::train_step(st, real, z);
      }

      const net::Net gen = gan::build_generator(gcfg);
      Rng eval_rng = Rng::stream(cfg.seed + rep, 0xE7A1);
      const net::Tensor4 out = generate_batch(gen, st.gen_params, eval_rng,
                                              cfg.gmm_eval_samples, gcfg.latent_dim);
      Matrix pts(cfg.gmm_eval_samples, 2);
      for (std::size_t i = 0; i < cfg.gmm_eval_samples; ++i) {
        pts(i, 0) = out.data[i * 2];
        pts(i, 1) = out.data[i * 2 + 1];
      }
      const metrics::ModeReport mr = metrics::count_modes(pts, spec);
      detected.push_back(mr.detected);
      for (std::size_t m = 0; m < 10; ++m)
        per_mode_mean[m] += static_cast<double>(mr.per_mode[m]) /
                            static_cast<double>(cfg.gmm_repeats);
    }

    double mean_modes = 0.0;
    for (std::size_t d : detected) mean_modes += static_cast<double>(d);
    mean_modes /= static_cast<double>(detected.size());

    json row;
    row["variant"] = variant;
    row["mean_modes"] = mean_modes;
    row["detected_per_seed"] = detected;
    row["per_mode_mean_counts"] = per_mode_mean;
    report["rows"].push_back(row);

    table << variant;
    for (std::size_t pad = variant.size(); pad < 17; ++pad) table << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%-10.2f", mean_modes);
    table << buf << " [";
    for (std::size_t m = 0; m < 10; ++m) {
      std::snprintf(buf, sizeof(buf), "%.0f", per_mode_mean[m]);
      table << (m ? "," : "") << buf;
    }
    table << "]\n";
  }

  const std::string base = (fs::path(cfg.out_dir) / "gmm_report").string();
  std::ofstream(base + ".json") << report.dump(2) << "\n";
  std::ofstream(base + ".txt") << table.str();
  log << table.str();
  return 0;
}

int cmd_dfn(const std::vector<std::string>& paths, std::ostream& log) {
  if (paths.empty()) {
    log << "error: no input files\n";
    return 1;
  }
  std::size_t failed = 0;
  std::vector<double> values;
  for (const std::string& path : paths) {
    try {
      const io::TensorFile t = io::read_tensor(path);
      const Matrix m = t.as_matrix();
      if (!m.square()) throw std::runtime_error("matrix is not square");
      const double v = la::dfn(m);
      values.push_back(v);
      log << path << " " << v << "\n";
    } catch (const std::exception& ex) {
      ++failed;
      log << path << " error: " << ex.what() << "\n";
    }
  }
  if (!values.empty()) {
    double mean = 0.0, lo = values[0], hi = values[0];
    for (double v : values) {
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= static_cast<double>(values.size());
    log << "summary: count=" << values.size() << " mean=" << mean << " min=" << lo
        << " max=" << hi << "\n";
  }
  if (values.empty()) return 1;
  return failed > 0 ? 2 : 0;
}

}  // namespace schurgan::harness
