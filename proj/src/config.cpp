#include "schurgan/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace schurgan::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double get_f64(const KvMap& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stod(it->second);
}

std::uint64_t get_u64(const KvMap& kv, const std::string& key, std::uint64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return std::stoull(it->second);
}

std::string get_str(const KvMap& kv, const std::string& key, const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

bool get_bool(const KvMap& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KvMap parse_kv_text(const std::string& text) {
  KvMap kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line with empty key");
    kv[key] = value;
  }
  return kv;
}

KvMap load_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv_text(ss.str());
}

std::string canonical_kv_text(const KvMap& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t kv_hash(const KvMap& kv) {
  const std::string text = canonical_kv_text(kv);
  return fnv1a(text.data(), text.size());
}

void apply_overrides(KvMap& kv, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override without '=': " + o);
    kv[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
  }
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json j;
  in >> j;
  DatasetManifest m;
  m.split = j.value("split", "");
  std::set<std::string> seen;
  for (const auto& item : j.at("items")) {
    ManifestEntry e;
    e.path = item.at("path").get<std::string>();
    e.label = item.value("label", "");
    e.duration = item.value("duration", 0.0);
    if (!seen.insert(e.path).second)
      throw std::invalid_argument("manifest has duplicate path: " + e.path);
    if (!(e.duration > 0.0))
      throw std::invalid_argument("manifest duration must be > 0: " + e.path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["split"] = m.split;
  j["items"] = nlohmann::json::array();
  for (const auto& e : m.entries)
    j["items"].push_back({{"path", e.path}, {"label", e.label}, {"duration", e.duration}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

ExperimentConfig ExperimentConfig::from_kv(const KvMap& kv) {
  ExperimentConfig c;
  c.raw = kv;
  c.manifest_path = get_str(kv, "manifest", "");
  c.out_dir = get_str(kv, "out_dir", "out");
  c.seed = get_u64(kv, "seed", 1);

  c.frame_ms = get_f64(kv, "frame_ms", 50.0);
  c.overlap = get_f64(kv, "overlap", 0.5);
  c.n = static_cast<std::size_t>(get_u64(kv, "n", 32));
  c.omega0 = get_f64(kv, "omega0", 6.0);
  c.f_min = get_f64(kv, "f_min", 40.0);
  c.f_max_fraction = get_f64(kv, "f_max_fraction", 0.95);
  c.target_rate = get_f64(kv, "target_rate", 16000.0);
  c.export_png = get_bool(kv, "export_png", false);
  if (auto it = kv.find("scale_kinds"); it != kv.end()) {
    c.scale_kinds.clear();
    for (const std::string& name : split_csv(it->second))
      c.scale_kinds.push_back(sig::scale_kind_from_name(name));
    if (c.scale_kinds.empty())
      throw std::invalid_argument("scale_kinds must name at least one kind");
  }
  if (auto it = kv.find("pitch_scales"); it != kv.end()) {
    c.pitch_scales.clear();
    for (const std::string& v : split_csv(it->second)) c.pitch_scales.push_back(std::stod(v));
  }
  c.augment_below_seconds = get_f64(kv, "augment_below_seconds", 2.0);

  c.train_kind = sig::scale_kind_from_name(get_str(kv, "train_kind", "log"));
  c.max_iters = static_cast<std::size_t>(get_u64(kv, "max_iters", 5000));

  c.gan.a = get_f64(kv, "gan_a", 0.0);
  c.gan.b = get_f64(kv, "gan_b", 1.0);
  c.gan.c = get_f64(kv, "gan_c", 1.0);
  c.gan.epsilon = get_f64(kv, "gan_epsilon", 0.0);
  c.gan.penalty_weight = get_f64(kv, "gan_penalty_weight", 1.0);
  c.gan.penalty_mode = get_str(kv, "gan_penalty_mode", "hinge") == "lagrange"
                           ? gan::PenaltyMode::lagrange
                           : gan::PenaltyMode::hinge;
  c.gan.lagrange_eta = get_f64(kv, "gan_lagrange_eta", 0.01);
  c.gan.latent_dim = static_cast<std::size_t>(get_u64(kv, "gan_latent_dim", 64));
  c.gan.side = c.n;
  c.gan.base_channels = static_cast<std::size_t>(get_u64(kv, "gan_base_channels", 16));
  c.gan.batch_size = static_cast<std::size_t>(get_u64(kv, "gan_batch_size", 16));
  c.gan.lr = get_f64(kv, "gan_lr", 2e-4);
  c.gan.beta1 = get_f64(kv, "gan_beta1", 0.5);
  c.gan.beta2 = get_f64(kv, "gan_beta2", 0.999);
  c.gan.ema_decay = get_f64(kv, "gan_ema_decay", 0.99);
  c.gan.seed = c.seed;
  c.gan.checkpoint_every = get_u64(kv, "checkpoint_every", 500);
  c.gan.d_loss_symmetric = get_bool(kv, "gan_d_loss_symmetric", false);
  if (auto it = kv.find("variant"); it != kv.end()) apply_variant(c.gan, it->second);

  c.fid_sample_count = static_cast<std::size_t>(get_u64(kv, "fid_sample_count", 256));
  c.snr_sample_count = static_cast<std::size_t>(get_u64(kv, "snr_sample_count", 16));
  c.embed_seed = get_u64(kv, "embed_seed", 1234);

  c.gmm_repeats = static_cast<std::size_t>(get_u64(kv, "gmm_repeats", 5));
  c.gmm_iters = static_cast<std::size_t>(get_u64(kv, "gmm_iters", 5000));
  c.gmm_eval_samples = static_cast<std::size_t>(get_u64(kv, "gmm_eval_samples", 2000));

  c.gan.validate();
  return c;
}

void apply_variant(gan::GanConfig& cfg, const std::string& variant) {
  std::string base = variant;
  bool dfn = false;
  const std::string suffix = "_dfn";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    dfn = true;
    base = base.substr(0, base.size() - suffix.size());
  }
  if (base == "lsgan011") {
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.c = 1.0;
  } else if (base == "lsgan-110") {
    cfg.a = -1.0;
    cfg.b = 1.0;
    cfg.c = 0.0;
  } else {
    throw std::invalid_argument("unknown variant: " + variant);
  }
  cfg.penalty_weight = dfn ? (cfg.penalty_weight > 0.0 ? cfg.penalty_weight : 1.0) : 0.0;
}

std::vector<std::string> all_variants() {
  return {"lsgan011", "lsgan011_dfn", "lsgan-110", "lsgan-110_dfn"};
}

}  // namespace schurgan::io
