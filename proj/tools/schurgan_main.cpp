#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "schurgan/config.hpp"
#include "schurgan/harness.hpp"

using namespace schurgan;

namespace {

io::ExperimentConfig resolve_config(const std::string& config_path,
                                    const std::vector<std::string>& overrides,
                                    const std::string& seed_override,
                                    const std::string& out_override) {
  io::KvMap kv;
  if (!config_path.empty()) kv = io::load_kv_file(config_path);
  io::apply_overrides(kv, overrides);
  if (!seed_override.empty()) kv["seed"] = seed_override;
  if (!out_override.empty()) kv["out_dir"] = out_override;
  return io::ExperimentConfig::from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"departure-from-normality spectrogram GAN toolkit"};
  app.require_subcommand(1);

  std::string config_path, seed_override, out_override;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed_override, "seed override");
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--set", overrides, "key=value override (repeatable)");

  auto* make = app.add_subcommand("make-spectrograms",
                                  "build spectrogram tensors from a wav manifest");
  auto* train = app.add_subcommand("train", "train the configured model variant");
  auto* eval_fid = app.add_subcommand("eval", "evaluate a checkpoint (fid + snr)");
  eval_fid->alias("eval-fid");
  std::string eval_ckpt;
  eval_fid->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  auto* eval_snr = app.add_subcommand("eval-snr", "evaluate snr only");
  std::string snr_ckpt;
  eval_snr->add_option("checkpoint", snr_ckpt, "checkpoint file")->required();
  auto* gmm = app.add_subcommand("gmm-benchmark",
                                 "mode-collapse benchmark over the four variants");
  auto* dfn = app.add_subcommand("dfn", "print departure-from-normality of tensor files");
  std::vector<std::string> dfn_paths;
  dfn->add_option("files", dfn_paths, "square tensor files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (dfn->parsed()) return harness::cmd_dfn(dfn_paths, std::cout);

    const io::ExperimentConfig cfg =
        resolve_config(config_path, overrides, seed_override, out_override);
    if (make->parsed()) return harness::cmd_make_spectrograms(cfg, std::cout);
    if (train->parsed()) return harness::cmd_train(cfg, std::cout);
    if (eval_fid->parsed()) return harness::cmd_eval(cfg, eval_ckpt, true, true, std::cout);
    if (eval_snr->parsed()) return harness::cmd_eval(cfg, snr_ckpt, false, true, std::cout);
    if (gmm->parsed()) return harness::cmd_gmm_benchmark(cfg, std::cout);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
