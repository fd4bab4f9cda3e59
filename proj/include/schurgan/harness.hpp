#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "schurgan/config.hpp"

namespace schurgan::harness {

// Exit codes: 0 success, 1 total failure, 2 partial (some inputs failed).

int cmd_make_spectrograms(const io::ExperimentConfig& cfg, std::ostream& log);

int cmd_train(const io::ExperimentConfig& cfg, std::ostream& log);

int cmd_eval(const io::ExperimentConfig& cfg, const std::string& checkpoint_path,
             bool with_fid, bool with_snr, std::ostream& log);

int cmd_gmm_benchmark(const io::ExperimentConfig& cfg, std::ostream& log);

int cmd_dfn(const std::vector<std::string>& paths, std::ostream& log);

// Variant label recovered from the LS targets and penalty weight.
std::string variant_name(const gan::GanConfig& cfg);

// Paths used by the pipeline stages.
std::string spectrogram_manifest_path(const io::ExperimentConfig& cfg);
std::string checkpoint_dir(const io::ExperimentConfig& cfg);

}  // namespace schurgan::harness
