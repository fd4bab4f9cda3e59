#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "schurgan/cwt.hpp"
#include "schurgan/matrix.hpp"

namespace schurgan::io {

// Artifact tensor format: "DFNT" magic, version, config hash + seed,
// dtype, scale kind, dims, transform provenance (sample rate, hop, scale
// frequencies, source and phase-reference handles), then row-major
// little-endian f32 payload.
struct TensorFile {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  sig::ScaleKind scale_kind = sig::ScaleKind::none;
  std::vector<std::uint32_t> dims;
  double sample_rate = 0.0;
  std::uint32_t frame_hop = 0;
  std::vector<double> scale_frequencies;
  std::string source_id;
  std::string phase_ref;
  std::vector<float> data;

  Matrix as_matrix() const;
  void set_matrix(const Matrix& m);
};

void write_tensor(const std::string& path, const TensorFile& t);
TensorFile read_tensor(const std::string& path);

// Header-only read for cheap idempotence checks.
TensorFile read_tensor_header(const std::string& path);

}  // namespace schurgan::io
