#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "schurgan/matrix.hpp"
#include "schurgan/signal.hpp"

namespace schurgan::sig {

struct SignalTooShort : std::runtime_error {
  explicit SignalTooShort(const std::string& what) : std::runtime_error(what) {}
};
struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

enum class ScaleKind : std::uint8_t { linear = 0, log = 1, logRe = 2, none = 255 };

const char* scale_kind_name(ScaleKind k);
ScaleKind scale_kind_from_name(const std::string& name);

struct MorletConfig {
  double frame_ms = 50.0;
  double overlap = 0.5;
  std::size_t n_scales = 32;
  double omega0 = 6.0;
  double f_min = 40.0;
  double f_max_fraction = 0.95;  // of Nyquist
};

// Complex wavelet coefficients sampled at frame centers: one column per
// hop, rows ordered low -> high frequency over log-spaced scales.
struct ComplexSpectrogram {
  Matrix magnitude;  // scales x frames, >= 0
  Matrix phase;      // radians in (-pi, pi]
  std::vector<double> scale_frequencies;
  std::size_t frame_hop = 0;  // samples
  std::size_t frame_len = 0;  // samples
  double sample_rate = 0.0;
};

struct Spectrogram {
  Matrix data;
  ScaleKind scale_kind = ScaleKind::linear;
  std::string source_id;
  std::string phase_ref;  // handle to the phase-reference artifact
};

ComplexSpectrogram cwt_morlet(const Signal& s, const MorletConfig& cfg = {});

// linear -> |c|, log -> ln(1+|c|), logRe -> ln(1+|Re c|).
Spectrogram magnitude_view(const ComplexSpectrogram& c, ScaleKind kind);

// Corner-aligned bilinear resampling.
Matrix resize_bilinear(const Matrix& m, std::size_t out_rows, std::size_t out_cols);
Spectrogram resize_bilinear(const Spectrogram& sp, std::size_t n);

// One-pass synthesis from per-frame magnitude plus a phase reference:
// per-scale instantaneous frequency from consecutive phase anchors, with
// calibrated per-scale weights summing the channels back to unit gain.
Signal invert_cwt(const Matrix& magnitude, const Matrix& phase_ref,
                  const std::vector<double>& scale_frequencies, std::size_t frame_hop,
                  double sample_rate, double omega0 = 6.0);

// Inverse of the magnitude_view mapping, back to linear magnitude.
Matrix unmap_magnitude(const Matrix& data, ScaleKind kind);

}  // namespace schurgan::sig
