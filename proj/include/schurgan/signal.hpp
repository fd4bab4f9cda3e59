#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace schurgan::sig {

struct MalformedWav : std::runtime_error {
  explicit MalformedWav(const std::string& what) : std::runtime_error(what) {}
};
struct UnsupportedEncoding : std::runtime_error {
  explicit UnsupportedEncoding(const std::string& what) : std::runtime_error(what) {}
};
struct ZeroPowerGenerated : std::runtime_error {
  explicit ZeroPowerGenerated(const std::string& what) : std::runtime_error(what) {}
};

// Mono time-domain signal, samples in [-1, 1] after ingestion.
struct Signal {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration_seconds() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// PCM RIFF/WAV reader: 8/16/24-bit, mono or stereo (channel-averaged).
Signal load_wav(const std::string& path);

// 16-bit PCM writer, used by the toy-dataset tooling and tests.
void write_wav_pcm16(const std::string& path, const Signal& s);

// Band-limited arbitrary-ratio resampling (windowed sinc, 64 taps).
Signal resample(const Signal& s, double target_hz);

// Resample by 1/scale and re-stamp the original rate: content shifts by
// the scale factor, duration changes by 1/scale.
Signal pitch_shift(const Signal& s, double scale);

// Mean squared sample value.
double power(const Signal& s);

// 20*log10(Pw(recon_real)/Pw(generated)), implemented exactly as stated.
double snr_db(const Signal& recon_real, const Signal& generated);

}  // namespace schurgan::sig
