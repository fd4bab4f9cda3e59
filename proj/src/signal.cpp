#include "schurgan/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace schurgan::sig {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

}  // namespace

Signal load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedWav("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw MalformedWav("missing RIFF/WAVE header: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = read_u32(bytes.data() + pos + 4);
    if (pos + 8 + len > bytes.size()) throw MalformedWav("truncated chunk: " + path);
    const unsigned char* body = bytes.data() + pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw MalformedWav("short fmt chunk: " + path);
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr) throw MalformedWav("missing fmt/data chunk: " + path);
  if (format != 1) throw UnsupportedEncoding("non-PCM wav (format tag " +
                                             std::to_string(format) + "): " + path);
  if (bits != 8 && bits != 16 && bits != 24)
    throw UnsupportedEncoding("unsupported bit depth " + std::to_string(bits) + ": " + path);
  if (channels == 0 || rate == 0) throw MalformedWav("bad channel count or rate: " + path);

  const std::size_t bytes_per = bits / 8;
  const std::size_t frame_size = bytes_per * channels;
  if (frame_size == 0 || data_len % frame_size != 0)
    throw MalformedWav("data chunk not frame-aligned: " + path);
  const std::size_t frames = data_len / frame_size;

  Signal out;
  out.sample_rate = static_cast<double>(rate);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + f * frame_size + c * bytes_per;
      double v = 0.0;
      if (bits == 8) {
        v = (static_cast<double>(p[0]) - 128.0) / 128.0;
      } else if (bits == 16) {
        const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        v = static_cast<double>(s) / 32768.0;
      } else {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;
        v = static_cast<double>(s) / 8388608.0;
      }
      acc += v;
    }
    out.samples[f] = acc / static_cast<double>(channels);
  }
  return out;
}

void write_wav_pcm16(const std::string& path, const Signal& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::uint32_t data_len = static_cast<std::uint32_t>(s.samples.size() * 2);
  const std::uint32_t riff_len = 36 + data_len;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(s.sample_rate));
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    out.write(reinterpret_cast<char*>(b), 2);
  };
  out.write("RIFF", 4);
  put_u32(riff_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_len);
  for (double v : s.samples) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    const std::int16_t q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    put_u16(static_cast<std::uint16_t>(q));
  }
}

Signal resample(const Signal& s, double target_hz) {
  if (!(target_hz > 0.0)) throw std::invalid_argument("resample: target rate must be > 0");
  if (target_hz == s.sample_rate) return s;

  constexpr int kHalfTaps = 32;  // 64-tap kernel
  const double ratio = target_hz / s.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // fraction of source Nyquist
  const std::size_t in_len = s.samples.size();
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(in_len) * ratio));

  Signal out;
  out.sample_rate = target_hz;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const long center = static_cast<long>(std::floor(t));
    double acc = 0.0, wsum = 0.0;
    for (long k = center - kHalfTaps + 1; k <= center + kHalfTaps; ++k) {
      if (k < 0 || k >= static_cast<long>(in_len)) continue;
      const double x = t - static_cast<double>(k);
      const double win = 0.5 + 0.5 * std::cos(kPi * x / static_cast<double>(kHalfTaps));
      const double w = sinc(cutoff * x) * win;
      wsum += w;
      acc += w * s.samples[static_cast<std::size_t>(k)];
    }
    // Normalizing by the full kernel sum keeps DC gain exact.
    out.samples[i] = (wsum != 0.0) ? acc / wsum : 0.0;
  }
  return out;
}

Signal pitch_shift(const Signal& s, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("pitch_shift: scale must be > 0");
  Signal shifted = resample(s, s.sample_rate / scale);
  shifted.sample_rate = s.sample_rate;
  return shifted;
}

double power(const Signal& s) {
  if (s.samples.empty()) throw std::invalid_argument("power: empty signal");
  double acc = 0.0;
  for (double v : s.samples) acc += v * v;
  return acc / static_cast<double>(s.samples.size());
}

double snr_db(const Signal& recon_real, const Signal& generated) {
  const double pr = power(recon_real);
  const double pg = power(generated);
  if (pg == 0.0) throw ZeroPowerGenerated("snr_db: generated signal has zero power");
  return 20.0 * std::log10(pr / pg);
}

}  // namespace schurgan::sig
