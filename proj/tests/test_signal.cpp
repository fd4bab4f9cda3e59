#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oracles.hpp"
#include "schurgan/signal.hpp"

using namespace schurgan;
using namespace schurgan::sig;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(v & 0xFF);
  b.push_back((v >> 8) & 0xFF);
  b.push_back((v >> 16) & 0xFF);
  b.push_back((v >> 24) & 0xFF);
}
void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back((v >> 8) & 0xFF);
}
void put_tag(std::vector<unsigned char>& b, const char* t) {
  b.insert(b.end(), t, t + 4);
}

// Hand-rolled WAV bytes so the reader is tested against raw layout.
std::string write_raw_wav(const std::string& name, std::uint16_t format,
                          std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                          const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> b;
  put_tag(b, "RIFF");
  put_u32(b, 36 + static_cast<std::uint32_t>(payload.size()));
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, channels * bits / 8);
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, static_cast<std::uint32_t>(payload.size()));
  b.insert(b.end(), payload.begin(), payload.end());
  const std::string path = temp_path(name);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  return path;
}

Signal make_tone(double freq, double rate, double seconds, double amp = 0.5) {
  Signal s;
  s.sample_rate = rate;
  const std::size_t n = static_cast<std::size_t>(rate * seconds);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = amp * std::sin(2.0 * 3.141592653589793 * freq * i / rate);
  return s;
}

}  // namespace

TEST_CASE("load_wav basics") {
  SUBCASE("16-bit mono zeros") {
    std::vector<unsigned char> payload(64, 0);
    auto p = write_raw_wav("sg_zeros.wav", 1, 1, 22050, 16, payload);
    Signal s = load_wav(p);
    CHECK(s.sample_rate == 22050.0);
    REQUIRE(s.samples.size() == 32);
    for (double v : s.samples) CHECK(v == 0.0);
  }

  SUBCASE("full-scale 16-bit maps to ~+1") {
    std::vector<unsigned char> payload;
    put_u16(payload, 0x7FFF);
    auto p = write_raw_wav("sg_full.wav", 1, 1, 16000, 16, payload);
    Signal s = load_wav(p);
    REQUIRE(s.samples.size() == 1);
    CHECK(s.samples[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(s.samples[0] <= 1.0);
  }

  SUBCASE("stereo (0.5, -0.5) averages to zero") {
    std::vector<unsigned char> payload;
    for (int i = 0; i < 8; ++i) {
      put_u16(payload, static_cast<std::uint16_t>(16384));
      put_u16(payload, static_cast<std::uint16_t>(-16384));
    }
    auto p = write_raw_wav("sg_stereo.wav", 1, 2, 16000, 16, payload);
    Signal s = load_wav(p);
    REQUIRE(s.samples.size() == 8);
    for (double v : s.samples) CHECK(std::fabs(v) < 1e-12);
  }

  SUBCASE("8-bit offset and 24-bit depth") {
    std::vector<unsigned char> p8 = {128, 255, 0};
    Signal s8 = load_wav(write_raw_wav("sg_8bit.wav", 1, 1, 8000, 8, p8));
    CHECK(s8.samples[0] == doctest::Approx(0.0));
    CHECK(s8.samples[1] == doctest::Approx(127.0 / 128.0));
    CHECK(s8.samples[2] == doctest::Approx(-1.0));

    std::vector<unsigned char> p24 = {0xFF, 0xFF, 0x7F, 0x00, 0x00, 0x80};
    Signal s24 = load_wav(write_raw_wav("sg_24bit.wav", 1, 1, 8000, 24, p24));
    CHECK(s24.samples[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s24.samples[1] == doctest::Approx(-1.0));
  }

  SUBCASE("errors") {
    const std::string p = temp_path("sg_trunc.wav");
    std::ofstream(p, std::ios::binary) << "RIFFxx";
    CHECK_THROWS_AS(load_wav(p), MalformedWav);
    auto f = write_raw_wav("sg_float.wav", 3, 1, 16000, 32, {0, 0, 0, 0});
    CHECK_THROWS_AS(load_wav(f), UnsupportedEncoding);
    CHECK_THROWS_AS(load_wav(temp_path("sg_does_not_exist.wav")), MalformedWav);
  }

  SUBCASE("pcm16 writer round-trips") {
    Signal tone = make_tone(440.0, 16000, 0.05);
    const std::string p = temp_path("sg_rt.wav");
    write_wav_pcm16(p, tone);
    Signal back = load_wav(p);
    REQUIRE(back.samples.size() == tone.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < back.samples.size(); ++i)
      worst = std::max(worst, std::fabs(back.samples[i] - tone.samples[i]));
    CHECK(worst < 1e-4);  // 16-bit quantization
  }
}

TEST_CASE("resample") {
  SUBCASE("same rate is bit-identical") {
    Signal s = make_tone(500.0, 16000, 0.1);
    Signal r = resample(s, 16000.0);
    REQUIRE(r.samples.size() == s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(r.samples[i] == s.samples[i]);
  }

  SUBCASE("48k -> 16k keeps a 1 kHz tone at 1 kHz, amplitude within 1%") {
    Signal s = make_tone(1000.0, 48000, 1.0, 0.5);
    Signal r = resample(s, 16000.0);
    CHECK(r.samples.size() == 16000);
    std::vector<double> mid(r.samples.begin() + 2000, r.samples.begin() + 14000);
    const double peak = oracles::dft_peak_hz(mid, 16000.0);
    CHECK(std::fabs(peak - 1000.0) < 3.0);
    double amp = 0.0;
    for (double v : mid) amp = std::max(amp, std::fabs(v));
    CHECK(amp == doctest::Approx(0.5).epsilon(0.01));
  }

  SUBCASE("duration preserved within one sample") {
    Signal s = make_tone(200.0, 44100, 0.37);
    Signal r = resample(s, 16000.0);
    const double want = static_cast<double>(s.samples.size()) * 16000.0 / 44100.0;
    CHECK(std::fabs(static_cast<double>(r.samples.size()) - want) <= 1.0);
  }

  SUBCASE("DC preserved") {
    Signal s;
    s.sample_rate = 48000;
    s.samples.assign(4800, 0.25);
    Signal r = resample(s, 16000.0);
    for (double v : r.samples) CHECK(v == doctest::Approx(0.25).epsilon(1e-3));
  }
}

TEST_CASE("pitch_shift") {
  SUBCASE("scale 1.0 is identity") {
    Signal s = make_tone(700.0, 16000, 0.2);
    Signal r = pitch_shift(s, 1.0);
    REQUIRE(r.samples.size() == s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(r.samples[i] == s.samples[i]);
  }

  SUBCASE("tone frequency scales, duration inversely") {
    Signal s = make_tone(1000.0, 16000, 1.0);
    for (double scale : {1.5, 0.75, 0.9, 1.15}) {
      Signal r = pitch_shift(s, scale);
      CHECK(r.sample_rate == 16000.0);
      CHECK(std::fabs(static_cast<double>(r.samples.size()) -
                      static_cast<double>(s.samples.size()) / scale) <= 1.0);
      std::size_t lo = r.samples.size() / 8, hi = r.samples.size() * 7 / 8;
      std::vector<double> mid(r.samples.begin() + lo, r.samples.begin() + hi);
      const double peak = oracles::dft_peak_hz(mid, 16000.0);
      CHECK(std::fabs(peak - scale * 1000.0) <= 0.02 * scale * 1000.0);
    }
  }
}

TEST_CASE("power") {
  Signal sq;
  sq.sample_rate = 8000;
  for (int i = 0; i < 100; ++i) sq.samples.push_back(i % 2 ? 1.0 : -1.0);
  CHECK(power(sq) == doctest::Approx(1.0));

  Signal tone = make_tone(100.0, 16000, 0.5, 0.6);  // whole periods
  CHECK(power(tone) == doctest::Approx(0.6 * 0.6 / 2.0).epsilon(1e-3));

  Signal z;
  z.sample_rate = 8000;
  z.samples.assign(10, 0.0);
  CHECK(power(z) == 0.0);

  Signal empty;
  empty.sample_rate = 8000;
  CHECK_THROWS_AS(power(empty), std::invalid_argument);
}

TEST_CASE("snr_db") {
  Signal x = make_tone(250.0, 16000, 0.25, 0.4);

  SUBCASE("identical signals give exactly 0 dB") { CHECK(snr_db(x, x) == 0.0); }

  SUBCASE("power ratios") {
    Signal y = x;
    for (double& v : y.samples) v /= std::sqrt(10.0);  // Pw ratio 10
    CHECK(snr_db(x, y) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(snr_db(y, x) == doctest::Approx(-20.0).epsilon(1e-9));
  }

  SUBCASE("scaling law snr(x, c*x) = -40 log10 c") {
    for (double c : {0.5, 2.0, 3.7}) {
      Signal y = x;
      for (double& v : y.samples) v *= c;
      CHECK(snr_db(x, y) == doctest::Approx(-40.0 * std::log10(c)).epsilon(1e-9));
    }
  }

  SUBCASE("zero generated power rejected") {
    Signal z;
    z.sample_rate = 16000;
    z.samples.assign(100, 0.0);
    CHECK_THROWS_AS(snr_db(x, z), ZeroPowerGenerated);
  }
}
