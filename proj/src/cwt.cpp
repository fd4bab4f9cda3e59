#include "schurgan/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "schurgan/rng.hpp"

namespace schurgan::sig {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kMorletNorm = 0.7511255444649425;  // pi^(-1/4)

struct Kernel {
  long half_width = 0;
  std::vector<double> envelope;  // gaussian * pi^(-1/4) / sqrt(s), index 0 = -hw
  double scale = 0.0;            // samples
};

// Sampled Morlet atom at scale s: psi(u) = pi^(-1/4)/sqrt(s) e^(i w0 u/s) e^(-u^2/(2 s^2)).
Kernel make_kernel(double scale_samples) {
  Kernel k;
  k.scale = scale_samples;
  k.half_width = std::max<long>(1, static_cast<long>(std::ceil(4.0 * scale_samples)));
  k.envelope.resize(static_cast<std::size_t>(2 * k.half_width + 1));
  const double norm = kMorletNorm / std::sqrt(scale_samples);
  for (long u = -k.half_width; u <= k.half_width; ++u) {
    const double x = static_cast<double>(u) / scale_samples;
    k.envelope[static_cast<std::size_t>(u + k.half_width)] = norm * std::exp(-0.5 * x * x);
  }
  return k;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  return out;
}

// Channel response to a unit complex exponential at angular frequency
// w (rad/sample): K_j(w) = sum_u envelope(u) * cos((w - w_atom) u), real
// and nonnegative for a gaussian envelope.
double channel_response(const Kernel& k, double w, double w_atom) {
  double acc = 0.0;
  for (long u = -k.half_width; u <= k.half_width; ++u) {
    const double env = k.envelope[static_cast<std::size_t>(u + k.half_width)];
    acc += env * std::cos((w - w_atom) * static_cast<double>(u));
  }
  return acc;
}

// Solve the SPD system a x = b in place (Cholesky, ridge added by caller).
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    d = std::sqrt(std::max(d, 1e-300));
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
    b[i] /= a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k * n + i] * b[k];
    b[i] /= a[i * n + i];
  }
  return b;
}

// Per-scale synthesis weights: least-squares fit of sum_j w_j K_j(w) = 2
// over a dense in-band grid (a real tone excites half of the analytic
// atom's response, hence the 2).
std::vector<double> synthesis_weights(const std::vector<double>& freqs, double fs,
                                      double omega0) {
  static std::map<std::uint64_t, std::vector<double>> cache;
  std::uint64_t key = fnv1a(freqs.data(), freqs.size() * sizeof(double));
  key = fnv1a(&fs, sizeof(fs), key);
  key = fnv1a(&omega0, sizeof(omega0), key);
  auto hit = cache.find(key);
  if (hit != cache.end()) return hit->second;

  // Kernels must mirror cwt_morlet's construction: scale * w_atom = omega0.
  const std::size_t j_count = freqs.size();
  std::vector<Kernel> kernels(j_count);
  std::vector<double> w_atoms(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    const double w = 2.0 * kPi * freqs[j] / fs;
    const double s = (freqs[j] > 0.0) ? (omega0 / w) : 1.0;
    kernels[j] = make_kernel(s);
    w_atoms[j] = w;
  }

  const std::size_t grid_n = std::max<std::size_t>(4 * j_count, 64);
  const std::vector<double> grid = log_spaced(freqs.front(), freqs.back(), grid_n);

  std::vector<double> resp(grid_n * j_count, 0.0);
  for (std::size_t j = 0; j < j_count; ++j) {
    for (std::size_t g = 0; g < grid_n; ++g) {
      const double w = 2.0 * kPi * grid[g] / fs;
      // gaussian response support: skip far-off-band grid points
      const double detune = std::fabs(std::log(grid[g] / freqs[j]));
      if (detune > 1.5) continue;
      resp[g * j_count + j] = channel_response(kernels[j], w, w_atoms[j]);
    }
  }

  std::vector<double> ata(j_count * j_count, 0.0);
  std::vector<double> atb(j_count, 0.0);
  for (std::size_t g = 0; g < grid_n; ++g) {
    const double* row = &resp[g * j_count];
    for (std::size_t a = 0; a < j_count; ++a) {
      if (row[a] == 0.0) continue;
      atb[a] += row[a] * 2.0;
      for (std::size_t b = a; b < j_count; ++b) ata[a * j_count + b] += row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < j_count; ++a)
    for (std::size_t b = 0; b < a; ++b) ata[a * j_count + b] = ata[b * j_count + a];
  double diag_max = 0.0;
  for (std::size_t a = 0; a < j_count; ++a) diag_max = std::max(diag_max, ata[a * j_count + a]);
  const double ridge = 1e-8 * std::max(diag_max, 1e-300);
  for (std::size_t a = 0; a < j_count; ++a) ata[a * j_count + a] += ridge;

  std::vector<double> w = solve_spd(std::move(ata), std::move(atb), j_count);
  cache.emplace(key, w);
  return w;
}

}  // namespace

const char* scale_kind_name(ScaleKind k) {
  switch (k) {
    case ScaleKind::linear: return "linear";
    case ScaleKind::log: return "log";
    case ScaleKind::logRe: return "logRe";
    default: return "none";
  }
}

ScaleKind scale_kind_from_name(const std::string& name) {
  if (name == "linear") return ScaleKind::linear;
  if (name == "log") return ScaleKind::log;
  if (name == "logRe") return ScaleKind::logRe;
  if (name == "none") return ScaleKind::none;
  throw std::invalid_argument("unknown scale kind: " + name);
}

ComplexSpectrogram cwt_morlet(const Signal& s, const MorletConfig& cfg) {
  if (!(s.sample_rate > 0.0)) throw std::invalid_argument("cwt_morlet: bad sample rate");
  if (cfg.n_scales == 0) throw std::invalid_argument("cwt_morlet: n_scales must be > 0");
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0))
    throw std::invalid_argument("cwt_morlet: overlap must be in [0, 1)");

  const double fs = s.sample_rate;
  const std::size_t frame_len =
      static_cast<std::size_t>(std::llround(cfg.frame_ms * 1e-3 * fs));
  if (frame_len == 0 || s.samples.size() < frame_len)
    throw SignalTooShort("cwt_morlet: signal shorter than one frame");
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(frame_len) *
                                               (1.0 - cfg.overlap))));
  const std::size_t n_frames = 1 + (s.samples.size() - frame_len) / hop;

  ComplexSpectrogram out;
  out.frame_hop = hop;
  out.frame_len = frame_len;
  out.sample_rate = fs;
  out.scale_frequencies = log_spaced(cfg.f_min, cfg.f_max_fraction * fs / 2.0, cfg.n_scales);
  out.magnitude = Matrix(cfg.n_scales, n_frames);
  out.phase = Matrix(cfg.n_scales, n_frames);

  const long sig_len = static_cast<long>(s.samples.size());
  for (std::size_t j = 0; j < cfg.n_scales; ++j) {
    const double f = out.scale_frequencies[j];
    const double scale = cfg.omega0 * fs / (2.0 * kPi * f);
    const Kernel kern = make_kernel(scale);
    const double w_atom = cfg.omega0 / scale;  // rad/sample
    for (std::size_t k = 0; k < n_frames; ++k) {
      const long center = static_cast<long>(k * hop + frame_len / 2);
      double re = 0.0, im = 0.0;
      const long u_lo = std::max(-kern.half_width, -center);
      const long u_hi = std::min(kern.half_width, sig_len - 1 - center);
      for (long u = u_lo; u <= u_hi; ++u) {
        const double v = s.samples[static_cast<std::size_t>(center + u)];
        const double env = kern.envelope[static_cast<std::size_t>(u + kern.half_width)];
        const double ang = w_atom * static_cast<double>(u);
        // conj(psi): e^(-i w_atom u)
        re += v * env * std::cos(ang);
        im -= v * env * std::sin(ang);
      }
      out.magnitude(j, k) = std::sqrt(re * re + im * im);
      out.phase(j, k) = std::atan2(im, re);
    }
  }
  return out;
}

Spectrogram magnitude_view(const ComplexSpectrogram& c, ScaleKind kind) {
  Spectrogram sp;
  sp.scale_kind = kind;
  sp.data = Matrix(c.magnitude.rows(), c.magnitude.cols());
  for (std::size_t i = 0; i < c.magnitude.rows(); ++i) {
    for (std::size_t j = 0; j < c.magnitude.cols(); ++j) {
      const double mag = c.magnitude(i, j);
      switch (kind) {
        case ScaleKind::linear:
          sp.data(i, j) = mag;
          break;
        case ScaleKind::log:
          sp.data(i, j) = std::log1p(mag);
          break;
        case ScaleKind::logRe:
          sp.data(i, j) = std::log1p(std::fabs(mag * std::cos(c.phase(i, j))));
          break;
        default:
          throw std::invalid_argument("magnitude_view: bad scale kind");
      }
    }
  }
  return sp;
}

Matrix unmap_magnitude(const Matrix& data, ScaleKind kind) {
  Matrix out(data.rows(), data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i)
    for (std::size_t j = 0; j < data.cols(); ++j) {
      const double v = data(i, j);
      out(i, j) = (kind == ScaleKind::linear) ? std::max(0.0, v)
                                              : std::max(0.0, std::expm1(std::max(0.0, v)));
    }
  return out;
}

Matrix resize_bilinear(const Matrix& m, std::size_t out_rows, std::size_t out_cols) {
  if (m.rows() == 0 || m.cols() == 0)
    throw std::invalid_argument("resize_bilinear: empty input");
  if (out_rows < 1 || out_cols < 1)
    throw std::invalid_argument("resize_bilinear: bad target size");
  Matrix out(out_rows, out_cols);
  const double rstep = (out_rows > 1 && m.rows() > 1)
                           ? static_cast<double>(m.rows() - 1) / static_cast<double>(out_rows - 1)
                           : 0.0;
  const double cstep = (out_cols > 1 && m.cols() > 1)
                           ? static_cast<double>(m.cols() - 1) / static_cast<double>(out_cols - 1)
                           : 0.0;
  for (std::size_t i = 0; i < out_rows; ++i) {
    const double r = rstep * static_cast<double>(i);
    const std::size_t r0 = std::min(static_cast<std::size_t>(r), m.rows() - 1);
    const std::size_t r1 = std::min(r0 + 1, m.rows() - 1);
    const double fr = r - static_cast<double>(r0);
    for (std::size_t j = 0; j < out_cols; ++j) {
      const double c = cstep * static_cast<double>(j);
      const std::size_t c0 = std::min(static_cast<std::size_t>(c), m.cols() - 1);
      const std::size_t c1 = std::min(c0 + 1, m.cols() - 1);
      const double fc = c - static_cast<double>(c0);
      out(i, j) = (1.0 - fr) * ((1.0 - fc) * m(r0, c0) + fc * m(r0, c1)) +
                  fr * ((1.0 - fc) * m(r1, c0) + fc * m(r1, c1));
    }
  }
  return out;
}

Spectrogram resize_bilinear(const Spectrogram& sp, std::size_t n) {
  if (n < 2) throw std::invalid_argument("resize_bilinear: side must be >= 2");
  Spectrogram out = sp;
  out.data = resize_bilinear(sp.data, n, n);
  return out;
}

Signal invert_cwt(const Matrix& magnitude, const Matrix& phase_ref,
                  const std::vector<double>& scale_frequencies, std::size_t frame_hop,
                  double sample_rate, double omega0) {
  if (magnitude.rows() != phase_ref.rows() || magnitude.cols() != phase_ref.cols())
    throw ShapeMismatch("invert_cwt: magnitude/phase shapes differ");
  if (magnitude.rows() != scale_frequencies.size())
    throw ShapeMismatch("invert_cwt: scale frequency count differs from rows");
  if (frame_hop == 0 || !(sample_rate > 0.0))
    throw std::invalid_argument("invert_cwt: bad hop or sample rate");

  const std::size_t j_count = magnitude.rows();
  const std::size_t k_count = magnitude.cols();
  const std::size_t frame_len = 2 * frame_hop;  // 50% overlap framing
  const std::size_t out_len = (k_count - 1) * frame_hop + frame_len;

  const std::vector<double> weights =
      synthesis_weights(scale_frequencies, sample_rate, omega0);

  Signal out;
  out.sample_rate = sample_rate;
  out.samples.assign(out_len, 0.0);

  const double hop = static_cast<double>(frame_hop);
  std::vector<double> inst_w(std::max<std::size_t>(k_count, 1));
  for (std::size_t j = 0; j < j_count; ++j) {
    const double w_scale = 2.0 * kPi * scale_frequencies[j] / sample_rate;
    // instantaneous frequency per inter-anchor interval
    for (std::size_t k = 0; k + 1 < k_count; ++k) {
      double dphi = phase_ref(j, k + 1) - phase_ref(j, k) - w_scale * hop;
      dphi -= 2.0 * kPi * std::round(dphi / (2.0 * kPi));
      inst_w[k] = w_scale + dphi / hop;
    }
    if (k_count == 1) inst_w[0] = w_scale;

    const double anchor0 = static_cast<double>(frame_len / 2);
    const double wj = weights[j];
    for (std::size_t t = 0; t < out_len; ++t) {
      const double pos = (static_cast<double>(t) - anchor0) / hop;
      // interval index and offset within it
      double ki = std::floor(pos);
      ki = std::clamp(ki, 0.0, static_cast<double>(k_count >= 2 ? k_count - 2 : 0));
      const std::size_t k = static_cast<std::size_t>(ki);
      const double local = pos - ki;  // may run past [0,1] at the edges
      const double amp_a = magnitude(j, k);
      const double amp_b = magnitude(j, std::min(k + 1, k_count - 1));
      const double frac = std::clamp(local, 0.0, 1.0);
      const double amp = amp_a + (amp_b - amp_a) * frac;
      const double phase = phase_ref(j, k) + inst_w[k] * local * hop;
      out.samples[t] += wj * amp * std::cos(phase);
    }
  }
  return out;
}

}  // namespace schurgan::sig
