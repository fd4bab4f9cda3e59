#include "schurgan/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "schurgan/rng.hpp"

namespace schurgan::la {

namespace {

std::atomic<std::uint64_t> g_dfn_clamps{0};

double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// Applies a 2x2 rotation [[cs,-sn],[sn,cs]] as a similarity on rows/cols
// (l, l+1) of h and accumulates it into q.
void apply_block_rotation(Matrix& h, Matrix& q, std::size_t l, double cs, double sn) {
  const std::size_t n = h.rows();
  for (std::size_t j = 0; j < n; ++j) {
    const double x = h(l, j), y = h(l + 1, j);
    h(l, j) = cs * x + sn * y;
    h(l + 1, j) = -sn * x + cs * y;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = h(i, l), y = h(i, l + 1);
    h(i, l) = cs * x + sn * y;
    h(i, l + 1) = -sn * x + cs * y;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = q(i, l), y = q(i, l + 1);
    q(i, l) = cs * x + sn * y;
    q(i, l + 1) = -sn * x + cs * y;
  }
}

// Rotates a deflated 2x2 block with real eigenvalues into triangular form.
void standardize_2x2(Matrix& h, Matrix& q, std::size_t l) {
  const double a = h(l, l), b = h(l, l + 1);
  const double c = h(l + 1, l), d = h(l + 1, l + 1);
  if (c == 0.0) return;
  const double disc = (a - d) * (a - d) + 4.0 * b * c;
  if (disc < 0.0) return;  // complex pair stays a block
  const double sq = std::sqrt(disc);
  const double mid = 0.5 * (a + d);
  // Larger-magnitude eigenvalue for a stable eigenvector.
  const double lam = (mid >= 0.0) ? mid + 0.5 * sq : mid - 0.5 * sq;
  double vx = b, vy = lam - a;
  const double wx = lam - d, wy = c;
  if (wx * wx + wy * wy > vx * vx + vy * vy) {
    vx = wx;
    vy = wy;
  }
  const double nrm = std::hypot(vx, vy);
  if (nrm == 0.0) return;
  apply_block_rotation(h, q, l, vx / nrm, vy / nrm);
  h(l + 1, l) = 0.0;
}

struct ComplexLU {
  std::size_t n = 0;
  std::vector<Complex> a;
  std::vector<std::size_t> piv;

  Complex& at(std::size_t i, std::size_t j) { return a[i * n + j]; }

  void factor() {
    piv.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(at(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::abs(at(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      piv[k] = p;
      if (p != k)
        for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      // Inverse iteration wants (A - lambda I) solvable even when singular.
      if (std::abs(at(k, k)) < 1e-300) at(k, k) = Complex(1e-300, 0.0);
      const Complex inv = 1.0 / at(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const Complex f = at(i, k) * inv;
        at(i, k) = f;
        if (f != 0.0)
          for (std::size_t j = k + 1; j < n; ++j) at(i, j) -= f * at(k, j);
      }
    }
  }

  void solve_in_place(std::vector<Complex>& b) const {
    for (std::size_t k = 0; k < n; ++k) {
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
      for (std::size_t i = k + 1; i < n; ++i) b[i] -= a[i * n + k] * b[k];
    }
    for (std::size_t k = n; k-- > 0;) {
      for (std::size_t j = k + 1; j < n; ++j) b[k] -= a[k * n + j] * b[j];
      b[k] /= a[k * n + k];
    }
  }
};

double vec_norm(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const Complex& z : v) s += std::norm(z);
  return std::sqrt(s);
}

// One eigenvector of op (m or m^T) for eigenvalue lam via inverse iteration.
std::vector<Complex> inverse_iteration(const Matrix& op, Complex lam, double mat_norm,
                                       std::size_t which) {
  const std::size_t n = op.rows();
  ComplexLU lu;
  lu.n = n;
  lu.a.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      lu.at(i, j) = Complex(op(i, j), 0.0) - (i == j ? lam : Complex(0.0, 0.0));
  lu.factor();

  Rng rng = Rng::stream(0xE16E5EEDULL, which);
  std::vector<Complex> x(n);
  for (auto& z : x) z = Complex(rng.normal(), rng.normal());
  double nx = vec_norm(x);
  for (auto& z : x) z /= nx;

  const double target = 1e-6 * std::max(mat_norm, 1e-300);
  for (int it = 0; it < 6; ++it) {
    lu.solve_in_place(x);
    // Near-singular solves can reach ~1e300; rescale before the 2-norm.
    double mx = 0.0;
    for (const auto& z : x) mx = std::max(mx, std::fabs(z.real()) + std::fabs(z.imag()));
    if (!(mx > 0.0) || !std::isfinite(mx))
      throw DefectiveMatrix("inverse iteration collapsed");
    for (auto& z : x) z /= mx;
    nx = vec_norm(x);
    for (auto& z : x) z /= nx;
    // residual ||op x - lam x||
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Complex acc = -lam * x[i];
      for (std::size_t j = 0; j < n; ++j) acc += op(i, j) * x[j];
      res += std::norm(acc);
    }
    if (std::sqrt(res) <= target) {
      // Deterministic phase: largest entry made real positive.
      std::size_t k = 0;
      double best = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(x[i]) > best) {
          best = std::abs(x[i]);
          k = i;
        }
      const Complex ph = std::conj(x[k]) / std::abs(x[k]);
      for (auto& z : x) z *= ph;
      return x;
    }
  }
  throw DefectiveMatrix("eigenpair residual did not reach tolerance");
}

}  // namespace

HessenbergForm hessenberg_reduce(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("hessenberg_reduce: non-square input");
  const std::size_t n = m.rows();
  HessenbergForm out{m, Matrix::identity(n)};
  Matrix& h = out.h;
  Matrix& q = out.q;
  if (n < 3) return out;

  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double sigma = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) sigma += h(i, k) * h(i, k);
    sigma = std::sqrt(sigma);
    if (sigma == 0.0) continue;
    const double alpha = -sign_of(h(k + 1, k)) * sigma;
    double vnorm2 = 0.0;
    v[k + 1] = h(k + 1, k) - alpha;
    vnorm2 += v[k + 1] * v[k + 1];
    for (std::size_t i = k + 2; i < n; ++i) {
      v[i] = h(i, k);
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;

    // Left: rows k+1..n-1, columns k..n-1.
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
    }
    // Right: columns k+1..n-1, all rows.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += v[j] * h(i, j);
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
    }
    // Accumulate q <- q * P.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += v[j] * q(i, j);
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= s * v[j];
    }
    h(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
  return out;
}

SchurForm real_schur(const Matrix& m, double tol, std::size_t max_sweeps) {
  if (!m.square()) throw std::invalid_argument("real_schur: non-square input");
  if (!m.all_finite()) throw std::invalid_argument("real_schur: non-finite input");
  const std::size_t n = m.rows();
  if (max_sweeps == 0) max_sweeps = 30 * std::max<std::size_t>(n, 1);

  HessenbergForm hf = hessenberg_reduce(m);
  Matrix& h = hf.h;
  Matrix& q = hf.q;
  const double mat_norm = frobenius_norm(m);
  if (n <= 1) return {q, h};

  std::size_t sweeps = 0;
  int iter = 0;
  int bottom = static_cast<int>(n) - 1;
  while (bottom >= 0) {
    // Deflation scan upward from the active bottom.
    int l = bottom;
    while (l > 0) {
      double small = tol * (std::fabs(h(l - 1, l - 1)) + std::fabs(h(l, l)));
      if (small == 0.0) small = tol * mat_norm;
      if (std::fabs(h(l, l - 1)) <= small) {
        h(l, l - 1) = 0.0;
        break;
      }
      --l;
    }
    if (l == bottom) {
      bottom -= 1;
      iter = 0;
      continue;
    }
    if (l == bottom - 1) {
      standardize_2x2(h, q, static_cast<std::size_t>(l));
      bottom -= 2;
      iter = 0;
      continue;
    }

    if (++sweeps > max_sweeps)
      throw ConvergenceFailure("real_schur: QR iteration exceeded max sweeps");
    ++iter;

    // Implicit double shift from the trailing 2x2 of the active block.
    double s = h(bottom - 1, bottom - 1) + h(bottom, bottom);
    double t = h(bottom - 1, bottom - 1) * h(bottom, bottom) -
               h(bottom - 1, bottom) * h(bottom, bottom - 1);
    if (iter % 10 == 0) {
      // Exceptional shift breaks symmetric cycling.
      const double ex = std::fabs(h(bottom, bottom - 1)) +
                        std::fabs(h(bottom - 1, bottom - 2));
      const double a = h(bottom, bottom) + 0.75 * ex;
      s = 2.0 * a;
      t = a * a;
    }

    double p = h(l, l) * h(l, l) + h(l, l + 1) * h(l + 1, l) - s * h(l, l) + t;
    double qq = h(l + 1, l) * (h(l, l) + h(l + 1, l + 1) - s);
    double r = (l + 2 <= bottom) ? h(l + 1, l) * h(l + 2, l + 1) : 0.0;

    for (int k = l; k <= bottom - 1; ++k) {
      if (k > l) {
        p = h(k, k - 1);
        qq = h(k + 1, k - 1);
        r = (k + 2 <= bottom) ? h(k + 2, k - 1) : 0.0;
      }
      const bool has3 = (k + 2 <= bottom);
      const double scale = std::fabs(p) + std::fabs(qq) + std::fabs(r);
      if (scale == 0.0) continue;
      const double ps = p / scale, qs = qq / scale, rs = r / scale;
      const double nrm = std::sqrt(ps * ps + qs * qs + rs * rs);
      if (nrm == 0.0) continue;
      const double v0 = ps + sign_of(ps) * nrm;
      const double vnorm2 = v0 * v0 + qs * qs + rs * rs;
      if (vnorm2 == 0.0) continue;
      const double beta = 2.0 / vnorm2;

      const std::size_t uk = static_cast<std::size_t>(k);
      const std::size_t jc0 = (k == l) ? uk : uk - 1;
      // Left reflector on rows k..k+2.
      for (std::size_t j = jc0; j < n; ++j) {
        double acc = v0 * h(uk, j) + qs * h(uk + 1, j);
        if (has3) acc += rs * h(uk + 2, j);
        acc *= beta;
        h(uk, j) -= acc * v0;
        h(uk + 1, j) -= acc * qs;
        if (has3) h(uk + 2, j) -= acc * rs;
      }
      // Right reflector on columns k..k+2.
      const std::size_t rend = std::min<std::size_t>(uk + 3, static_cast<std::size_t>(bottom));
      for (std::size_t i = 0; i <= rend; ++i) {
        double acc = v0 * h(i, uk) + qs * h(i, uk + 1);
        if (has3) acc += rs * h(i, uk + 2);
        acc *= beta;
        h(i, uk) -= acc * v0;
        h(i, uk + 1) -= acc * qs;
        if (has3) h(i, uk + 2) -= acc * rs;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = v0 * q(i, uk) + qs * q(i, uk + 1);
        if (has3) acc += rs * q(i, uk + 2);
        acc *= beta;
        q(i, uk) -= acc * v0;
        q(i, uk + 1) -= acc * qs;
        if (has3) q(i, uk + 2) -= acc * rs;
      }
      if (k > l) {
        h(uk + 1, uk - 1) = 0.0;
        if (has3) h(uk + 2, uk - 1) = 0.0;
      }
    }
  }

  // Below the first subdiagonal is structurally zero.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
  return {q, h};
}

EigenSpectrum eigenvalues_of_quasi_triangular(const Matrix& t) {
  const std::size_t n = t.rows();
  EigenSpectrum spec;
  spec.values.reserve(n);
  std::size_t i = 0;
  while (i < n) {
    if (i + 1 == n || t(i + 1, i) == 0.0) {
      spec.values.emplace_back(t(i, i), 0.0);
      ++i;
      continue;
    }
    const double a = t(i, i), b = t(i, i + 1);
    const double c = t(i + 1, i), d = t(i + 1, i + 1);
    const double mid = 0.5 * (a + d);
    const double disc = 0.25 * (a - d) * (a - d) + b * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      spec.values.emplace_back(mid + sq, 0.0);
      spec.values.emplace_back(mid - sq, 0.0);
    } else {
      const double sq = std::sqrt(-disc);
      spec.values.emplace_back(mid, sq);
      spec.values.emplace_back(mid, -sq);
    }
    i += 2;
  }
  return spec;
}

EigenSpectrum eigenvalues(const Matrix& m) {
  const SchurForm s = real_schur(m);
  return eigenvalues_of_quasi_triangular(s.t);
}

double dfn(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("dfn: non-square input");
  const EigenSpectrum spec = eigenvalues(m);
  double sum_sq = 0.0;
  for (const Complex& lam : spec.values) sum_sq += std::norm(lam);
  const double value = frobenius_norm_sq(m) - sum_sq;
  if (value < 0.0) {
    g_dfn_clamps.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  return value;
}

double dfn_from_schur(const SchurForm& s) {
  const Matrix& t = s.t;
  const std::size_t n = t.rows();
  // Strictly-upper entries, excluding pairs inside one 2x2 block which are
  // accounted for by the block formula (a-d)^2 + (b+c)^2.
  std::vector<int> partner(n, -1);
  std::size_t i = 0;
  double acc = 0.0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      partner[i] = static_cast<int>(i + 1);
      partner[i + 1] = static_cast<int>(i);
      const double a = t(i, i), b = t(i, i + 1);
      const double c = t(i + 1, i), d = t(i + 1, i + 1);
      acc += (a - d) * (a - d) + (b + c) * (b + c);
      i += 2;
    } else {
      ++i;
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t cidx = r + 1; cidx < n; ++cidx) {
      if (partner[r] == static_cast<int>(cidx)) continue;
      acc += t(r, cidx) * t(r, cidx);
    }
  return acc;
}

std::uint64_t dfn_clamp_count() { return g_dfn_clamps.load(std::memory_order_relaxed); }

EigenPairs eigenvectors(const Matrix& m, const EigenSpectrum& spectrum) {
  if (!m.square()) throw std::invalid_argument("eigenvectors: non-square input");
  const std::size_t n = m.rows();
  if (spectrum.values.size() != n)
    throw std::invalid_argument("eigenvectors: spectrum size mismatch");
  const double mat_norm = frobenius_norm(m);
  const Matrix mt = m.transposed();

  EigenPairs out;
  out.right.resize(n);
  out.left.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex lam = spectrum.values[i];
    // Conjugate pairs reuse the partner's vectors.
    if (lam.imag() < 0.0) {
      bool found = false;
      for (std::size_t j = 0; j < i; ++j) {
        if (spectrum.values[j] == std::conj(lam) && !out.right[j].empty()) {
          out.right[i].resize(n);
          out.left[i].resize(n);
          for (std::size_t k = 0; k < n; ++k) {
            out.right[i][k] = std::conj(out.right[j][k]);
            out.left[i][k] = std::conj(out.left[j][k]);
          }
          found = true;
          break;
        }
      }
      if (found) continue;
    }
    out.right[i] = inverse_iteration(m, lam, mat_norm, 2 * i);
    out.left[i] = inverse_iteration(mt, lam, mat_norm, 2 * i + 1);
  }
  return out;
}

Matrix dfn_gradient(const Matrix& m, double sep_tol_scale) {
  if (!m.square()) throw std::invalid_argument("dfn_gradient: non-square input");
  const std::size_t n = m.rows();
  const double mat_norm = frobenius_norm(m);
  const EigenSpectrum spec = eigenvalues(m);

  const double sep_tol = sep_tol_scale * mat_norm;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(spec.values[i] - spec.values[j]) <= sep_tol)
        throw DefectiveMatrix("dfn_gradient: eigenvalue gap below threshold");

  const EigenPairs pairs = eigenvectors(m, spec);

  Matrix grad = 2.0 * m;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = pairs.right[i];
    const auto& y = pairs.left[i];
    Complex denom(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) denom += y[k] * x[k];
    if (std::abs(denom) < 1e-12)
      throw DefectiveMatrix("dfn_gradient: near-orthogonal eigenvector pair");
    const Complex factor = 2.0 * std::conj(spec.values[i]) / denom;
    for (std::size_t p = 0; p < n; ++p) {
      const Complex yp = factor * y[p];
      for (std::size_t q = 0; q < n; ++q)
        grad(p, q) -= (yp * x[q]).real();
    }
  }
  return grad;
}

Matrix dfn_gradient_fd(const Matrix& m, double step) {
  if (!m.square()) throw std::invalid_argument("dfn_gradient_fd: non-square input");
  const std::size_t n = m.rows();
  if (step == 0.0) step = 1e-5 * (1.0 + frobenius_norm(m));
  Matrix grad(n, n);
  Matrix work = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double orig = work(i, j);
      work(i, j) = orig + step;
      const double fp = dfn(work);
      work(i, j) = orig - step;
      const double fm = dfn(work);
      work(i, j) = orig;
      grad(i, j) = (fp - fm) / (2.0 * step);
    }
  return grad;
}

Matrix dfn_gradient_robust(const Matrix& m) {
  try {
    return dfn_gradient(m);
  } catch (const DefectiveMatrix&) {
    return dfn_gradient_fd(m);
  } catch (const ConvergenceFailure&) {
    return dfn_gradient_fd(m);
  }
}

double suggest_epsilon(const std::vector<Matrix>& batch, double eps_min) {
  if (batch.empty()) throw std::invalid_argument("suggest_epsilon: empty batch");
  double best = std::numeric_limits<double>::infinity();
  for (const Matrix& m : batch) {
    const EigenSpectrum spec = eigenvalues(m);
    double mx = 0.0;
    for (const Complex& lam : spec.values) mx = std::max(mx, std::abs(lam));
    const double zero_thresh = 1e-12 * mx;
    double mn = std::numeric_limits<double>::infinity();
    for (const Complex& lam : spec.values) {
      const double a = std::abs(lam);
      if (a > zero_thresh) mn = std::min(mn, a);
    }
    if (mx == 0.0 || !std::isfinite(mn))
      throw AllZeroSpectrum("suggest_epsilon: spectrum below zero threshold");
    best = std::min(best, mx / mn);
  }
  return std::max(best, eps_min);
}

double dfn_epsilon_bound(const std::vector<std::pair<double, double>>& samples,
                         double spacing) {
  if (samples.size() < 3)
    throw std::invalid_argument("dfn_epsilon_bound: need at least 3 samples");
  if (!(spacing > 0.0)) throw std::invalid_argument("dfn_epsilon_bound: spacing must be > 0");
  const double tol = 1e-9 * std::max(1.0, std::fabs(spacing));
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    if (std::fabs(samples[i + 1].first - samples[i].first - spacing) > tol)
      throw std::invalid_argument("dfn_epsilon_bound: non-uniform spacing");
  double max_second = 0.0;
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double second = samples[i + 1].second - 2.0 * samples[i].second +
                          samples[i - 1].second;
    max_second = std::max(max_second, std::fabs(second));
  }
  // (max |g''| / 8) * h^2 with g'' = second difference / h^2.
  return max_second / 8.0;
}

SymEigen sym_eigen(const Matrix& m, std::size_t max_sweeps) {
  if (!m.square()) throw std::invalid_argument("sym_eigen: non-square input");
  const std::size_t n = m.rows();
  Matrix a = 0.5 * (m + m.transposed());
  Matrix v = Matrix::identity(n);

  const double scale = std::max(frobenius_norm(a), 1e-300);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= 1e-14 * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = sign_of(theta) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  // Ascending order with matching columns.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t x, std::size_t y) { return out.values[x] < out.values[y]; });
  SymEigen sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    sorted.values[c] = out.values[idx[c]];
    for (std::size_t r = 0; r < n; ++r) sorted.vectors(r, c) = v(r, idx[c]);
  }
  return sorted;
}

Matrix matrix_sqrt_psd(const Matrix& m, std::size_t iters) {
  if (!m.square()) throw std::invalid_argument("matrix_sqrt_psd: non-square input");
  const double asym = max_abs(m - m.transposed());
  if (asym > 1e-8 * (1.0 + max_abs(m)))
    throw std::invalid_argument("matrix_sqrt_psd: input not symmetric");
  const SymEigen se = sym_eigen(m, iters);
  double lam_max = 0.0;
  for (double lam : se.values) lam_max = std::max(lam_max, std::fabs(lam));
  const double tol = 1e-8 * std::max(1.0, lam_max);
  const std::size_t n = m.rows();
  std::vector<double> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (se.values[i] < -tol) throw NotPSD("matrix_sqrt_psd: negative eigenvalue");
    root[i] = std::sqrt(std::max(se.values[i], 0.0));
  }
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += se.vectors(i, k) * root[k] * se.vectors(j, k);
      r(i, j) = s;
      r(j, i) = s;
    }
  return r;
}

}  // namespace schurgan::la
