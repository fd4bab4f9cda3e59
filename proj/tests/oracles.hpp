#pragma once

// Test-only oracles kept independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "schurgan/matrix.hpp"
#include "schurgan/rng.hpp"

namespace oracles {

using schurgan::Matrix;
using schurgan::Rng;
using Complex = std::complex<double>;

inline Matrix random_matrix(Rng& rng, std::size_t n, double scale = 1.0) {
  Matrix m(n, n);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline Matrix random_symmetric(Rng& rng, std::size_t n) {
  Matrix m = random_matrix(rng, n);
  return 0.5 * (m + m.transposed());
}

inline Matrix random_skew(Rng& rng, std::size_t n) {
  Matrix m = random_matrix(rng, n);
  return 0.5 * (m - m.transposed());
}

// Product of random Givens rotations: exactly orthogonal by construction.
inline Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q = Matrix::identity(n);
  const std::size_t rounds = 2 * n + 4;
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n);
    if (i == j) j = (j + 1) % n;
    const double a = rng.uniform(0.0, 6.283185307179586);
    const double c = std::cos(a), s = std::sin(a);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = q(k, i), y = q(k, j);
      q(k, i) = c * x - s * y;
      q(k, j) = s * x + c * y;
    }
  }
  return q;
}

inline Matrix random_upper_triangular(Rng& rng, std::size_t n, double scale = 1.0) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Determinant by cofactor expansion; test sizes only.
inline double det_cofactor(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t jc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, jc++) = m(i, j);
      }
    }
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    acc += sign * m(0, c) * det_cofactor(minor);
  }
  return acc;
}

// Characteristic polynomial coefficients by Faddeev-LeVerrier:
// p(x) = x^n + c[n-1] x^(n-1) + ... + c[0].
inline std::vector<double> char_poly(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  Matrix mk(n, n);  // zero
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 0; i < n; ++i) mk(i, i) += c[n - k + 1];
    mk = a * mk;
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += mk(i, i);
    c[n - k] = -tr / static_cast<double>(k);
  }
  return c;
}

// Durand-Kerner simultaneous root iteration for a monic polynomial.
inline std::vector<Complex> poly_roots(const std::vector<double>& coeffs) {
  const std::size_t deg = coeffs.size() - 1;
  std::vector<Complex> roots(deg);
  Complex seed(0.4, 0.9);
  Complex acc(1.0, 0.0);
  for (std::size_t i = 0; i < deg; ++i) {
    acc *= seed;
    roots[i] = acc;
  }
  auto eval = [&](Complex x) {
    Complex v(0.0, 0.0);
    for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
    return v;
  };
  for (int iter = 0; iter < 500; ++iter) {
    double moved = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      Complex denom(1.0, 0.0);
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      const Complex delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-13) break;
  }
  return roots;
}

// Greedy multiset match; returns the largest pairing distance.
inline double multiset_match_dist(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (const Complex& x : a) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::abs(x - b[j]);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    worst = std::max(worst, bd);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return worst;
}

// Dominant-frequency estimate of a real signal by plain DFT magnitude scan.
inline double dft_peak_hz(const std::vector<double>& x, double sample_rate) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  double best_mag = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < half; ++k) {
    double re = 0.0, im = 0.0;
    const double w = -2.0 * 3.141592653589793238462643383279 * static_cast<double>(k) /
                     static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) {
      re += x[t] * std::cos(w * static_cast<double>(t));
      im += x[t] * std::sin(w * static_cast<double>(t));
    }
    const double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * sample_rate / static_cast<double>(n);
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1e-300, std::fabs(want));
}

}  // namespace oracles
