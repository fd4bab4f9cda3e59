#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "schurgan/matrix.hpp"

namespace schurgan::la {

using Complex = std::complex<double>;

struct ConvergenceFailure : std::runtime_error {
  explicit ConvergenceFailure(const std::string& what) : std::runtime_error(what) {}
};
struct DefectiveMatrix : std::runtime_error {
  explicit DefectiveMatrix(const std::string& what) : std::runtime_error(what) {}
};
struct NotPSD : std::runtime_error {
  explicit NotPSD(const std::string& what) : std::runtime_error(what) {}
};
struct AllZeroSpectrum : std::runtime_error {
  explicit AllZeroSpectrum(const std::string& what) : std::runtime_error(what) {}
};

// Real Schur factorization A = q * t * q^T with q orthogonal and t
// quasi-upper-triangular (2x2 diagonal blocks only for complex pairs).
struct SchurForm {
  Matrix q;
  Matrix t;
};

struct EigenSpectrum {
  std::vector<Complex> values;
};

struct HessenbergForm {
  Matrix h;
  Matrix q;
};

// Right/left eigenvector sets; left vectors satisfy m^T y = lambda y.
struct EigenPairs {
  std::vector<std::vector<Complex>> right;
  std::vector<std::vector<Complex>> left;
};

// Householder reduction to upper Hessenberg form, m = q * h * q^T.
HessenbergForm hessenberg_reduce(const Matrix& m);

// Francis double-shift QR with deflation threshold tol*(|t_ii|+|t_jj|).
// max_sweeps == 0 selects the default 30*n.
SchurForm real_schur(const Matrix& m, double tol = 1e-12, std::size_t max_sweeps = 0);

EigenSpectrum eigenvalues(const Matrix& m);
EigenSpectrum eigenvalues_of_quasi_triangular(const Matrix& t);

// Departure from normality: max(0, ||m||_F^2 - sum |lambda_i|^2).
double dfn(const Matrix& m);

// Cross-validation route: the squared norm of the strictly-upper Schur
// factor read directly off the quasi-triangular t.
double dfn_from_schur(const SchurForm& s);

// Round-off clamps of negative dfn, for diagnostics.
std::uint64_t dfn_clamp_count();

// Eigenvectors by shifted inverse iteration; requires simple eigenvalues.
EigenPairs eigenvectors(const Matrix& m, const EigenSpectrum& spectrum);

// Analytic gradient of dfn; throws DefectiveMatrix below the gap threshold.
Matrix dfn_gradient(const Matrix& m, double sep_tol_scale = 1e-6);

// Central-difference gradient; step == 0 selects 1e-5*(1+||m||_F).
Matrix dfn_gradient_fd(const Matrix& m, double step = 0.0);

// Analytic gradient with finite-difference fallback on defective spectra.
Matrix dfn_gradient_robust(const Matrix& m);

// min over the batch of max|lambda| / min nonzero |lambda|, floored.
double suggest_epsilon(const std::vector<Matrix>& batch, double eps_min = 1e-6);

// Interpolation-error bound (max |g''| / 8) * spacing^2 with g'' estimated
// by second central differences of uniformly spaced samples.
double dfn_epsilon_bound(const std::vector<std::pair<double, double>>& samples,
                         double spacing);

// Symmetric eigendecomposition by cyclic Jacobi; vectors in columns.
struct SymEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymEigen sym_eigen(const Matrix& m, std::size_t max_sweeps = 64);

// Principal square root of a symmetric PSD matrix.
Matrix matrix_sqrt_psd(const Matrix& m, std::size_t iters = 64);

}  // namespace schurgan::la
