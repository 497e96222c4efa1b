#pragma once

// Dense complex Hermitian linear algebra: a general complex matrix type, a
// Hermitian operator type that enforces conjugate symmetry at construction,
// a cyclic Jacobi eigensolver and the spectral functions built on it
// (PSD tests, support projectors, square roots, pseudo-inverse square roots).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qap/errors.hpp"

namespace qap {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

inline constexpr Complex kI{0.0, 1.0};

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// ---------------------------------------------------------------------------
// Matrix: row-major dense complex matrix with value semantics.
// ---------------------------------------------------------------------------
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  Matrix(std::initializer_list<std::initializer_list<Complex>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimensionError("Matrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Complex> data() const { return data_; }

  Matrix adjoint() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  Complex trace() const {
    Complex t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& z : data_) s += std::norm(z);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o, "Matrix::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o, "Matrix::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(Complex s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, Complex s) { return a *= s; }
  friend Matrix operator*(Complex s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("Matrix product: inner dimensions differ");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend CVector operator*(const Matrix& a, std::span<const Complex> v) {
    if (a.cols_ != v.size()) throw DimensionError("Matrix-vector product: dimension mismatch");
    CVector out(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) out[i] += a(i, k) * v[k];
    return out;
  }

  CVector column(std::size_t c) const {
    CVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

 private:
  void check_same_shape(const Matrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError(std::string(what) + ": shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

// ---------------------------------------------------------------------------
// HermitianOperator
// ---------------------------------------------------------------------------

/// Relative asymmetry accepted at construction; anything larger is rejected.
inline constexpr double kHermiticityTol = 1e-12;

class HermitianOperator {
 public:
  /// Validates conjugate symmetry (relative 1e-12) and finiteness, then
  /// stores the exactly symmetric upper-triangle reflection.
  explicit HermitianOperator(const Matrix& m) : m_(m) {
    if (!m.is_square() || m.rows() == 0) throw DimensionError("HermitianOperator: need a non-empty square matrix");
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t j = 0; j < m.rows(); ++j)
      for (std::size_t k = j; k < m.cols(); ++k) {
        if (!is_finite(m(j, k))) throw DomainError("HermitianOperator: non-finite entry");
        if (std::abs(m(j, k) - std::conj(m(k, j))) > kHermiticityTol * scale) {
          throw DomainError("HermitianOperator: entry (" + std::to_string(j) + "," + std::to_string(k) +
                            ") is not the conjugate of its transpose");
        }
      }
    symmetrize_from_upper();
  }

  HermitianOperator(std::initializer_list<std::initializer_list<Complex>> rows) : HermitianOperator(Matrix(rows)) {}

  /// (A + A^dagger) / 2 without a symmetry check; for computed products
  /// that are Hermitian up to rounding.
  static HermitianOperator hermitian_part(const Matrix& a) {
    if (!a.is_square() || a.rows() == 0) throw DimensionError("hermitian_part: need a non-empty square matrix");
    Matrix h(a.rows(), a.cols());
    for (std::size_t j = 0; j < a.rows(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) h(j, k) = 0.5 * (a(j, k) + std::conj(a(k, j)));
    return HermitianOperator(Unchecked{}, std::move(h));
  }

  static HermitianOperator identity(std::size_t n) { return HermitianOperator(Unchecked{}, Matrix::identity(n)); }
  static HermitianOperator zero(std::size_t n) {
    if (n == 0) throw DimensionError("HermitianOperator::zero: dimension must be positive");
    return HermitianOperator(Unchecked{}, Matrix(n, n));
  }
  static HermitianOperator diagonal(std::span<const double> d) {
    if (d.empty()) throw DimensionError("HermitianOperator::diagonal: empty diagonal");
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!std::isfinite(d[i])) throw DomainError("HermitianOperator::diagonal: non-finite entry");
      m(i, i) = d[i];
    }
    return HermitianOperator(Unchecked{}, std::move(m));
  }
  static HermitianOperator diagonal(std::initializer_list<double> d) {
    return diagonal(std::span<const double>(d.begin(), d.size()));
  }
  /// |v><v|
  static HermitianOperator outer(std::span<const Complex> v) {
    Matrix m(v.size(), v.size());
    for (std::size_t j = 0; j < v.size(); ++j)
      for (std::size_t k = 0; k < v.size(); ++k) m(j, k) = v[j] * std::conj(v[k]);
    return hermitian_part(m);
  }

  std::size_t dim() const { return m_.rows(); }
  const Matrix& matrix() const& { return m_; }
  Complex operator()(std::size_t j, std::size_t k) const { return m_(j, k); }
  double diag(std::size_t j) const { return m_(j, j).real(); }

  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.frobenius_norm(); }

  HermitianOperator& operator+=(const HermitianOperator& o) {
    detail::require_same_dim(dim(), o.dim(), "HermitianOperator::operator+=");
    m_ += o.m_;
    return *this;
  }
  HermitianOperator& operator-=(const HermitianOperator& o) {
    detail::require_same_dim(dim(), o.dim(), "HermitianOperator::operator-=");
    m_ -= o.m_;
    return *this;
  }
  HermitianOperator& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a -= b; }
  friend HermitianOperator operator-(HermitianOperator a) { return a *= -1.0; }
  friend HermitianOperator operator*(HermitianOperator a, double s) { return a *= s; }
  friend HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }

  friend Matrix operator*(const HermitianOperator& a, const HermitianOperator& b) { return a.m_ * b.m_; }
  friend Matrix operator*(const Matrix& a, const HermitianOperator& b) { return a * b.m_; }
  friend Matrix operator*(const HermitianOperator& a, const Matrix& b) { return a.m_ * b; }

  /// <psi|A|psi>, real for Hermitian A.
  double quadratic_form(std::span<const Complex> psi) const {
    detail::require_same_dim(dim(), psi.size(), "quadratic_form");
    Complex s = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) {
      Complex row = 0.0;
      for (std::size_t k = 0; k < dim(); ++k) row += m_(j, k) * psi[k];
      s += std::conj(psi[j]) * row;
    }
    return s.real();
  }

  /// V^dagger A V for an isometry V (n x r), giving an r x r operator.
  HermitianOperator compress(const Matrix& v) const {
    if (v.rows() != dim()) throw DimensionError("compress: isometry row count must equal dim");
    return hermitian_part(v.adjoint() * (m_ * v));
  }

  friend bool operator==(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim()) return false;
    return std::equal(a.m_.data().begin(), a.m_.data().end(), b.m_.data().begin());
  }

 private:
  struct Unchecked {};
  HermitianOperator(Unchecked, Matrix m) : m_(std::move(m)) { symmetrize_from_upper(); }

  void symmetrize_from_upper() {
    for (std::size_t j = 0; j < m_.rows(); ++j) {
      m_(j, j) = m_(j, j).real();
      for (std::size_t k = j + 1; k < m_.cols(); ++k) m_(k, j) = std::conj(m_(j, k));
    }
  }

  Matrix m_;
};

/// Re tr(A B) for Hermitian A, B.
inline double trace_inner(const HermitianOperator& a, const HermitianOperator& b) {
  detail::require_same_dim(a.dim(), b.dim(), "trace_inner");
  Complex t = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j)
    for (std::size_t k = 0; k < a.dim(); ++k) t += a(j, k) * b(k, j);
  return t.real();
}

/// Imaginary residue of tr(A B); zero up to rounding for Hermitian inputs.
inline double trace_inner_imag_residue(const HermitianOperator& a, const HermitianOperator& b) {
  detail::require_same_dim(a.dim(), b.dim(), "trace_inner");
  Complex t = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j)
    for (std::size_t k = 0; k < a.dim(); ++k) t += a(j, k) * b(k, j);
  return std::abs(t.imag());
}

inline double norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Spectral decomposition (cyclic complex Jacobi)
// ---------------------------------------------------------------------------

struct Spectrum {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]

  std::size_t dim() const { return eigenvalues.size(); }
  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
  CVector vector(std::size_t k) const { return eigenvectors.column(k); }

  /// U f(Lambda) U^dagger
  HermitianOperator map(const std::function<double(double)>& f) const {
    const std::size_t n = dim();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double fk = f(eigenvalues[k]);
      if (fk == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const Complex uik = eigenvectors(i, k) * fk;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * std::conj(eigenvectors(j, k));
      }
    }
    return HermitianOperator::hermitian_part(out);
  }

  HermitianOperator reconstruct() const {
    return map([](double x) { return x; });
  }
};

struct EighOptions {
  int max_sweeps = 50;
  /// Converged once the off-diagonal Frobenius mass is below rel_tol * ||A||_F.
  double rel_tol = 1e-14;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.rows(); ++j)
    for (std::size_t k = 0; k < w.cols(); ++k)
      if (j != k) s += std::norm(w(j, k));
  return std::sqrt(s);
}

// One complex Jacobi rotation annihilating w(p,q). The unitary J acting on
// the (p,q) plane is diag(1, conj(phase)) * [[c, s], [-s, c]], where phase
// is the unit phase of w(p,q); w <- J^dagger w J and v <- v J.
inline void jacobi_rotate(Matrix& w, Matrix& v, std::size_t p, std::size_t q) {
  const Complex gamma = w(p, q);
  const double g = std::abs(gamma);
  if (g == 0.0) return;
  const Complex phase_conj = std::conj(gamma / g);
  const double theta = (w(q, q).real() - w(p, p).real()) / (2.0 * g);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const Complex jpp = c, jpq = s, jqp = -s * phase_conj, jqq = c * phase_conj;
  const std::size_t n = w.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const Complex akp = w(k, p), akq = w(k, q);
    w(k, p) = akp * jpp + akq * jqp;
    w(k, q) = akp * jpq + akq * jqq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Complex apk = w(p, k), aqk = w(q, k);
    w(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
    w(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
  }
  w(p, q) = 0.0;
  w(q, p) = 0.0;
  w(p, p) = w(p, p).real();
  w(q, q) = w(q, q).real();
  for (std::size_t k = 0; k < n; ++k) {
    const Complex vkp = v(k, p), vkq = v(k, q);
    v(k, p) = vkp * jpp + vkq * jqp;
    v(k, q) = vkp * jpq + vkq * jqq;
  }
}

}  // namespace detail

inline Spectrum eigh(const HermitianOperator& a, const EighOptions& opt = {}) {
  const std::size_t n = a.dim();
  Matrix w = a.matrix();
  Matrix v = Matrix::identity(n);
  const double target = opt.rel_tol * w.frobenius_norm();

  int sweeps = 0;
  while (detail::off_diagonal_norm(w) > target) {
    if (sweeps++ >= opt.max_sweeps) {
      throw NumericalFailure("eigh: Jacobi iteration did not converge within " + std::to_string(opt.max_sweeps) +
                             " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) detail::jacobi_rotate(w, v, p, q);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return w(x, x).real() < w(y, y).real(); });

  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = w(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline double min_eigenvalue(const HermitianOperator& a) { return eigh(a).min(); }
inline double max_eigenvalue(const HermitianOperator& a) { return eigh(a).max(); }

inline bool is_psd(const HermitianOperator& a, double tol) {
  if (tol < 0.0) throw DomainError("is_psd: tolerance must be non-negative");
  return eigh(a).min() >= -tol;
}

/// Default numeric-rank cutoff: rel * max(1, lambda_max).
inline double relative_cutoff(const Spectrum& s, double rel = 1e-9) { return rel * std::max(1.0, s.max()); }

// ---------------------------------------------------------------------------
// Support projectors and operator functions
// ---------------------------------------------------------------------------

struct SupportProjector {
  HermitianOperator projector;
  std::size_t rank = 0;
  double cutoff = 0.0;
  /// Orthonormal basis of the range (dim x rank), columns ordered by eigenvalue.
  Matrix basis;

  HermitianOperator null_projector() const { return HermitianOperator::identity(projector.dim()) - projector; }
};

namespace detail {

inline void require_psd_within(const Spectrum& s, double cutoff, const char* what) {
  if (s.min() < -cutoff) {
    throw DomainError(std::string(what) + ": operator has eigenvalue " + std::to_string(s.min()) +
                      " below -cutoff " + std::to_string(-cutoff));
  }
}

inline SupportProjector support_from_spectrum(const Spectrum& s, double cutoff) {
  const std::size_t n = s.dim();
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < n; ++k)
    if (s.eigenvalues[k] > cutoff) keep.push_back(k);
  Matrix basis(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) basis(i, c) = s.eigenvectors(i, keep[c]);
  return SupportProjector{s.map([cutoff](double x) { return x > cutoff ? 1.0 : 0.0; }), keep.size(), cutoff,
                          std::move(basis)};
}

}  // namespace detail

/// Projector onto the eigenvectors of a PSD operator whose eigenvalue
/// exceeds cutoff. Passing no cutoff uses relative_cutoff of the spectrum.
inline SupportProjector support_projector(const HermitianOperator& a, std::optional<double> cutoff = std::nullopt) {
  const Spectrum s = eigh(a);
  const double cut = cutoff.value_or(relative_cutoff(s));
  detail::require_psd_within(s, cut, "support_projector");
  return detail::support_from_spectrum(s, cut);
}

inline HermitianOperator op_sqrt(const HermitianOperator& a, std::optional<double> cutoff = std::nullopt) {
  const Spectrum s = eigh(a);
  const double cut = cutoff.value_or(relative_cutoff(s));
  detail::require_psd_within(s, cut, "op_sqrt");
  return s.map([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

/// Pseudo-inverse square root: lambda > cutoff maps to lambda^{-1/2}, the rest to 0.
inline HermitianOperator pinv_sqrt(const HermitianOperator& a, std::optional<double> cutoff = std::nullopt) {
  const Spectrum s = eigh(a);
  const double cut = cutoff.value_or(relative_cutoff(s));
  detail::require_psd_within(s, cut, "pinv_sqrt");
  return s.map([cut](double x) { return x > cut ? 1.0 / std::sqrt(x) : 0.0; });
}

// ---------------------------------------------------------------------------
// K = 2 Pauli parameterization: A = i*I + x*sigma_x + y*sigma_y + z*sigma_z
// ---------------------------------------------------------------------------

struct PauliCoefficients {
  double i_coef = 0.0;
  double x_coef = 0.0;
  double y_coef = 0.0;
  double z_coef = 0.0;

  friend bool operator==(const PauliCoefficients&, const PauliCoefficients&) = default;
};

inline HermitianOperator pauli_compose(const PauliCoefficients& c) {
  Matrix m(2, 2);
  m(0, 0) = c.i_coef + c.z_coef;
  m(1, 1) = c.i_coef - c.z_coef;
  m(0, 1) = Complex(c.x_coef, -c.y_coef);
  m(1, 0) = Complex(c.x_coef, c.y_coef);
  return HermitianOperator(m);
}

inline PauliCoefficients pauli_decompose(const HermitianOperator& a) {
  if (a.dim() != 2) throw DimensionError("pauli_decompose: operator must be 2x2");
  const double d0 = a.diag(0), d1 = a.diag(1);
  return PauliCoefficients{0.5 * (d0 + d1), a(0, 1).real(), -a(0, 1).imag(), 0.5 * (d0 - d1)};
}

namespace pauli {
inline HermitianOperator I() { return HermitianOperator::identity(2); }
inline HermitianOperator X() { return pauli_compose({0, 1, 0, 0}); }
inline HermitianOperator Y() { return pauli_compose({0, 0, 1, 0}); }
inline HermitianOperator Z() { return pauli_compose({0, 0, 0, 1}); }
}  // namespace pauli

}  // namespace qap
