#pragma once

// Small dense conic engine over Hermitian matrices. A problem is the affine
// variety {X in span(basis) : tr(C_j X) = b_j}, optionally compressed onto
// the range of a support projector, intersected with the PSD cone.
//
//   feasibility      alternating projections (PSD clip + exact affine
//                    projection) with stall detection for infeasibility.
//   max_min_eigen    maximise lambda_min(X) over the variety.
//   linear_extremum  extremise tr(Obj X) over the spectrahedron.
//
// The two optimisation problems are solved by a log-barrier Newton method
// on the affine coordinates; bisection_tol is the duality-gap target.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qap/errors.hpp"
#include "qap/hermitian.hpp"

namespace qap {

struct LinearConstraint {
  HermitianOperator op;  // C
  double rhs = 0.0;      // b in tr(C X) = b
};

struct AffineSpectralProblem {
  std::size_t dim = 0;
  std::vector<HermitianOperator> basis;
  std::vector<LinearConstraint> constraints;
  std::optional<HermitianOperator> objective;
  /// When set, X lives on range(support): every operator is compressed onto
  /// it and positivity is tested on the compressed block.
  std::optional<SupportProjector> support;
  /// Cone is {X >= psd_floor * I} on the (compressed) space.
  double psd_floor = 0.0;
};

struct SolverConfig {
  double feas_tol = 1e-8;
  int max_iter = 20000;
  double bisection_tol = 1e-9;
  int stall_window = 200;
};

enum class SolverStatus { feasible, infeasible, objective_value, boundary };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::feasible: return "feasible";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::objective_value: return "objective_value";
    case SolverStatus::boundary: return "boundary";
  }
  return "?";
}

struct SolverOutcome {
  SolverStatus status = SolverStatus::infeasible;
  std::optional<HermitianOperator> point;  // full K x K operator
  std::vector<double> coordinates;         // coefficients on the problem basis
  double value = 0.0;                      // objective, or lambda_min for max_min_eigen
  double affine_residual = 0.0;            // max_j |tr(C_j X) - b_j|
  double cone_violation = 0.0;             // ||negative part of X - floor I||_F
  int iterations = 0;
};

enum class Extremum { min, max };

/// Orthonormal basis (Frobenius, real inner product) of all n x n Hermitian matrices.
inline std::vector<HermitianOperator> full_hermitian_basis(std::size_t n) {
  std::vector<HermitianOperator> out;
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    Matrix e(n, n);
    e(j, j) = 1.0;
    out.emplace_back(e);
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k) {
      Matrix re(n, n), im(n, n);
      re(j, k) = re(k, j) = r;
      im(j, k) = Complex(0.0, r);
      im(k, j) = Complex(0.0, -r);
      out.emplace_back(re);
      out.emplace_back(im);
    }
  return out;
}

inline std::vector<HermitianOperator> diagonal_basis(std::size_t n) {
  std::vector<HermitianOperator> out;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> d(n, 0.0);
    d[j] = 1.0;
    out.push_back(HermitianOperator::diagonal(d));
  }
  return out;
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
inline HermitianOperator project_psd(const HermitianOperator& a) {
  return eigh(a).map([](double x) { return x > 0.0 ? x : 0.0; });
}

namespace detail {

using RealVec = std::vector<double>;

inline double dot(const RealVec& a, const RealVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const RealVec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const RealVec& x, RealVec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline double frob_inner(const HermitianOperator& a, const HermitianOperator& b) { return trace_inner(a, b); }

/// Exact description of the affine variety in coordinates:
/// X = offset + sum_l w_l direction_l, directions orthonormal.
class AffineParameterization {
 public:
  AffineParameterization(const AffineSpectralProblem& p, double feas_tol) {
    if (p.dim == 0) throw DimensionError("AffineSpectralProblem: dimension must be positive");
    if (p.support) {
      detail::require_same_dim(p.support->projector.dim(), p.dim, "AffineSpectralProblem support");
      iso_ = p.support->basis;
      if (iso_.cols() == 0) throw InfeasibleAffine("AffineSpectralProblem: support projector has rank zero");
    } else {
      iso_ = Matrix::identity(p.dim);
    }
    n_ = iso_.cols();
    nbasis_ = p.basis.size();

    // Gram-Schmidt on the compressed basis, tracking q_k = sum_j t_kj B_j.
    for (std::size_t j = 0; j < p.basis.size(); ++j) {
      detail::require_same_dim(p.basis[j].dim(), p.dim, "AffineSpectralProblem basis");
      const HermitianOperator bj = compress(p.basis[j]);
      HermitianOperator v = bj;
      RealVec t(nbasis_, 0.0);
      t[j] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < q_.size(); ++k) {
          const double c = frob_inner(q_[k], v);
          v -= q_[k] * c;
          axpy(-c, t_[k], t);
        }
      }
      const double nv = v.frobenius_norm();
      if (nv > 1e-10 * std::max(bj.frobenius_norm(), 1e-300)) {
        q_.push_back(v * (1.0 / nv));
        for (double& x : t) x /= nv;
        t_.push_back(std::move(t));
      }
    }
    const std::size_t m = q_.size();

    // Constraint rows in q-coordinates, orthonormalised with their right-hand sides.
    for (const auto& con : p.constraints) {
      detail::require_same_dim(con.op.dim(), p.dim, "AffineSpectralProblem constraint");
      const HermitianOperator c = compress(con.op);
      RealVec row(m);
      for (std::size_t k = 0; k < m; ++k) row[k] = frob_inner(c, q_[k]);
      double b = con.rhs;
      const double row_scale = std::max(norm2(row), c.frobenius_norm());
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
          const double proj = dot(rows_[i], row);
          axpy(-proj, rows_[i], row);
          b -= proj * rhs_[i];
        }
      }
      const double nr = norm2(row);
      if (nr <= 1e-10 * std::max(row_scale, 1.0)) {
        if (std::abs(b) > feas_tol * std::max(1.0, std::abs(con.rhs))) {
          throw InfeasibleAffine("affine constraints are inconsistent (residual " + std::to_string(b) + ")");
        }
        continue;
      }
      for (double& x : row) x /= nr;
      rows_.push_back(std::move(row));
      rhs_.push_back(b / nr);
    }

    // Particular (minimum-norm) solution and an orthonormal complement of the rows.
    RealVec z0(m, 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i) axpy(rhs_[i], rows_[i], z0);
    offset_ = from_q(z0);

    std::vector<RealVec> span = rows_;
    for (std::size_t e = 0; e < m && span.size() < m; ++e) {
      RealVec v(m, 0.0);
      v[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& s : span) axpy(-dot(s, v), s, v);
      const double nv = norm2(v);
      if (nv > 1e-6) {
        for (double& x : v) x /= nv;
        span.push_back(v);
        free_q_.push_back(v);
        directions_.push_back(from_q(v));
      }
    }
  }

  std::size_t reduced_dim() const { return n_; }
  std::size_t num_free() const { return directions_.size(); }
  std::size_t span_dim() const { return q_.size(); }
  const HermitianOperator& offset() const { return offset_; }
  const std::vector<HermitianOperator>& directions() const { return directions_; }

  HermitianOperator compress(const HermitianOperator& full) const { return full.compress(iso_); }
  HermitianOperator lift(const HermitianOperator& reduced) const {
    return HermitianOperator::hermitian_part(iso_ * (reduced * iso_.adjoint()));
  }

  HermitianOperator at(std::span<const double> w) const {
    HermitianOperator x = offset_;
    for (std::size_t l = 0; l < w.size(); ++l)
      if (w[l] != 0.0) x += directions_[l] * w[l];
    return x;
  }

  /// Nearest point of the variety (reduced space, Frobenius norm).
  HermitianOperator project(const HermitianOperator& x) const {
    RealVec z = to_q(x);
    for (std::size_t i = 0; i < rows_.size(); ++i) axpy(-(dot(rows_[i], z) - rhs_[i]), rows_[i], z);
    return from_q(z);
  }

  /// Free coordinates w of a point already on the variety.
  RealVec free_coordinates(const HermitianOperator& x) const {
    const RealVec z = to_q(x);
    RealVec w(free_q_.size());
    for (std::size_t l = 0; l < free_q_.size(); ++l) w[l] = dot(free_q_[l], z);
    return w;
  }

  /// Coefficients on the caller's basis for a point in the span.
  RealVec basis_coordinates(const HermitianOperator& x) const {
    const RealVec z = to_q(x);
    RealVec out(nbasis_, 0.0);
    for (std::size_t k = 0; k < q_.size(); ++k) axpy(z[k], t_[k], out);
    return out;
  }

 private:
  RealVec to_q(const HermitianOperator& x) const {
    RealVec z(q_.size());
    for (std::size_t k = 0; k < q_.size(); ++k) z[k] = frob_inner(q_[k], x);
    return z;
  }
  HermitianOperator from_q(const RealVec& z) const {
    HermitianOperator x = HermitianOperator::zero(n_);
    for (std::size_t k = 0; k < z.size(); ++k)
      if (z[k] != 0.0) x += q_[k] * z[k];
    return x;
  }

  Matrix iso_;
  std::size_t n_ = 0;
  std::size_t nbasis_ = 0;
  std::vector<HermitianOperator> q_;
  std::vector<RealVec> t_;
  std::vector<RealVec> rows_;
  RealVec rhs_;
  std::vector<RealVec> free_q_;
  std::vector<HermitianOperator> directions_;
  HermitianOperator offset_ = HermitianOperator::zero(1);
};

inline double negative_part_norm(const Spectrum& s, double floor) {
  double acc = 0.0;
  for (double x : s.eigenvalues)
    if (x < floor) acc += (x - floor) * (x - floor);
  return std::sqrt(acc);
}

inline SolverOutcome make_outcome(const AffineSpectralProblem& p, const AffineParameterization& ap,
                                  const HermitianOperator& reduced, SolverStatus status, double value, int iterations) {
  SolverOutcome out;
  out.status = status;
  out.value = value;
  out.iterations = iterations;
  HermitianOperator full = ap.lift(reduced);
  for (const auto& c : p.constraints)
    out.affine_residual = std::max(out.affine_residual, std::abs(trace_inner(c.op, full) - c.rhs));
  out.cone_violation = negative_part_norm(eigh(reduced), p.psd_floor);
  out.coordinates = ap.basis_coordinates(reduced);
  out.point = std::move(full);
  return out;
}

/// maximize c.y subject to A0 + sum_l y_l A_l > 0, from a strictly feasible
/// y. Log-barrier path following with damped Newton centring; stops once
/// the barrier gap bound n/s drops below gap_tol.
struct BarrierResult {
  RealVec y;
  int newton_steps = 0;
};

inline BarrierResult maximize_lmi(const HermitianOperator& a0, const std::vector<HermitianOperator>& a,
                                  const RealVec& c, RealVec y, double gap_tol, int max_steps) {
  const std::size_t p = a.size();
  const double n = static_cast<double>(a0.dim());
  BarrierResult res;
  if (p == 0) {
    res.y = std::move(y);
    return res;
  }

  auto build = [&](const RealVec& yy) {
    HermitianOperator f = a0;
    for (std::size_t l = 0; l < p; ++l)
      if (yy[l] != 0.0) f += a[l] * yy[l];
    return f;
  };
  // phi_s(y) = -s c.y - log det F(y); +inf outside the open cone.
  auto phi = [&](const RealVec& yy, double s, Spectrum* spec_out) {
    const Spectrum sp = eigh(build(yy));
    if (sp.min() <= 0.0) return std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (double x : sp.eigenvalues) logdet += std::log(x);
    if (spec_out) *spec_out = sp;
    return -s * dot(c, yy) - logdet;
  };

  double s = 1.0;
  int steps = 0;
  Spectrum sp;
  double cur = phi(y, s, &sp);
  if (!std::isfinite(cur)) throw NumericalFailure("maximize_lmi: starting point is not strictly feasible");

  for (;;) {
    // Centre for the current s.
    for (int inner = 0;; ++inner) {
      if (++steps > max_steps) throw IterationLimit("maximize_lmi: Newton step budget exhausted");
      const HermitianOperator f_inv_sqrt = sp.map([](double x) { return 1.0 / std::sqrt(x); });
      std::vector<HermitianOperator> scaled;
      scaled.reserve(p);
      for (std::size_t l = 0; l < p; ++l)
        scaled.push_back(HermitianOperator::hermitian_part(f_inv_sqrt * (a[l] * f_inv_sqrt)));
      Eigen::MatrixXd h(p, p);
      Eigen::VectorXd g(p);
      for (std::size_t l = 0; l < p; ++l) {
        g(l) = -s * c[l] - scaled[l].trace();
        for (std::size_t k = 0; k <= l; ++k) h(l, k) = h(k, l) = frob_inner(scaled[l], scaled[k]);
      }
      const Eigen::VectorXd dir = h.ldlt().solve(-g);
      const double decrement2 = -g.dot(dir);
      if (!std::isfinite(decrement2)) throw NumericalFailure("maximize_lmi: singular Newton system");
      // Rounding puts a floor under the decrement once s is large.
      if (decrement2 < 1e-10 || inner >= 60) break;

      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-14) {
        RealVec trial = y;
        for (std::size_t l = 0; l < p; ++l) trial[l] += alpha * dir(l);
        Spectrum trial_sp;
        const double val = phi(trial, s, &trial_sp);
        if (val <= cur - 0.25 * alpha * decrement2) {
          y = std::move(trial);
          sp = std::move(trial_sp);
          cur = val;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      double step = 0.0, size = 1.0;
      for (std::size_t l = 0; l < p; ++l) {
        step = std::max(step, std::abs(alpha * dir(l)));
        size = std::max(size, std::abs(y[l]));
      }
      if (step <= 1e-13 * size) break;
      if (std::abs(dot(c, y)) > 1e12) throw NumericalFailure("maximize_lmi: objective appears unbounded");
    }
    if (n / s < gap_tol) break;
    s *= 10.0;
    cur = phi(y, s, &sp);
  }
  res.y = std::move(y);
  res.newton_steps = steps;
  return res;
}

struct MaxMinResult {
  HermitianOperator point;  // reduced
  double value = 0.0;       // lambda_min(point)
  int iterations = 0;
};

inline MaxMinResult max_min_eigen_reduced(const AffineParameterization& ap, const SolverConfig& cfg) {
  const std::size_t m = ap.num_free();
  if (m == 0) {
    return MaxMinResult{ap.offset(), eigh(ap.offset()).min(), 0};
  }
  // Variables (w, t); F = offset + sum w_l G_l - t I; maximise t.
  std::vector<HermitianOperator> a = ap.directions();
  a.push_back(-HermitianOperator::identity(ap.reduced_dim()));
  RealVec c(m + 1, 0.0);
  c[m] = 1.0;
  RealVec y0(m + 1, 0.0);
  y0[m] = eigh(ap.offset()).min() - 1.0;
  const BarrierResult br = maximize_lmi(ap.offset(), a, c, y0, cfg.bisection_tol, cfg.max_iter);
  HermitianOperator x = ap.at(std::span<const double>(br.y.data(), m));
  const double value = eigh(x).min();
  return MaxMinResult{std::move(x), value, br.newton_steps};
}

}  // namespace detail

/// Nearest point (Frobenius) of the affine variety, returned as a full operator.
inline HermitianOperator project_affine(const AffineSpectralProblem& problem, const HermitianOperator& x,
                                        const SolverConfig& cfg = {}) {
  const detail::AffineParameterization ap(problem, cfg.feas_tol);
  return ap.lift(ap.project(ap.compress(x)));
}

/// Does the variety meet the cone {X >= floor I}? Alternating projections
/// from the minimum-norm point of the variety. Infeasible when the
/// projection gap stays above feas_tol and stops shrinking over
/// stall_window iterations (or when the affine constraints are inconsistent).
inline SolverOutcome feasibility(const AffineSpectralProblem& problem, const SolverConfig& cfg = {}) {
  std::optional<detail::AffineParameterization> ap;
  try {
    ap.emplace(problem, cfg.feas_tol);
  } catch (const InfeasibleAffine&) {
    SolverOutcome out;
    out.status = SolverStatus::infeasible;
    return out;
  }
  const double floor = problem.psd_floor;
  const auto shift = HermitianOperator::identity(ap->reduced_dim()) * floor;
  HermitianOperator x = ap->offset();
  std::vector<double> gaps;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Spectrum s = eigh(x);
    if (detail::negative_part_norm(s, floor) <= cfg.feas_tol) {
      return detail::make_outcome(problem, *ap, x, SolverStatus::feasible, s.min(), it);
    }
    const HermitianOperator z = project_psd(x - shift) + shift;
    HermitianOperator next = ap->project(z);
    const double gap = (z - next).frobenius_norm();
    gaps.push_back(gap);
    const auto w = static_cast<std::size_t>(cfg.stall_window);
    if (gaps.size() > w && gap > cfg.feas_tol) {
      const double before = gaps[gaps.size() - 1 - w];
      if (before - gap <= 1e-4 * before) {
        return detail::make_outcome(problem, *ap, next, SolverStatus::infeasible, eigh(next).min(), it + 1);
      }
    }
    x = std::move(next);
  }
  throw IterationLimit("feasibility: no verdict within " + std::to_string(cfg.max_iter) + " iterations");
}

/// Maximise lambda_min of X (compressed to the support, if any) over the
/// variety. Requires a normalisation such as tr(X) = 1 for boundedness.
/// Status is boundary when |lambda_min*| <= feas_tol.
inline SolverOutcome max_min_eigen(const AffineSpectralProblem& problem, const SolverConfig& cfg = {}) {
  const detail::AffineParameterization ap(problem, cfg.feas_tol);
  const detail::MaxMinResult r = detail::max_min_eigen_reduced(ap, cfg);
  const SolverStatus st =
      std::abs(r.value) <= cfg.feas_tol ? SolverStatus::boundary : SolverStatus::objective_value;
  return detail::make_outcome(problem, ap, r.point, st, r.value, r.iterations);
}

/// Extremise tr(Obj X) over {X in variety, X >= floor I}. The interior is
/// found with max_min_eigen; an empty spectrahedron raises InfeasibleAffine
/// and one without interior (to feas_tol) returns status boundary at the
/// max-min point.
inline SolverOutcome linear_extremum(const AffineSpectralProblem& problem, const SolverConfig& cfg,
                                     Extremum direction) {
  if (!problem.objective) throw DomainError("linear_extremum: problem has no objective");
  const detail::AffineParameterization ap(problem, cfg.feas_tol);
  const HermitianOperator obj = ap.compress(*problem.objective);
  auto objective_at = [&](const HermitianOperator& x) { return trace_inner(obj, x); };

  const detail::MaxMinResult start = detail::max_min_eigen_reduced(ap, cfg);
  const double margin = start.value - problem.psd_floor;
  if (margin < -cfg.feas_tol) throw InfeasibleAffine("linear_extremum: spectrahedron is empty");
  if (margin <= cfg.feas_tol) {
    return detail::make_outcome(problem, ap, start.point, SolverStatus::boundary, objective_at(start.point),
                                start.iterations);
  }

  const std::size_t m = ap.num_free();
  const double sign = direction == Extremum::max ? 1.0 : -1.0;
  detail::RealVec c(m);
  double cnorm = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    c[l] = sign * trace_inner(obj, ap.directions()[l]);
    cnorm = std::max(cnorm, std::abs(c[l]));
  }
  if (cnorm <= 1e-14 * std::max(1.0, obj.frobenius_norm())) {
    return detail::make_outcome(problem, ap, start.point, SolverStatus::objective_value, objective_at(start.point),
                                start.iterations);
  }
  const HermitianOperator a0 = ap.offset() - HermitianOperator::identity(ap.reduced_dim()) * problem.psd_floor;
  const detail::BarrierResult br = detail::maximize_lmi(a0, ap.directions(), c, ap.free_coordinates(start.point),
                                                        cfg.bisection_tol, cfg.max_iter);
  const HermitianOperator x = ap.at(br.y);
  return detail::make_outcome(problem, ap, x, SolverStatus::objective_value, objective_at(x),
                              start.iterations + br.newton_steps);
}

}  // namespace qap
