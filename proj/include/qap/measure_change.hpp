#pragma once

// Density-operator measure change: absolute continuity, equivalence and the
// Radon-Nikodym superoperator X -> sigma^{1/2} rho^{-1/2} X rho^{-1/2} sigma^{1/2}.

#include <utility>

#include "qap/errors.hpp"
#include "qap/hermitian.hpp"

namespace qap {

inline constexpr double kDefaultContinuityCutoff = 1e-9;

/// sigma << rho, decided as ||sigma Pi_null(rho)||_F <= cutoff ||sigma||_F.
inline bool is_abs_continuous(const HermitianOperator& sigma, const HermitianOperator& rho,
                              double cutoff = kDefaultContinuityCutoff) {
  detail::require_same_dim(sigma.dim(), rho.dim(), "is_abs_continuous");
  const SupportProjector supp = support_projector(rho);
  const Matrix leak = sigma * supp.null_projector();
  return leak.frobenius_norm() <= cutoff * sigma.frobenius_norm();
}

inline bool is_equivalent(const HermitianOperator& sigma, const HermitianOperator& rho,
                          double cutoff = kDefaultContinuityCutoff) {
  return is_abs_continuous(sigma, rho, cutoff) && is_abs_continuous(rho, sigma, cutoff);
}

/// The map phi(sigma, rho) with its factor L = sigma^{1/2} rho^{-1/2}
/// precomputed, so phi[X] = L X L^dagger.
class MeasureChange {
 public:
  MeasureChange(HermitianOperator sigma, HermitianOperator rho, double cutoff = kDefaultContinuityCutoff)
      : sigma_(std::move(sigma)),
        rho_(std::move(rho)),
        sigma_sqrt_(op_sqrt(sigma_)),
        rho_pinv_sqrt_(pinv_sqrt(rho_)),
        cutoff_(cutoff) {
    if (!is_abs_continuous(sigma_, rho_, cutoff_)) {
      throw DomainError("MeasureChange: sigma is not absolutely continuous with respect to rho");
    }
    left_ = sigma_sqrt_ * rho_pinv_sqrt_;
  }

  const HermitianOperator& sigma() const { return sigma_; }
  const HermitianOperator& rho() const { return rho_; }
  const HermitianOperator& sigma_sqrt() const { return sigma_sqrt_; }
  const HermitianOperator& rho_pinv_sqrt() const { return rho_pinv_sqrt_; }
  const Matrix& left_factor() const { return left_; }
  double cutoff() const { return cutoff_; }
  std::size_t dim() const { return sigma_.dim(); }

  HermitianOperator apply(const HermitianOperator& x) const {
    detail::require_same_dim(x.dim(), dim(), "MeasureChange::apply");
    return HermitianOperator::hermitian_part(left_ * (x * left_.adjoint()));
  }

  /// L^dagger X L, the map that moves an observable from sigma to rho:
  /// tr(sigma X) = tr(rho adjoint_apply(X)) whenever sigma << rho.
  HermitianOperator adjoint_apply(const HermitianOperator& x) const {
    detail::require_same_dim(x.dim(), dim(), "MeasureChange::adjoint_apply");
    return HermitianOperator::hermitian_part(left_.adjoint() * (x * left_));
  }

  friend MeasureChange rn_compose(const MeasureChange& outer, const MeasureChange& inner);

 private:
  MeasureChange(HermitianOperator sigma, HermitianOperator rho, HermitianOperator sigma_sqrt,
                HermitianOperator rho_pinv_sqrt, Matrix left, double cutoff)
      : sigma_(std::move(sigma)),
        rho_(std::move(rho)),
        sigma_sqrt_(std::move(sigma_sqrt)),
        rho_pinv_sqrt_(std::move(rho_pinv_sqrt)),
        left_(std::move(left)),
        cutoff_(cutoff) {}

  HermitianOperator sigma_;
  HermitianOperator rho_;
  HermitianOperator sigma_sqrt_;
  HermitianOperator rho_pinv_sqrt_;
  Matrix left_;
  double cutoff_;
};

inline HermitianOperator rn_apply(const MeasureChange& mc, const HermitianOperator& x) { return mc.apply(x); }

/// phi(a, b) o phi(b, c) materialised as one map from c to a. The inner
/// target must match the outer source (a << b << c).
inline MeasureChange rn_compose(const MeasureChange& outer, const MeasureChange& inner) {
  detail::require_same_dim(outer.dim(), inner.dim(), "rn_compose");
  const double mismatch = (outer.rho() - inner.sigma()).frobenius_norm();
  if (mismatch > 1e-9) {
    throw DomainError("rn_compose: inner target density differs from outer source density");
  }
  return MeasureChange(outer.sigma(), inner.rho(), outer.sigma_sqrt(), inner.rho_pinv_sqrt(),
                       outer.left_factor() * inner.left_factor(), std::max(outer.cutoff(), inner.cutoff()));
}

/// phi(sigma, rho)^{-1} = phi(rho, sigma); requires sigma ~ rho.
inline MeasureChange rn_inverse(const MeasureChange& mc) {
  if (!is_abs_continuous(mc.rho(), mc.sigma(), mc.cutoff())) {
    throw DomainError("rn_inverse: densities are not equivalent");
  }
  return MeasureChange(mc.rho(), mc.sigma(), mc.cutoff());
}

struct TraceTransfer {
  HermitianOperator y;
  double trace_sigma_x = 0.0;
  double trace_rho_y = 0.0;
};

/// Y = rho^{-1/2} sigma^{1/2} X sigma^{1/2} rho^{-1/2}, so that tr(sigma X) = tr(rho Y).
inline TraceTransfer trace_transfer(const HermitianOperator& sigma, const HermitianOperator& rho,
                                    const HermitianOperator& x) {
  detail::require_same_dim(sigma.dim(), x.dim(), "trace_transfer");
  const MeasureChange mc(sigma, rho);
  HermitianOperator y = mc.adjoint_apply(x);
  const double lhs = trace_inner(sigma, x);
  const double rhs = trace_inner(rho, y);
  return TraceTransfer{std::move(y), lhs, rhs};
}

}  // namespace qap
