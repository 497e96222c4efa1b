#pragma once

namespace qap {

/// Numeric thresholds shared by the market, arbitrage and pricing layers.
struct Tolerances {
  /// Eigen-decomposition accuracy, PSD checks on inputs, unit trace of rho.
  double spectral_tol = 1e-9;
  /// Residual bound for certificates and solver outcomes.
  double feas_tol = 1e-8;
  /// Value and payoff comparisons for portfolio set membership.
  double membership_tol = 1e-9;
  /// A basis state counts as possible when <w|rho|w> exceeds this.
  double classical_support_cutoff = 1e-12;
  /// Relative eigenvalue cutoff: lambda counts as zero below rel * max(1, lambda_max).
  double rel_support_cutoff = 1e-9;
};

}  // namespace qap
