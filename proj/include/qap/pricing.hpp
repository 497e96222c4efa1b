#pragma once

// Derivatives: fair prices under a risk-neutral density, spectral functions
// of an asset, no-arbitrage price intervals over the (closed) risk-neutral
// set, and consistency of a quoted price with the market.

#include <functional>
#include <future>
#include <string>
#include <utility>

#include "qap/arbitrage.hpp"
#include "qap/cone_solver.hpp"
#include "qap/errors.hpp"
#include "qap/hermitian.hpp"
#include "qap/market.hpp"

namespace qap {

/// A PSD payoff without a price.
struct Derivative {
  std::string name;
  HermitianOperator payoff;
};

inline Derivative make_derivative(std::string name, HermitianOperator payoff, double spectral_tol = 1e-9) {
  detail::require_psd_asset(payoff, spectral_tol, "derivative '" + name + "'");
  return Derivative{std::move(name), std::move(payoff)};
}

struct PriceInterval {
  double lower = 0.0;
  double upper = 0.0;
  /// Bounds are extrema over the closure of the risk-neutral set; whether
  /// an equivalent density attains them is not decided.
  bool closure_note = true;
  int iterations = 0;
};

/// tr(rho* V) / (1 + r)
inline double fair_price(const HermitianOperator& rho_star, const Derivative& v, double rate) {
  detail::require_same_dim(rho_star.dim(), v.payoff.dim(), "fair_price");
  if (rate <= -1.0) throw DomainError("fair_price: rate must exceed -1");
  return trace_inner(rho_star, v.payoff) / (1.0 + rate);
}

/// V = U v(Lambda) U^dagger for S = U Lambda U^dagger. Eigenvalues of S
/// are clipped at zero before v is applied.
inline Derivative function_of_asset(const QuantumAsset& s, const std::function<double(double)>& v,
                                    std::string name = "derivative") {
  const Spectrum sp = eigh(s.payoff);
  for (double lam : sp.eigenvalues) {
    const double out = v(std::max(lam, 0.0));
    if (!std::isfinite(out) || out < 0.0) {
      throw DomainError("function_of_asset: map is negative or non-finite at eigenvalue " + std::to_string(lam));
    }
  }
  return Derivative{std::move(name), sp.map([&](double lam) { return v(std::max(lam, 0.0)); })};
}

/// Extrema of tr(X V)/(1+r) over {X >= 0 on supp(rho), tr X = 1,
/// tr(X Y_i) = 0}. Diagonal X on possible states in classical mode.
inline PriceInterval price_bounds(const MarketModel& m, const Derivative& v) {
  detail::require_same_dim(v.payoff.dim(), m.dim(), "price_bounds");
  const ArbitrageReport rep = detect(m);
  if (rep.verdict == Verdict::arbitrage) throw NoCertificate("price_bounds: the market admits arbitrage");
  if (rep.verdict == Verdict::degenerate) throw DegenerateModel("price_bounds: arbitrage verdict is degenerate");
  if (rep.risk_neutral_certificate() == nullptr) {
    throw NoCertificate("price_bounds: no risk-neutral density operator equivalent to rho exists");
  }

  AffineSpectralProblem problem = detail::dual_problem(m, discounted_net_gains(m));
  const double disc = 1.0 / (1.0 + m.rate());
  if (m.semantics().hhat == HhatMode::classical) {
    problem.objective = detail::diagonal_restriction(v.payoff, detail::possible_states(m)) * disc;
  } else {
    problem.objective = v.payoff * disc;
  }
  const SolverConfig cfg = solver_config(m.tolerances());
  auto lo = std::async(std::launch::async, [&] { return linear_extremum(problem, cfg, Extremum::min); });
  auto hi = std::async(std::launch::async, [&] { return linear_extremum(problem, cfg, Extremum::max); });
  const SolverOutcome a = lo.get();
  const SolverOutcome b = hi.get();
  if (a.status == SolverStatus::boundary || b.status == SolverStatus::boundary) {
    throw DegenerateModel("price_bounds: risk-neutral set has no interior");
  }
  return PriceInterval{a.value, b.value, true, a.iterations + b.iterations};
}

/// detect on the market extended by (quote, V).
inline ArbitrageReport price_consistency(const MarketModel& m, const Derivative& v, double quote) {
  if (!(quote > 0.0)) throw DomainError("price_consistency: quote must be positive");
  return detect(m.with_asset(QuantumAsset{v.name, v.payoff}, quote));
}

}  // namespace qap
