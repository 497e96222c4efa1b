#pragma once

// Single-period market of quantum assets: price system, market density
// operator, portfolios, payoffs, and the classical / quantum portfolio sets
// (B, C1, C2, Q1, Q2, CA, QA).

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qap/errors.hpp"
#include "qap/hermitian.hpp"
#include "qap/tolerances.hpp"

namespace qap {

enum class HhatMode { classical, full, support };
enum class Condition2Mode { trace, state };

/// Which states the arbitrage conditions quantify over (classical basis,
/// the whole sphere, or the sphere compressed to supp(rho)), and whether
/// the strict-gain condition means "some state gains" or "tr(rho X) > 0".
/// Classical mode ignores condition2.
struct ArbitrageSemantics {
  HhatMode hhat = HhatMode::full;
  Condition2Mode condition2 = Condition2Mode::trace;

  friend bool operator==(const ArbitrageSemantics&, const ArbitrageSemantics&) = default;
};

inline const char* to_string(HhatMode m) {
  switch (m) {
    case HhatMode::classical: return "classical";
    case HhatMode::full: return "full";
    case HhatMode::support: return "support";
  }
  return "?";
}

inline const char* to_string(Condition2Mode m) { return m == Condition2Mode::trace ? "trace" : "state"; }

struct QuantumAsset {
  std::string name;
  HermitianOperator payoff;
};

namespace detail {

inline void require_psd_asset(const HermitianOperator& s, double tol, const std::string& what) {
  const Spectrum sp = eigh(s);
  if (sp.min() < -tol * std::max(1.0, sp.max())) {
    throw DomainError(what + ": payoff is not positive semidefinite (min eigenvalue " + std::to_string(sp.min()) + ")");
  }
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite value");
}

}  // namespace detail

inline QuantumAsset make_asset(std::string name, HermitianOperator payoff, double spectral_tol = 1e-9) {
  detail::require_psd_asset(payoff, spectral_tol, "asset '" + name + "'");
  return QuantumAsset{std::move(name), std::move(payoff)};
}

/// Diagonal embedding of a classical payoff vector.
inline QuantumAsset classical_embedding(std::span<const double> payoffs, std::string name = "classical") {
  for (double p : payoffs) {
    detail::require_finite(p, "classical_embedding");
    if (p < 0.0) throw DomainError("classical_embedding: payoffs must be non-negative");
  }
  return QuantumAsset{std::move(name), HermitianOperator::diagonal(payoffs)};
}

inline QuantumAsset classical_embedding(std::initializer_list<double> payoffs, std::string name = "classical") {
  return classical_embedding(std::span<const double>(payoffs.begin(), payoffs.size()), std::move(name));
}

/// Today's prices and tomorrow's payoffs. The riskless asset is implicit:
/// price riskless_price, payoff (1 + rate) * riskless_price * I.
class PriceSystem {
 public:
  PriceSystem(double rate, std::vector<double> prices, std::vector<QuantumAsset> assets, double riskless_price = 1.0,
              double spectral_tol = 1e-9)
      : rate_(rate), riskless_price_(riskless_price), prices_(std::move(prices)), assets_(std::move(assets)) {
    detail::require_finite(rate_, "PriceSystem rate");
    detail::require_finite(riskless_price_, "PriceSystem riskless price");
    if (rate_ <= -1.0) throw DomainError("PriceSystem: rate must exceed -1");
    if (riskless_price_ <= 0.0) throw DomainError("PriceSystem: riskless price must be positive");
    if (prices_.size() != assets_.size()) throw DimensionError("PriceSystem: one price per risky asset required");
    if (assets_.empty()) throw DimensionError("PriceSystem: at least one risky asset required");
    dim_ = assets_.front().payoff.dim();
    for (std::size_t i = 0; i < assets_.size(); ++i) {
      detail::require_finite(prices_[i], "PriceSystem price");
      if (prices_[i] <= 0.0) throw DomainError("PriceSystem: price of '" + assets_[i].name + "' must be positive");
      detail::require_same_dim(assets_[i].payoff.dim(), dim_, "PriceSystem asset");
      detail::require_psd_asset(assets_[i].payoff, spectral_tol, "asset '" + assets_[i].name + "'");
    }
  }

  double rate() const { return rate_; }
  double riskless_price() const { return riskless_price_; }
  std::size_t num_risky() const { return assets_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& prices() const { return prices_; }
  const std::vector<QuantumAsset>& assets() const { return assets_; }
  const QuantumAsset& asset(std::size_t i) const { return assets_.at(i); }

  HermitianOperator riskless_payoff() const {
    return HermitianOperator::identity(dim_) * ((1.0 + rate_) * riskless_price_);
  }

 private:
  double rate_;
  double riskless_price_;
  std::vector<double> prices_;
  std::vector<QuantumAsset> assets_;
  std::size_t dim_ = 0;
};

class MarketModel {
 public:
  MarketModel(PriceSystem prices, HermitianOperator rho, ArbitrageSemantics semantics = {}, Tolerances tol = {})
      : prices_(std::move(prices)), rho_(std::move(rho)), semantics_(semantics), tol_(tol) {
    detail::require_same_dim(rho_.dim(), prices_.dim(), "MarketModel rho");
    const Spectrum s = eigh(rho_);
    if (s.min() < -tol_.spectral_tol) throw DomainError("MarketModel: rho is not positive semidefinite");
    if (std::abs(rho_.trace() - 1.0) > tol_.spectral_tol) throw DomainError("MarketModel: rho must have unit trace");
  }

  const PriceSystem& price_system() const { return prices_; }
  const HermitianOperator& rho() const { return rho_; }
  const ArbitrageSemantics& semantics() const { return semantics_; }
  const Tolerances& tolerances() const { return tol_; }
  std::size_t dim() const { return prices_.dim(); }
  std::size_t num_risky() const { return prices_.num_risky(); }
  double rate() const { return prices_.rate(); }

  MarketModel with_semantics(ArbitrageSemantics s) const {
    MarketModel m = *this;
    m.semantics_ = s;
    return m;
  }

  /// The same market with one more priced asset appended.
  MarketModel with_asset(QuantumAsset asset, double price) const {
    auto assets = prices_.assets();
    auto prices = prices_.prices();
    assets.push_back(std::move(asset));
    prices.push_back(price);
    return MarketModel(PriceSystem(prices_.rate(), std::move(prices), std::move(assets), prices_.riskless_price(),
                                   tol_.spectral_tol),
                       rho_, semantics_, tol_);
  }

 private:
  PriceSystem prices_;
  HermitianOperator rho_;
  ArbitrageSemantics semantics_;
  Tolerances tol_;
};

/// Holdings (xi0 in the riskless asset, xi in the risky ones); negative
/// entries are loans or short positions.
struct Portfolio {
  double xi0 = 0.0;
  std::vector<double> xi;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// E^rho[A] = tr(rho A).
inline double expected_value(const HermitianOperator& rho, const HermitianOperator& a) { return trace_inner(rho, a); }

/// sum_i c_i A_i for operators of a common dimension.
inline HermitianOperator linear_combination(std::span<const double> coefs, std::span<const HermitianOperator> ops) {
  if (coefs.size() != ops.size()) throw DimensionError("linear_combination: coefficient count mismatch");
  if (ops.empty()) throw DimensionError("linear_combination: empty operator list");
  HermitianOperator out = HermitianOperator::zero(ops.front().dim());
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (coefs[i] != 0.0) out += ops[i] * coefs[i];
  return out;
}

/// Today's value xi_bar . pi_bar.
inline double portfolio_value(const MarketModel& m, const Portfolio& p) {
  detail::require_same_dim(p.xi.size(), m.num_risky(), "portfolio_value");
  double v = p.xi0 * m.price_system().riskless_price();
  for (std::size_t i = 0; i < p.xi.size(); ++i) v += p.xi[i] * m.price_system().prices()[i];
  return v;
}

/// xi0 (1+r) pi0 I + sum_i xi_i S_i
inline HermitianOperator payoff_operator(const MarketModel& m, const Portfolio& p) {
  detail::require_same_dim(p.xi.size(), m.num_risky(), "payoff_operator");
  const auto& ps = m.price_system();
  HermitianOperator out = ps.riskless_payoff() * p.xi0;
  for (std::size_t i = 0; i < p.xi.size(); ++i)
    if (p.xi[i] != 0.0) out += ps.asset(i).payoff * p.xi[i];
  return out;
}

struct StatePayoff {
  double payoff = 0.0;       // <psi| xi_bar . S_bar |psi>
  double rho_overlap = 0.0;  // <psi| rho |psi>
};

inline StatePayoff state_payoff(const MarketModel& m, const Portfolio& p, std::span<const Complex> psi) {
  detail::require_same_dim(psi.size(), m.dim(), "state_payoff");
  if (std::abs(norm(psi) - 1.0) > 1e-9) throw DomainError("state_payoff: state must be normalised");
  return StatePayoff{payoff_operator(m, p).quadratic_form(psi), m.rho().quadratic_form(psi)};
}

/// Y_i = S_i / (1 + r) - pi_i I
inline std::vector<HermitianOperator> discounted_net_gains(const MarketModel& m) {
  const auto& ps = m.price_system();
  std::vector<HermitianOperator> out;
  out.reserve(ps.num_risky());
  for (std::size_t i = 0; i < ps.num_risky(); ++i) {
    out.push_back(ps.asset(i).payoff * (1.0 / (1.0 + ps.rate())) -
                  HermitianOperator::identity(ps.dim()) * ps.prices()[i]);
  }
  return out;
}

/// Completes risky holdings with the riskless position that makes today's value zero.
inline Portfolio risky_to_full(const MarketModel& m, std::span<const double> xi) {
  detail::require_same_dim(xi.size(), m.num_risky(), "risky_to_full");
  double value = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) value += xi[i] * m.price_system().prices()[i];
  return Portfolio{-value / m.price_system().riskless_price(), std::vector<double>(xi.begin(), xi.end())};
}

struct PortfolioClassification {
  bool in_B = false;
  bool in_C1 = false;
  bool in_C2 = false;
  bool in_Q1 = false;
  bool in_Q2 = false;
  bool in_CA = false;
  bool in_QA = false;
  /// Q2 under the trace reading: in_B and tr(rho xi_bar . S_bar) > tol.
  bool in_Q2_trace = false;
};

/// Set memberships with Q-sets taken over the whole state sphere. Q1 is
/// global PSD-ness of the payoff (states with positive rho-overlap are dense),
/// Q2 is lambda_max(payoff) > tol.
inline PortfolioClassification classify_portfolio(const MarketModel& m, const Portfolio& p) {
  const Tolerances& tol = m.tolerances();
  const HermitianOperator x = payoff_operator(m, p);
  PortfolioClassification c;
  c.in_B = portfolio_value(m, p) <= tol.membership_tol;

  bool all_nonneg = true, some_pos = false;
  for (std::size_t w = 0; w < m.dim(); ++w) {
    if (m.rho().diag(w) <= tol.classical_support_cutoff) continue;
    all_nonneg = all_nonneg && x.diag(w) >= -tol.membership_tol;
    some_pos = some_pos || x.diag(w) > tol.membership_tol;
  }
  const Spectrum s = eigh(x);
  c.in_C1 = c.in_B && all_nonneg;
  c.in_C2 = c.in_B && some_pos;
  c.in_Q1 = c.in_B && s.min() >= -tol.membership_tol;
  c.in_Q2 = c.in_B && s.max() > tol.membership_tol;
  c.in_Q2_trace = c.in_B && expected_value(m.rho(), x) > tol.membership_tol;
  c.in_CA = c.in_C1 && c.in_C2;
  c.in_QA = c.in_Q1 && c.in_Q2;
  return c;
}

/// The two risky-only arbitrage conditions over the whole sphere:
/// xi . S >= (1+r) xi . pi on every state, strictly on some state (state
/// reading) or in rho-expectation (trace reading).
struct LemmaConditions {
  bool nonnegative = false;
  bool strict_gain = false;
  bool both() const { return nonnegative && strict_gain; }
};

inline LemmaConditions lemma_conditions(const MarketModel& m, std::span<const double> xi, Condition2Mode mode) {
  detail::require_same_dim(xi.size(), m.num_risky(), "lemma_conditions");
  const auto& ps = m.price_system();
  double value = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) value += xi[i] * ps.prices()[i];
  HermitianOperator excess = HermitianOperator::identity(m.dim()) * (-(1.0 + ps.rate()) * value);
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi[i] != 0.0) excess += ps.asset(i).payoff * xi[i];
  const Spectrum s = eigh(excess);
  const double tol = m.tolerances().membership_tol;
  LemmaConditions out;
  out.nonnegative = s.min() >= -tol;
  out.strict_gain = mode == Condition2Mode::state ? s.max() > tol : expected_value(m.rho(), excess) > tol;
  return out;
}

}  // namespace qap
