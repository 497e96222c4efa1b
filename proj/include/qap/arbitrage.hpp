#pragma once

// Arbitrage detection in three state-set modes, the two certificate kinds
// (an arbitrage portfolio with a witness state, or a risk-neutral density
// operator equivalent to rho), their independent re-verification, and the
// round-trip consistency report.
//
// detect works on the discounted net gains Y_i. The arbitrage side
// maximises lambda_min over {xi . Y~ : tr = 1}, where Y~ is the mode
// reduction (diagonal on possible states, Y itself, or Y compressed to
// supp(rho)). A positive optimum is an arbitrage; a negative one rules it
// out and the risk-neutral side maximises the smallest support eigenvalue
// over {X on supp(rho) : tr X = 1, tr(X Y_i) = 0}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qap/cone_solver.hpp"
#include "qap/errors.hpp"
#include "qap/hermitian.hpp"
#include "qap/market.hpp"
#include "qap/measure_change.hpp"

namespace qap {

enum class Verdict { arbitrage, arbitrage_free, degenerate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::arbitrage: return "arbitrage";
    case Verdict::arbitrage_free: return "arbitrage_free";
    case Verdict::degenerate: return "degenerate";
  }
  return "?";
}

struct ArbitrageCertificate {
  Portfolio portfolio;     // today's value <= feas_tol
  CVector witness_state;   // unit vector in the active state set
  double value = 0.0;      // today's value of the portfolio
  double payoff_min = 0.0; // smallest payoff over the active state set
  double witness_payoff = 0.0;
  double witness_overlap = 0.0;
};

struct NoArbitrageCertificate {
  HermitianOperator rho_star = HermitianOperator::zero(1);
  double min_support_eigen = 0.0;
  std::vector<double> price_residuals;  // tr(rho* S_i)/(1+r) - pi_i
};

struct DetectDiagnostics {
  /// max lambda_min over normalised net-gain combinations (-inf if none exist)
  double primal_value = -std::numeric_limits<double>::infinity();
  bool primal_affine_empty = false;
  int primal_iterations = 0;
  /// max smallest support eigenvalue over risk-neutral candidates
  std::optional<double> dual_value;
  bool dual_affine_empty = false;
  int dual_iterations = 0;
  /// primal optimum within feas_tol of zero; resolved by a certificate search
  bool boundary = false;
  /// trace reading at the boundary: max tr(rho X) over the relaxed primal set
  std::optional<double> relaxed_gain;
  double max_residual = 0.0;
  std::size_t reduced_dim = 0;
};

struct ArbitrageReport {
  Verdict verdict = Verdict::degenerate;
  std::variant<std::monostate, ArbitrageCertificate, NoArbitrageCertificate> certificate;
  ArbitrageSemantics semantics_used;
  DetectDiagnostics diagnostics;
  /// arbitrage-free, yet no risk-neutral density operator equivalent to rho exists
  bool divergence = false;

  const ArbitrageCertificate* arbitrage_certificate() const { return std::get_if<ArbitrageCertificate>(&certificate); }
  const NoArbitrageCertificate* risk_neutral_certificate() const {
    return std::get_if<NoArbitrageCertificate>(&certificate);
  }
};

struct RiskNeutralCheck {
  std::vector<double> residuals;
  double max_abs_residual = 0.0;
  bool is_density = false;
  /// equivalence with rho (classical mode: with the diagonal of rho)
  bool equivalent = false;
  /// smallest eigenvalue of rho* compressed onto the reference support
  double min_support_eigen = 0.0;
  bool prices_match = false;
  bool risk_neutral() const { return prices_match && is_density && equivalent; }
};

struct RoundTripReport {
  Verdict verdict = Verdict::degenerate;
  bool arbitrage_certificate = false;
  bool risk_neutral_found = false;
  bool exactly_one = false;
  bool divergence = false;   // documented rank-deficient regime under full mode
  bool consistent = false;   // exactly one, or a documented divergence
  std::string note;
};

inline SolverConfig solver_config(const Tolerances& t) {
  SolverConfig c;
  c.feas_tol = t.feas_tol;
  return c;
}

/// Witness for "positive payoff with positive rho-overlap". When
/// tr(rho X) > tol an eigenvector of rho does it; otherwise eigenvectors of
/// X and small tilts of them towards supp(rho) are tried.
inline std::optional<CVector> witness_state(const HermitianOperator& rho, const HermitianOperator& x,
                                            double tol = 1e-8) {
  detail::require_same_dim(rho.dim(), x.dim(), "witness_state");
  const Spectrum rs = eigh(rho);
  auto good = [&](const CVector& psi) { return x.quadratic_form(psi) > tol && rho.quadratic_form(psi) > tol; };

  if (trace_inner(rho, x) > tol) {
    std::optional<CVector> best;
    double best_term = 0.0;
    for (std::size_t k = 0; k < rs.dim(); ++k) {
      if (rs.eigenvalues[k] <= tol) continue;
      CVector u = rs.vector(k);
      const double term = rs.eigenvalues[k] * x.quadratic_form(u);
      if (term > best_term && good(u)) {
        best_term = term;
        best = std::move(u);
      }
    }
    if (best) return best;
  }

  const Spectrum xs = eigh(x);
  for (std::size_t k = xs.dim(); k-- > 0;) {
    if (xs.eigenvalues[k] <= tol) break;
    CVector v = xs.vector(k);
    if (good(v)) return v;
  }
  for (std::size_t k = xs.dim(); k-- > 0;) {
    if (xs.eigenvalues[k] <= tol) break;
    const CVector v = xs.vector(k);
    for (std::size_t j = rs.dim(); j-- > 0;) {
      if (rs.eigenvalues[j] <= tol) break;
      const CVector u = rs.vector(j);
      for (double eps : {1e-1, 1e-2, 1e-3}) {
        for (double sign : {1.0, -1.0}) {
          CVector psi(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) psi[i] = v[i] + sign * eps * u[i];
          const double nrm = norm(psi);
          for (auto& z : psi) z /= nrm;
          if (good(psi)) return psi;
        }
      }
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::size_t> possible_states(const MarketModel& m) {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < m.dim(); ++w)
    if (m.rho().diag(w) > m.tolerances().classical_support_cutoff) out.push_back(w);
  return out;
}

inline HermitianOperator diagonal_restriction(const HermitianOperator& a, const std::vector<std::size_t>& states) {
  std::vector<double> d;
  d.reserve(states.size());
  for (std::size_t w : states) d.push_back(a.diag(w));
  return HermitianOperator::diagonal(d);
}

inline HermitianOperator diagonal_embedding(const HermitianOperator& reduced, const std::vector<std::size_t>& states,
                                            std::size_t dim) {
  std::vector<double> d(dim, 0.0);
  for (std::size_t j = 0; j < states.size(); ++j) d[states[j]] = reduced.diag(j);
  return HermitianOperator::diagonal(d);
}

inline SupportProjector rho_support(const MarketModel& m) {
  const Spectrum s = eigh(m.rho());
  return support_from_spectrum(s, m.tolerances().rel_support_cutoff * std::max(1.0, s.max()));
}

/// Density the risk-neutral side must be equivalent to.
inline HermitianOperator reference_density(const MarketModel& m) {
  if (m.semantics().hhat != HhatMode::classical) return m.rho();
  std::vector<double> d(m.dim());
  for (std::size_t w = 0; w < m.dim(); ++w) d[w] = m.rho().diag(w);
  return HermitianOperator::diagonal(d);
}

inline AffineSpectralProblem primal_problem(const MarketModel& m, const std::vector<HermitianOperator>& y) {
  AffineSpectralProblem p;
  if (m.semantics().hhat == HhatMode::classical) {
    const auto states = possible_states(m);
    p.dim = states.size();
    for (const auto& yi : y) p.basis.push_back(diagonal_restriction(yi, states));
  } else {
    p.dim = m.dim();
    p.basis = y;
    if (m.semantics().hhat == HhatMode::support) p.support = rho_support(m);
  }
  p.constraints.push_back({HermitianOperator::identity(p.dim), 1.0});
  return p;
}

inline AffineSpectralProblem dual_problem(const MarketModel& m, const std::vector<HermitianOperator>& y) {
  AffineSpectralProblem p;
  if (m.semantics().hhat == HhatMode::classical) {
    const auto states = possible_states(m);
    p.dim = states.size();
    p.basis = diagonal_basis(p.dim);
    p.constraints.push_back({HermitianOperator::identity(p.dim), 1.0});
    for (const auto& yi : y) p.constraints.push_back({diagonal_restriction(yi, states), 0.0});
  } else {
    p.dim = m.dim();
    SupportProjector supp = rho_support(m);
    for (const auto& e : full_hermitian_basis(supp.rank))
      p.basis.push_back(HermitianOperator::hermitian_part(supp.basis * (e * supp.basis.adjoint())));
    p.support = std::move(supp);
    p.constraints.push_back({HermitianOperator::identity(p.dim), 1.0});
    for (const auto& yi : y) p.constraints.push_back({yi, 0.0});
  }
  return p;
}

struct DualAttempt {
  std::optional<SolverOutcome> outcome;  // point lifted to K x K
  bool affine_empty = false;
};

inline DualAttempt solve_dual(const MarketModel& m, const std::vector<HermitianOperator>& y, const SolverConfig& cfg) {
  DualAttempt a;
  try {
    SolverOutcome o = max_min_eigen(dual_problem(m, y), cfg);
    if (m.semantics().hhat == HhatMode::classical)
      o.point = diagonal_embedding(*o.point, possible_states(m), m.dim());
    a.outcome = std::move(o);
  } catch (const InfeasibleAffine&) {
    a.affine_empty = true;
  }
  return a;
}

/// Smallest payoff over the active state set.
inline double mode_payoff_min(const MarketModel& m, const HermitianOperator& payoff) {
  switch (m.semantics().hhat) {
    case HhatMode::classical: {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t w : possible_states(m)) lo = std::min(lo, payoff.diag(w));
      return lo;
    }
    case HhatMode::full: return eigh(payoff).min();
    case HhatMode::support: return eigh(payoff.compress(rho_support(m).basis)).min();
  }
  return 0.0;
}

inline std::optional<CVector> mode_witness(const MarketModel& m, const HermitianOperator& payoff, double tol) {
  switch (m.semantics().hhat) {
    case HhatMode::classical: {
      std::optional<std::size_t> best;
      for (std::size_t w : possible_states(m))
        if (payoff.diag(w) > tol && (!best || payoff.diag(w) > payoff.diag(*best))) best = w;
      if (!best) return std::nullopt;
      CVector e(m.dim());
      e[*best] = 1.0;
      return e;
    }
    case HhatMode::full: return witness_state(m.rho(), payoff, tol);
    case HhatMode::support: {
      const SupportProjector supp = rho_support(m);
      const auto w = witness_state(m.rho().compress(supp.basis), payoff.compress(supp.basis), tol);
      if (!w) return std::nullopt;
      return supp.basis * std::span<const Complex>(*w);
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Re-checks an arbitrage certificate with market-model predicates only.
inline bool verify_arbitrage_certificate(const MarketModel& m, const ArbitrageCertificate& c) {
  const double tol = m.tolerances().feas_tol;
  if (c.portfolio.xi.size() != m.num_risky() || c.witness_state.size() != m.dim()) return false;
  if (portfolio_value(m, c.portfolio) > tol) return false;
  const HermitianOperator payoff = payoff_operator(m, c.portfolio);
  if (detail::mode_payoff_min(m, payoff) < -tol) return false;
  if (std::abs(norm(c.witness_state) - 1.0) > 1e-9) return false;
  const StatePayoff sp = state_payoff(m, c.portfolio, c.witness_state);
  if (sp.payoff <= tol || sp.rho_overlap <= tol) return false;
  switch (m.semantics().hhat) {
    case HhatMode::classical: {
      const auto states = detail::possible_states(m);
      std::size_t nonzero = 0;
      for (std::size_t w = 0; w < m.dim(); ++w) {
        if (std::abs(c.witness_state[w]) <= 1e-12) continue;
        ++nonzero;
        if (std::find(states.begin(), states.end(), w) == states.end()) return false;
      }
      if (nonzero != 1) return false;
      break;
    }
    case HhatMode::support: {
      const HermitianOperator null = detail::rho_support(m).null_projector();
      if (null.quadratic_form(c.witness_state) > 1e-9) return false;
      break;
    }
    case HhatMode::full:
      if (m.semantics().condition2 == Condition2Mode::trace && expected_value(m.rho(), payoff) <= tol) return false;
      break;
  }
  return true;
}

/// Residuals of tr(rho* S_i)/(1+r) = pi_i and equivalence with rho.
inline RiskNeutralCheck verify_risk_neutral(const MarketModel& m, const HermitianOperator& rho_star) {
  detail::require_same_dim(rho_star.dim(), m.dim(), "verify_risk_neutral");
  const Tolerances& tol = m.tolerances();
  const auto& ps = m.price_system();
  RiskNeutralCheck out;
  for (std::size_t i = 0; i < ps.num_risky(); ++i) {
    const double r = expected_value(rho_star, ps.asset(i).payoff) / (1.0 + ps.rate()) - ps.prices()[i];
    out.residuals.push_back(r);
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(r));
  }
  out.prices_match = out.max_abs_residual <= tol.feas_tol;
  const Spectrum s = eigh(rho_star);
  out.is_density = s.min() >= -tol.spectral_tol && std::abs(rho_star.trace() - 1.0) <= tol.spectral_tol;
  if (out.is_density) {
    const HermitianOperator ref = detail::reference_density(m);
    const Spectrum rs = eigh(ref);
    const SupportProjector supp =
        detail::support_from_spectrum(rs, tol.rel_support_cutoff * std::max(1.0, rs.max()));
    out.min_support_eigen = eigh(rho_star.compress(supp.basis)).min();
    out.equivalent = out.min_support_eigen > tol.feas_tol && is_abs_continuous(rho_star, ref);
  }
  return out;
}

namespace detail {

inline std::optional<ArbitrageCertificate> build_arbitrage_certificate(const MarketModel& m,
                                                                       const std::vector<double>& coords) {
  double scale = 0.0;
  for (double c : coords) scale = std::max(scale, std::abs(c));
  if (!(scale > 0.0)) return std::nullopt;
  std::vector<double> xi(coords.size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = coords[i] / scale;

  ArbitrageCertificate c;
  c.portfolio = risky_to_full(m, xi);
  c.value = portfolio_value(m, c.portfolio);
  const HermitianOperator payoff = payoff_operator(m, c.portfolio);
  c.payoff_min = mode_payoff_min(m, payoff);
  const auto w = mode_witness(m, payoff, m.tolerances().feas_tol);
  if (!w) return std::nullopt;
  c.witness_state = *w;
  const StatePayoff sp = state_payoff(m, c.portfolio, c.witness_state);
  c.witness_payoff = sp.payoff;
  c.witness_overlap = sp.rho_overlap;
  if (!verify_arbitrage_certificate(m, c)) return std::nullopt;
  return c;
}

inline std::optional<NoArbitrageCertificate> build_risk_neutral_certificate(const MarketModel& m,
                                                                            const SolverOutcome& o) {
  const RiskNeutralCheck chk = verify_risk_neutral(m, *o.point);
  if (!chk.risk_neutral()) return std::nullopt;
  return NoArbitrageCertificate{*o.point, chk.min_support_eigen, chk.residuals};
}

}  // namespace detail

inline ArbitrageReport detect(const MarketModel& m) {
  const auto y = discounted_net_gains(m);
  const SolverConfig cfg = solver_config(m.tolerances());
  const double tol = cfg.feas_tol;
  const ArbitrageSemantics sem = m.semantics();

  ArbitrageReport rep;
  rep.semantics_used = sem;
  DetectDiagnostics& d = rep.diagnostics;

  const AffineSpectralProblem primal = detail::primal_problem(m, y);
  d.reduced_dim = primal.support ? primal.support->rank : primal.dim;
  std::optional<SolverOutcome> po;
  try {
    po = max_min_eigen(primal, cfg);
    d.primal_value = po->value;
    d.primal_iterations = po->iterations;
  } catch (const InfeasibleAffine&) {
    d.primal_affine_empty = true;
  }

  auto accept_arbitrage = [&](const ArbitrageCertificate& c) {
    rep.verdict = Verdict::arbitrage;
    d.max_residual = std::max(0.0, c.value);
    rep.certificate = c;
    return rep;
  };

  // A positive normalised value whose portfolio cannot be verified means the
  // gains are below tolerance in absolute terms; leave it to the dual.
  bool primal_unverified = false;
  if (po && po->value > tol) {
    if (auto cert = detail::build_arbitrage_certificate(m, po->coordinates)) return accept_arbitrage(*cert);
    primal_unverified = true;
    d.boundary = true;
  }

  // Only the full/trace reading can reject a PSD combination, namely one
  // living in null(rho); there the boundary question is max tr(rho X).
  bool trace_refuted = false;
  if (po && !primal_unverified && po->value >= -tol) {
    d.boundary = true;
    if (sem.hhat == HhatMode::full && sem.condition2 == Condition2Mode::trace) {
      AffineSpectralProblem relaxed = primal;
      relaxed.objective = m.rho();
      relaxed.psd_floor = std::min(po->value, 0.0) - tol;
      SolverConfig rc = cfg;
      rc.feas_tol = 0.01 * tol;
      const SolverOutcome r = linear_extremum(relaxed, rc, Extremum::max);
      d.relaxed_gain = r.value;
      if (r.value > tol) {
        if (auto cert = detail::build_arbitrage_certificate(m, r.coordinates)) return accept_arbitrage(*cert);
      } else {
        trace_refuted = true;
      }
    } else if (auto cert = detail::build_arbitrage_certificate(m, po->coordinates)) {
      return accept_arbitrage(*cert);
    }
  }

  const detail::DualAttempt da = detail::solve_dual(m, y, cfg);
  d.dual_affine_empty = da.affine_empty;
  if (da.outcome) {
    d.dual_value = da.outcome->value;
    d.dual_iterations = da.outcome->iterations;
  }
  const bool primal_decided_free = !po || po->value < -tol || trace_refuted;

  if (da.outcome && da.outcome->value > tol) {
    if (auto cert = detail::build_risk_neutral_certificate(m, *da.outcome)) {
      rep.verdict = Verdict::arbitrage_free;
      for (double r : cert->price_residuals) d.max_residual = std::max(d.max_residual, std::abs(r));
      rep.certificate = std::move(*cert);
      return rep;
    }
    throw NumericalFailure("detect: risk-neutral certificate failed re-verification");
  }
  const bool dual_refuted = !da.outcome || da.outcome->value < -tol;
  if (primal_decided_free && dual_refuted) {
    rep.verdict = Verdict::arbitrage_free;
    rep.divergence = true;
    return rep;
  }
  rep.verdict = Verdict::degenerate;
  return rep;
}

/// The max-min-eigenvalue risk-neutral density operator on supp(rho).
inline NoArbitrageCertificate find_risk_neutral(const MarketModel& m) {
  const SolverConfig cfg = solver_config(m.tolerances());
  const detail::DualAttempt da = detail::solve_dual(m, discounted_net_gains(m), cfg);
  if (!da.outcome) throw NoCertificate("find_risk_neutral: no density operator on supp(rho) prices every asset");
  const double t = da.outcome->value;
  if (std::abs(t) <= cfg.feas_tol) {
    throw DegenerateModel("find_risk_neutral: best risk-neutral candidate sits on the boundary of the cone");
  }
  if (t < 0.0) throw NoCertificate("find_risk_neutral: no risk-neutral density operator is equivalent to rho");
  auto cert = detail::build_risk_neutral_certificate(m, *da.outcome);
  if (!cert) throw NumericalFailure("find_risk_neutral: certificate failed re-verification");
  return std::move(*cert);
}

/// Runs detect and, separately, find_risk_neutral, and checks that exactly
/// one certificate kind comes out. Under full mode with rank-deficient rho
/// the arbitrage-free-without-rho* regime is reported as a divergence.
inline RoundTripReport ftqap_round_trip(const MarketModel& m) {
  RoundTripReport out;
  try {
    const ArbitrageReport rep = detect(m);
    out.verdict = rep.verdict;
    out.arbitrage_certificate = rep.arbitrage_certificate() != nullptr;
  } catch (const Error& e) {
    out.note = std::string("detect failed: ") + e.what();
    return out;
  }
  try {
    (void)find_risk_neutral(m);
    out.risk_neutral_found = true;
  } catch (const NoCertificate&) {
  } catch (const Error& e) {
    out.note = std::string("find_risk_neutral failed: ") + e.what();
  }
  out.exactly_one = out.arbitrage_certificate != out.risk_neutral_found;
  const bool rank_deficient = detail::rho_support(m).rank < m.dim();
  out.divergence = !out.exactly_one && out.verdict == Verdict::arbitrage_free && !out.risk_neutral_found &&
                   m.semantics().hhat == HhatMode::full && rank_deficient;
  out.consistent = out.exactly_one || out.divergence;
  if (out.divergence) out.note = "arbitrage-free under the full state set, but no equivalent risk-neutral density";
  return out;
}

}  // namespace qap
