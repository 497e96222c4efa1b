#pragma once

// JSON scenario and report serialization. Operators are {"matrix": rows}
// with every entry a [re, im] pair, or {"pauli": {"i","x","y","z"}} for
// dim 2. Doubles are written in shortest round-trip form.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qap/arbitrage.hpp"
#include "qap/errors.hpp"
#include "qap/market.hpp"
#include "qap/pricing.hpp"
#include "qap/tolerances.hpp"

namespace qap::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.1";

/// Malformed or model-invalid scenario content.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

struct Scenario {
  MarketModel model;
  std::optional<Derivative> derivative;
  std::optional<double> quote;
};

namespace detail {

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ScenarioError(where + ": expected a number");
  return j.get<double>();
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(where + ": missing '" + key + "'");
  return *it;
}

inline void only_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ScenarioError(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(where + ": complex entries are [re, im] pairs");
  return {detail::number(j[0], where), detail::number(j[1], where)};
}

inline json matrix_to_json(const HermitianOperator& a) {
  json rows = json::array();
  for (std::size_t r = 0; r < a.dim(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < a.dim(); ++c) row.push_back(complex_to_json(a(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json operator_to_json(const HermitianOperator& a) { return json{{"matrix", matrix_to_json(a)}}; }

inline json vector_to_json(const CVector& v) {
  json out = json::array();
  for (const auto& z : v) out.push_back(complex_to_json(z));
  return out;
}

inline HermitianOperator operator_from_json(const json& j, std::size_t dim, const std::string& where) {
  if (!j.is_object()) throw ScenarioError(where + ": operator must be an object");
  const bool has_m = j.contains("matrix"), has_p = j.contains("pauli");
  if (has_m == has_p) throw ScenarioError(where + ": give exactly one of 'matrix' or 'pauli'");
  try {
    if (has_p) {
      if (dim != 2) throw ScenarioError(where + ": pauli form requires dim 2");
      const json& p = j["pauli"];
      if (!p.is_object()) throw ScenarioError(where + ": pauli must be an object");
      detail::only_keys(p, {"i", "x", "y", "z"}, where + ".pauli");
      auto coef = [&](const char* k) { return p.contains(k) ? detail::number(p[k], where + ".pauli." + k) : 0.0; };
      return pauli_compose({coef("i"), coef("x"), coef("y"), coef("z")});
    }
    const json& rows = j["matrix"];
    if (!rows.is_array() || rows.size() != dim) throw ScenarioError(where + ": matrix must have dim rows");
    Matrix m(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
      if (!rows[r].is_array() || rows[r].size() != dim) throw ScenarioError(where + ": matrix must be square");
      for (std::size_t c = 0; c < dim; ++c) m(r, c) = complex_from_json(rows[r][c], where);
    }
    return HermitianOperator(m);
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

inline Tolerances tolerances_from_json(const json& j, Tolerances base = {}) {
  if (!j.is_object()) throw ScenarioError("tolerances: expected an object");
  detail::only_keys(j,
                    {"spectral_tol", "feas_tol", "membership_tol", "classical_support_cutoff", "rel_support_cutoff"},
                    "tolerances");
  auto set = [&](const char* k, double& dst) {
    if (!j.contains(k)) return;
    const double v = detail::number(j[k], std::string("tolerances.") + k);
    if (!(v > 0.0)) throw ScenarioError(std::string("tolerances.") + k + ": must be positive");
    dst = v;
  };
  set("spectral_tol", base.spectral_tol);
  set("feas_tol", base.feas_tol);
  set("membership_tol", base.membership_tol);
  set("classical_support_cutoff", base.classical_support_cutoff);
  set("rel_support_cutoff", base.rel_support_cutoff);
  return base;
}

inline json tolerances_to_json(const Tolerances& t) {
  return json{{"spectral_tol", t.spectral_tol},
              {"feas_tol", t.feas_tol},
              {"membership_tol", t.membership_tol},
              {"classical_support_cutoff", t.classical_support_cutoff},
              {"rel_support_cutoff", t.rel_support_cutoff}};
}

inline ArbitrageSemantics semantics_from_json(const json& j) {
  ArbitrageSemantics s;
  if (!j.is_object()) throw ScenarioError("semantics: expected an object");
  detail::only_keys(j, {"hhat", "condition2"}, "semantics");
  if (j.contains("hhat")) {
    const std::string h = j["hhat"].is_string() ? j["hhat"].get<std::string>() : "";
    if (h == "classical") s.hhat = HhatMode::classical;
    else if (h == "full") s.hhat = HhatMode::full;
    else if (h == "support") s.hhat = HhatMode::support;
    else throw ScenarioError("semantics.hhat: expected classical, full or support");
  }
  if (j.contains("condition2")) {
    const std::string c = j["condition2"].is_string() ? j["condition2"].get<std::string>() : "";
    if (c == "trace") s.condition2 = Condition2Mode::trace;
    else if (c == "state") s.condition2 = Condition2Mode::state;
    else throw ScenarioError("semantics.condition2: expected trace or state");
  }
  return s;
}

inline json semantics_to_json(const ArbitrageSemantics& s) {
  return json{{"hhat", to_string(s.hhat)}, {"condition2", to_string(s.condition2)}};
}

/// Builds and validates a scenario. tol_override replaces feas_tol after
/// the file's own tolerances are applied.
inline Scenario scenario_from_json(const json& j, std::optional<double> feas_tol_override = std::nullopt) {
  if (!j.is_object()) throw ScenarioError("scenario: top level must be an object");
  detail::only_keys(j, {"dim", "rate", "riskless_price", "assets", "rho", "semantics", "derivative", "quote",
                        "tolerances"},
                    "scenario");
  const json& jd = detail::field(j, "dim", "scenario");
  if (!jd.is_number_integer() || jd.get<long long>() < 1) throw ScenarioError("dim: expected a positive integer");
  const auto dim = jd.get<std::size_t>();
  const double rate = detail::number(detail::field(j, "rate", "scenario"), "rate");
  const double pi0 = j.contains("riskless_price") ? detail::number(j["riskless_price"], "riskless_price") : 1.0;
  Tolerances tol = j.contains("tolerances") ? tolerances_from_json(j["tolerances"]) : Tolerances{};
  if (feas_tol_override) tol.feas_tol = *feas_tol_override;
  const ArbitrageSemantics sem = j.contains("semantics") ? semantics_from_json(j["semantics"]) : ArbitrageSemantics{};

  const json& ja = detail::field(j, "assets", "scenario");
  if (!ja.is_array() || ja.empty()) throw ScenarioError("assets: expected a non-empty array");
  std::vector<QuantumAsset> assets;
  std::vector<double> prices;
  for (std::size_t i = 0; i < ja.size(); ++i) {
    const std::string where = "assets[" + std::to_string(i) + "]";
    const json& a = ja[i];
    if (!a.is_object()) throw ScenarioError(where + ": expected an object");
    detail::only_keys(a, {"name", "price", "matrix", "pauli"}, where);
    std::string name = a.contains("name") && a["name"].is_string() ? a["name"].get<std::string>() : "S" + std::to_string(i + 1);
    prices.push_back(detail::number(detail::field(a, "price", where), where + ".price"));
    json op = json::object();
    if (a.contains("matrix")) op["matrix"] = a["matrix"];
    if (a.contains("pauli")) op["pauli"] = a["pauli"];
    assets.push_back(QuantumAsset{std::move(name), operator_from_json(op, dim, where)});
  }
  const HermitianOperator rho = operator_from_json(detail::field(j, "rho", "scenario"), dim, "rho");

  std::optional<Derivative> deriv;
  if (j.contains("derivative")) {
    const json& d = j["derivative"];
    if (!d.is_object()) throw ScenarioError("derivative: expected an object");
    detail::only_keys(d, {"name", "matrix", "pauli"}, "derivative");
    json op = json::object();
    if (d.contains("matrix")) op["matrix"] = d["matrix"];
    if (d.contains("pauli")) op["pauli"] = d["pauli"];
    std::string name = d.contains("name") && d["name"].is_string() ? d["name"].get<std::string>() : "V";
    try {
      deriv = make_derivative(std::move(name), operator_from_json(op, dim, "derivative"), tol.spectral_tol);
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(std::string("derivative: ") + e.what());
    }
  }
  std::optional<double> quote;
  if (j.contains("quote")) quote = detail::number(j["quote"], "quote");

  try {
    return Scenario{MarketModel(PriceSystem(rate, std::move(prices), std::move(assets), pi0, tol.spectral_tol), rho,
                                sem, tol),
                    std::move(deriv), quote};
  } catch (const Error& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

inline json scenario_to_json(const Scenario& s) {
  const MarketModel& m = s.model;
  const auto& ps = m.price_system();
  json assets = json::array();
  for (std::size_t i = 0; i < ps.num_risky(); ++i) {
    assets.push_back(json{{"name", ps.asset(i).name}, {"price", ps.prices()[i]},
                          {"matrix", matrix_to_json(ps.asset(i).payoff)}});
  }
  json out{{"dim", m.dim()},
           {"rate", ps.rate()},
           {"riskless_price", ps.riskless_price()},
           {"assets", std::move(assets)},
           {"rho", operator_to_json(m.rho())},
           {"semantics", semantics_to_json(m.semantics())},
           {"tolerances", tolerances_to_json(m.tolerances())}};
  if (s.derivative) out["derivative"] = json{{"name", s.derivative->name}, {"matrix", matrix_to_json(s.derivative->payoff)}};
  if (s.quote) out["quote"] = *s.quote;
  return out;
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A density-operator file: either a bare operator object or a report
/// carrying certificate.rho_star.
inline HermitianOperator density_from_json(const json& j, std::size_t dim, const std::string& where) {
  if (j.is_object() && j.contains("certificate") && j["certificate"].is_object() &&
      j["certificate"].contains("rho_star")) {
    return operator_from_json(j["certificate"]["rho_star"], dim, where);
  }
  if (j.is_object() && j.contains("rho_star")) return operator_from_json(j["rho_star"], dim, where);
  return operator_from_json(j, dim, where);
}

inline std::size_t operator_dim(const json& j, const std::string& where) {
  if (j.is_object() && j.contains("matrix") && j["matrix"].is_array()) return j["matrix"].size();
  if (j.is_object() && j.contains("pauli")) return 2;
  throw ScenarioError(where + ": cannot infer operator dimension");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json portfolio_to_json(const Portfolio& p) { return json{{"xi0", p.xi0}, {"xi", p.xi}}; }

inline json certificate_to_json(const ArbitrageCertificate& c) {
  return json{{"kind", "arbitrage"},
              {"portfolio", portfolio_to_json(c.portfolio)},
              {"witness_state", vector_to_json(c.witness_state)},
              {"value", c.value},
              {"payoff_min", c.payoff_min},
              {"witness_payoff", c.witness_payoff},
              {"witness_overlap", c.witness_overlap}};
}

inline json certificate_to_json(const NoArbitrageCertificate& c) {
  return json{{"kind", "risk_neutral"},
              {"rho_star", operator_to_json(c.rho_star)},
              {"min_support_eigen", c.min_support_eigen},
              {"price_residuals", c.price_residuals}};
}

inline json diagnostics_to_json(const DetectDiagnostics& d) {
  json out{{"primal_affine_empty", d.primal_affine_empty},
           {"primal_iterations", d.primal_iterations},
           {"dual_affine_empty", d.dual_affine_empty},
           {"dual_iterations", d.dual_iterations},
           {"boundary", d.boundary},
           {"max_residual", d.max_residual},
           {"reduced_dim", d.reduced_dim}};
  out["primal_value"] = std::isfinite(d.primal_value) ? json(d.primal_value) : json(nullptr);
  out["dual_value"] = d.dual_value ? json(*d.dual_value) : json(nullptr);
  out["relaxed_gain"] = d.relaxed_gain ? json(*d.relaxed_gain) : json(nullptr);
  return out;
}

inline json report_to_json(const ArbitrageReport& r) {
  json out{{"verdict", to_string(r.verdict)},
           {"semantics_used", semantics_to_json(r.semantics_used)},
           {"divergence", r.divergence},
           {"diagnostics", diagnostics_to_json(r.diagnostics)}};
  if (const auto* a = r.arbitrage_certificate()) out["certificate"] = certificate_to_json(*a);
  else if (const auto* n = r.risk_neutral_certificate()) out["certificate"] = certificate_to_json(*n);
  else out["certificate"] = nullptr;
  json res = json::array();
  if (const auto* n = r.risk_neutral_certificate()) res = n->price_residuals;
  out["residuals"] = std::move(res);
  return out;
}

inline json risk_neutral_check_to_json(const RiskNeutralCheck& c) {
  return json{{"residuals", c.residuals},
              {"max_abs_residual", c.max_abs_residual},
              {"is_density", c.is_density},
              {"equivalent", c.equivalent},
              {"min_support_eigen", c.min_support_eigen},
              {"prices_match", c.prices_match},
              {"risk_neutral", c.risk_neutral()}};
}

}  // namespace qap::io
