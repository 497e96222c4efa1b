// qap: command-line front end for the quantum asset pricing library.
//
// exit codes: 0 verdict delivered, 1 usage, 2 invalid scenario,
//             3 numerical failure, 4 degenerate model

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qap/qap.hpp"
#include "qap/scenario.hpp"

namespace {

using qap::io::json;

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kNumerical = 3, kDegenerate = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<double> env_tolerance() {
  const char* raw = std::getenv("QAP_TOL");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
    throw UsageError(std::string("QAP_TOL must be a positive decimal literal, got '") + raw + "'");
  }
  return v;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw qap::NumericalFailure("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

struct Loaded {
  qap::io::Scenario scenario;
  std::string digest;
};

std::string read_input(const std::string& path) {
  try {
    return qap::io::read_file(path);
  } catch (const std::ios_base::failure& e) {
    throw UsageError(e.what());
  }
}

Loaded load(const std::string& path) {
  const std::string text = read_input(path);
  const json j = qap::io::parse_json_text(text, path);
  return Loaded{qap::io::scenario_from_json(j, env_tolerance()), "sha256:" + sha256_hex(text)};
}

qap::HermitianOperator load_operator(const std::string& path, std::optional<std::size_t> dim) {
  const json j = qap::io::parse_json_text(read_input(path), path);
  if (!dim) {
    const json* probe = &j;
    if (j.is_object() && j.contains("certificate") && j["certificate"].is_object() &&
        j["certificate"].contains("rho_star"))
      probe = &j["certificate"]["rho_star"];
    else if (j.is_object() && j.contains("rho_star"))
      probe = &j["rho_star"];
    dim = qap::io::operator_dim(*probe, path);
  }
  return qap::io::density_from_json(j, *dim, path);
}

void write_json(const std::optional<std::string>& out, json report) {
  if (!out) return;
  std::ofstream f(*out);
  if (!f) throw UsageError("cannot write '" + *out + "'");
  f << report.dump(2) << '\n';
}

json stamp(json report, const std::string& digest) {
  report["tool_version"] = qap::io::kToolVersion;
  report["input_digest"] = digest;
  return report;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void print_operator(const char* label, const qap::HermitianOperator& a) {
  std::cout << label << ":\n";
  for (std::size_t r = 0; r < a.dim(); ++r) {
    std::cout << "  ";
    for (std::size_t c = 0; c < a.dim(); ++c) {
      const auto z = a(r, c);
      std::cout << (c ? "  " : "") << fmt(z.real()) << (z.imag() < 0 ? "-" : "+") << fmt(std::abs(z.imag())) << "i";
    }
    std::cout << '\n';
  }
}

void print_report(const qap::ArbitrageReport& r) {
  std::cout << "verdict: " << qap::to_string(r.verdict) << "  (hhat=" << qap::to_string(r.semantics_used.hhat)
            << ", condition2=" << qap::to_string(r.semantics_used.condition2) << ")\n";
  if (const auto* a = r.arbitrage_certificate()) {
    std::cout << "arbitrage portfolio: xi0=" << fmt(a->portfolio.xi0) << " xi=[";
    for (std::size_t i = 0; i < a->portfolio.xi.size(); ++i) std::cout << (i ? ", " : "") << fmt(a->portfolio.xi[i]);
    std::cout << "]\n  value " << fmt(a->value) << ", payoff_min " << fmt(a->payoff_min) << ", witness payoff "
              << fmt(a->witness_payoff) << ", witness overlap " << fmt(a->witness_overlap) << '\n';
  } else if (const auto* n = r.risk_neutral_certificate()) {
    print_operator("risk-neutral rho*", n->rho_star);
    std::cout << "  min support eigenvalue " << fmt(n->min_support_eigen) << '\n';
  }
  if (r.divergence) std::cout << "note: no equivalent risk-neutral density operator exists (divergence)\n";
}

int verdict_exit(const qap::ArbitrageReport& r) { return r.verdict == qap::Verdict::degenerate ? kDegenerate : kOk; }

const qap::Derivative& require_derivative(const qap::io::Scenario& s) {
  if (!s.derivative) throw qap::io::ScenarioError("scenario has no 'derivative'");
  return *s.derivative;
}

// ---------------------------------------------------------------------------
// demos
// ---------------------------------------------------------------------------

struct DemoParams {
  std::optional<double> q, delta, eta;
};

qap::MarketModel two_level_market(double a, double b, double q, double price, double delta, double rate,
                                  qap::ArbitrageSemantics sem) {
  auto s = qap::pauli_compose({(a + b) / 2, q, 0, (a - b) / 2});
  auto rho = qap::pauli_compose({0.5, delta / 2, 0, 0});
  return qap::MarketModel(qap::PriceSystem(rate, {price}, {qap::make_asset("S", s)}), rho, sem);
}

bool expect(bool ok, const std::string& what) {
  std::cout << (ok ? "  ok: " : "  MISMATCH: ") << what << '\n';
  return ok;
}

bool demo_example1(const DemoParams& p) {
  const double q = p.q.value_or(0.5), d = p.delta.value_or(0.5);
  std::cout << "example1: S = diag(1,2) + " << fmt(q) << " sigma_x, pi = 1.5, r = 0, Delta = " << fmt(d) << '\n';
  bool ok = true;
  for (auto h : {qap::HhatMode::classical, qap::HhatMode::full}) {
    const auto r = qap::detect(two_level_market(1, 2, q, 1.5, d, 0, {h, qap::Condition2Mode::trace}));
    print_report(r);
    ok &= expect(r.verdict == qap::Verdict::arbitrage_free, std::string(qap::to_string(h)) + " mode is arbitrage-free");
  }
  return ok;
}

bool demo_example2(const DemoParams& p) {
  const double q = p.q.value_or(0.5), d = p.delta.value_or(0.5);
  std::cout << "example2: S = I + " << fmt(q) << " sigma_x, pi = 1, r = 0, Delta = " << fmt(d) << '\n';
  const auto m = two_level_market(1, 1, q, 1.0, d, 0, {});
  const double s = 1.0 / std::sqrt(2.0);
  const qap::CVector plus{s, s};
  const auto sp = qap::state_payoff(m, qap::Portfolio{-1.0, {1.0}}, plus);
  std::cout << "  state |+>, portfolio (-1, 1): payoff " << fmt(sp.payoff) << ", rho-overlap " << fmt(sp.rho_overlap)
            << '\n';
  bool ok = expect(std::abs(sp.payoff - q) < 1e-12 && sp.rho_overlap > 0, "positive payoff with positive overlap");
  const auto r = qap::detect(m);
  print_report(r);
  ok &= expect(r.verdict == qap::Verdict::arbitrage_free, "full mode is arbitrage-free");
  return ok;
}

bool demo_example3(const DemoParams& p) {
  const double q = p.q.value_or(0.9), d = p.delta.value_or(0.0);
  const double q0 = std::sqrt(0.5);
  std::cout << "example3: S = diag(1.5,2) + " << fmt(q) << " sigma_x, pi = 1, r = 0, threshold q0 = " << fmt(q0)
            << '\n';
  bool ok = true;
  const auto rc = qap::detect(two_level_market(1.5, 2, q, 1.0, d, 0, {qap::HhatMode::classical, {}}));
  print_report(rc);
  ok &= expect(rc.verdict == qap::Verdict::arbitrage, "classical mode has arbitrage");
  const auto rf = qap::detect(two_level_market(1.5, 2, q, 1.0, d, 0, {}));
  print_report(rf);
  if (std::abs(std::abs(q) - q0) > 1e-3) {
    const bool want = std::abs(q) < q0;
    ok &= expect((rf.verdict == qap::Verdict::arbitrage) == want,
                 want ? "full mode has arbitrage (|q| < q0)" : "full mode is arbitrage-free (|q| > q0)");
  } else {
    std::cout << "  (q within 1e-3 of the threshold; no expectation checked)\n";
  }
  return ok;
}

bool demo_closing(const DemoParams& p) {
  const double q = p.q.value_or(0.4), d = p.delta.value_or(0.3);
  const double pr = 0.5;  // (b - (1+r) pi) / (b - a)
  std::cout << "closing: example-1 market with q = " << fmt(q) << ", rho* = diag(p, 1-p) + " << fmt(d)
            << " sigma_x, p = 0.5\n";
  const auto m = two_level_market(1, 2, q, 1.5, 0.0, 0, {});
  const auto rho_star = qap::pauli_compose({0.5, d, 0, pr - 0.5});
  const auto chk = qap::verify_risk_neutral(m, rho_star);
  std::cout << "  residual E[S/(1+r)] - pi = " << fmt(chk.residuals[0]) << "  (2 q Delta / (1+r) = " << fmt(2 * q * d)
            << ")\n";
  bool ok = expect(std::abs(chk.residuals[0] - 2 * q * d) < 1e-10, "residual matches 2 q Delta / (1+r)");
  ok &= expect(chk.prices_match == (std::abs(2 * q * d) <= 1e-8), "risk-neutral exactly when q Delta = 0");
  return ok;
}

bool demo_pricing(const DemoParams& p) {
  const double a = 1, b = 2, r = 0, q = p.q.value_or(0.8), eta = p.eta.value_or(0.2);
  const double pi0 = 1.5, pr = (b - (1 + r) * pi0) / (b - a), price = pi0 + 2 * eta / (1 + r);
  std::cout << "pricing: S = 1.5 I - 0.5 sigma_z + " << fmt(q) << " sigma_x, pi = " << fmt(price)
            << ", V = 1.5 I - 0.5 sigma_z + " << fmt(q / 2) << " sigma_x\n";
  const auto m = two_level_market(a, b, q, price, 0.0, r, {});
  const auto rho_star = qap::pauli_compose({0.5, eta / q, 0, pr - 0.5});
  const auto v = qap::make_derivative("V", qap::pauli_compose({(a + b) / 2, q / 2, 0, (a - b) / 2}));
  const auto chk = qap::verify_risk_neutral(m, rho_star);
  print_operator("given rho*", rho_star);
  std::cout << "  price residual " << fmt(chk.residuals[0]) << ", fair price of V " << fmt(qap::fair_price(rho_star, v, r))
            << '\n';
  bool ok = expect(chk.risk_neutral(), "rho* is risk-neutral and equivalent to rho");
  ok &= expect(std::abs(qap::fair_price(rho_star, v, r) - (pi0 + eta / (1 + r))) < 1e-9, "fair price pi0 + eta/(1+r)");
  const auto found = qap::find_risk_neutral(m);
  print_operator("max-min-eigenvalue rho*", found.rho_star);
  const auto bounds = qap::price_bounds(m, v);
  std::cout << "  fair price of V under it " << fmt(qap::fair_price(found.rho_star, v, r)) << ", bounds ["
            << fmt(bounds.lower) << ", " << fmt(bounds.upper) << "]\n";
  ok &= expect(bounds.lower - 1e-8 <= pi0 + eta && pi0 + eta <= bounds.upper + 1e-8, "given price inside bounds");
  return ok;
}

bool demo_divergence(const DemoParams&) {
  std::cout << "divergence: rho = |0><0|, one asset with Y = [[1,1],[1,0]] (S = I + Y, pi = 1, r = 0)\n";
  const qap::HermitianOperator s{{2.0, 1.0}, {1.0, 1.0}};
  bool ok = true;
  for (auto h : {qap::HhatMode::full, qap::HhatMode::support}) {
    const qap::MarketModel m(qap::PriceSystem(0.0, {1.0}, {qap::make_asset("S", s)}),
                             qap::HermitianOperator::diagonal({1.0, 0.0}), {h, qap::Condition2Mode::trace});
    const auto r = qap::detect(m);
    print_report(r);
    const auto rt = qap::ftqap_round_trip(m);
    if (h == qap::HhatMode::full) {
      ok &= expect(r.verdict == qap::Verdict::arbitrage_free && r.divergence && rt.divergence,
                   "full mode: arbitrage-free, no rho*, divergence flagged");
    } else {
      ok &= expect(r.verdict == qap::Verdict::arbitrage && rt.exactly_one, "support mode: arbitrage");
    }
  }
  return ok;
}

const std::map<std::string, std::function<bool(const DemoParams&)>>& demos() {
  static const std::map<std::string, std::function<bool(const DemoParams&)>> table{
      {"example1", demo_example1}, {"example2", demo_example2},   {"example3", demo_example3},
      {"closing", demo_closing},   {"pricing", demo_pricing},     {"divergence", demo_divergence}};
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qap - single-period quantum asset pricing: arbitrage checks, risk-neutral densities, price bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qap::io::kToolVersion);

  std::string path, rnd, sigma_path, rho_path, apply_path, demo_name;
  std::optional<std::string> out;
  DemoParams dp;

  auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
  validate->add_option("scenario", path)->required()->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check-arbitrage", "decide arbitrage and print the certificate");
  check->add_option("scenario", path)->required()->check(CLI::ExistingFile);
  check->add_option("--out", out, "write the JSON report here");

  auto* find = app.add_subcommand("find-rnd", "compute the max-min-eigenvalue risk-neutral density operator");
  find->add_option("scenario", path)->required()->check(CLI::ExistingFile);
  find->add_option("--out", out, "write the JSON report here");

  auto* verify = app.add_subcommand("verify-rnd", "check a density operator for risk-neutrality");
  verify->add_option("scenario", path)->required()->check(CLI::ExistingFile);
  verify->add_option("--rnd", rnd, "operator file or find-rnd report")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", out, "write the JSON report here");

  auto* price = app.add_subcommand("price", "fair price of the scenario derivative under a given rho*");
  price->add_option("scenario", path)->required()->check(CLI::ExistingFile);
  price->add_option("--rnd", rnd, "operator file or find-rnd report")->required()->check(CLI::ExistingFile);
  price->add_option("--out", out, "write the JSON report here");

  auto* bounds = app.add_subcommand("bounds", "no-arbitrage price interval of the scenario derivative");
  bounds->add_option("scenario", path)->required()->check(CLI::ExistingFile);
  bounds->add_option("--out", out, "write the JSON report here");

  auto* mc = app.add_subcommand("measure-change", "apply the Radon-Nikodym map phi(sigma, rho) to an operator");
  mc->add_option("--sigma", sigma_path)->required()->check(CLI::ExistingFile);
  mc->add_option("--rho", rho_path)->required()->check(CLI::ExistingFile);
  mc->add_option("--apply", apply_path)->required()->check(CLI::ExistingFile);
  mc->add_option("--out", out, "write the JSON report here");

  auto* demo = app.add_subcommand("demo", "run a bundled worked example");
  std::vector<std::string> names;
  for (const auto& [k, v] : demos()) names.push_back(k);
  names.push_back("all");
  demo->add_option("name", demo_name)->required()->check(CLI::IsMember(names));
  demo->add_option("--q", dp.q, "asset coherence q");
  demo->add_option("--delta", dp.delta, "density coherence Delta");
  demo->add_option("--eta", dp.eta, "price premium eta (pricing demo)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) {
      const auto l = load(path);
      const auto& m = l.scenario.model;
      std::cout << "valid: dim " << m.dim() << ", " << m.num_risky() << " risky asset(s), hhat="
                << qap::to_string(m.semantics().hhat) << ", condition2=" << qap::to_string(m.semantics().condition2)
                << (l.scenario.derivative ? ", derivative present" : "") << '\n';
      return kOk;
    }
    if (*check) {
      const auto l = load(path);
      const auto r = qap::detect(l.scenario.model);
      print_report(r);
      write_json(out, stamp(qap::io::report_to_json(r), l.digest));
      return verdict_exit(r);
    }
    if (*find) {
      const auto l = load(path);
      json report{{"semantics_used", qap::io::semantics_to_json(l.scenario.model.semantics())}};
      try {
        const auto cert = qap::find_risk_neutral(l.scenario.model);
        print_operator("risk-neutral rho*", cert.rho_star);
        std::cout << "  min support eigenvalue " << fmt(cert.min_support_eigen) << '\n';
        report["verdict"] = "risk_neutral_found";
        report["certificate"] = qap::io::certificate_to_json(cert);
        report["residuals"] = cert.price_residuals;
      } catch (const qap::NoCertificate& e) {
        std::cout << "no risk-neutral density operator: " << e.what() << '\n';
        report["verdict"] = "no_risk_neutral_density";
        report["certificate"] = nullptr;
        report["residuals"] = json::array();
      }
      write_json(out, stamp(report, l.digest));
      return kOk;
    }
    if (*verify) {
      const auto l = load(path);
      const auto rho_star = load_operator(rnd, l.scenario.model.dim());
      const auto chk = qap::verify_risk_neutral(l.scenario.model, rho_star);
      std::cout << (chk.risk_neutral() ? "risk-neutral" : "not risk-neutral") << ": max |residual| "
                << fmt(chk.max_abs_residual) << ", equivalent to rho: " << (chk.equivalent ? "yes" : "no") << '\n';
      for (std::size_t i = 0; i < chk.residuals.size(); ++i)
        std::cout << "  " << l.scenario.model.price_system().asset(i).name << ": " << fmt(chk.residuals[i]) << '\n';
      write_json(out, stamp(qap::io::risk_neutral_check_to_json(chk), l.digest));
      return kOk;
    }
    if (*price) {
      const auto l = load(path);
      const auto& v = require_derivative(l.scenario);
      const auto rho_star = load_operator(rnd, l.scenario.model.dim());
      const auto chk = qap::verify_risk_neutral(l.scenario.model, rho_star);
      const double fp = qap::fair_price(rho_star, v, l.scenario.model.rate());
      std::cout << "fair price of " << v.name << ": " << fmt(fp) << '\n';
      if (!chk.risk_neutral()) std::cout << "warning: the supplied rho* is not risk-neutral for this market\n";
      write_json(out, stamp(json{{"derivative", v.name}, {"fair_price", fp}, {"rnd_check", qap::io::risk_neutral_check_to_json(chk)}},
                            l.digest));
      return kOk;
    }
    if (*bounds) {
      const auto l = load(path);
      const auto& v = require_derivative(l.scenario);
      const auto iv = qap::price_bounds(l.scenario.model, v);
      std::cout << "price interval of " << v.name << " over the closure of the risk-neutral set: [" << fmt(iv.lower)
                << ", " << fmt(iv.upper) << "]\n";
      json report{{"derivative", v.name}, {"lower", iv.lower}, {"upper", iv.upper}, {"closure_note", iv.closure_note}};
      int rc = kOk;
      if (l.scenario.quote) {
        const auto r = qap::price_consistency(l.scenario.model, v, *l.scenario.quote);
        std::cout << "quote " << fmt(*l.scenario.quote) << ": ";
        print_report(r);
        report["quote"] = *l.scenario.quote;
        report["quote_report"] = qap::io::report_to_json(r);
        rc = verdict_exit(r);
      }
      write_json(out, stamp(report, l.digest));
      return rc;
    }
    if (*mc) {
      const auto sigma = load_operator(sigma_path, std::nullopt);
      const auto rho = load_operator(rho_path, sigma.dim());
      const auto x = load_operator(apply_path, sigma.dim());
      const qap::MeasureChange map(sigma, rho);
      const auto y = map.apply(x);
      print_operator("phi(sigma, rho)[X]", y);
      const auto tt = qap::trace_transfer(sigma, rho, x);
      std::cout << "trace transfer: tr(sigma X) = " << fmt(tt.trace_sigma_x) << ", tr(rho Y) = " << fmt(tt.trace_rho_y)
                << '\n';
      const std::string digest =
          "sha256:" + sha256_hex(read_input(sigma_path) + read_input(rho_path) + read_input(apply_path));
      write_json(out, stamp(json{{"result", qap::io::operator_to_json(y)},
                                 {"equivalent", qap::is_equivalent(sigma, rho)},
                                 {"trace_transfer", {tt.trace_sigma_x, tt.trace_rho_y}}},
                            digest));
      return kOk;
    }
    if (*demo) {
      bool ok = true;
      for (const auto& [name, fn] : demos()) {
        if (demo_name != "all" && demo_name != name) continue;
        ok &= fn(dp);
      }
      return ok ? kOk : kNumerical;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const qap::io::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kInvalid;
  } catch (const qap::DegenerateModel& e) {
    std::cerr << "degenerate model: " << e.what() << '\n';
    return kDegenerate;
  } catch (const qap::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const qap::InfeasibleAffine& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const qap::NoCertificate& e) {
    // the scenario fails the command's precondition (e.g. bounds on an arbitrage market)
    std::cerr << "no certificate: " << e.what() << '\n';
    return kInvalid;
  } catch (const qap::Error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}
