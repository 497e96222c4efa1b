#include <gtest/gtest.h>

#include "qap/arbitrage.hpp"
#include "test_support.hpp"

using namespace qap;
using namespace qap::testing;

namespace {

const ArbitrageSemantics kClassical{HhatMode::classical, Condition2Mode::trace};
const ArbitrageSemantics kFull{HhatMode::full, Condition2Mode::trace};
const ArbitrageSemantics kFullState{HhatMode::full, Condition2Mode::state};
const ArbitrageSemantics kSupport{HhatMode::support, Condition2Mode::trace};

MarketModel divergence_fixture(ArbitrageSemantics sem) {
  // Y = S - I = [[1, 1], [1, 0]]
  return MarketModel(PriceSystem(0.0, {1.0}, {make_asset("S", HermitianOperator{{2.0, 1.0}, {1.0, 1.0}})}),
                     HermitianOperator::diagonal({1.0, 0.0}), sem);
}

// classical arbitrage by vertex enumeration: with rows y(w) in R^d (d <= 2),
// the cone {xi : y(w).xi >= 0} is generated by row-orthogonal directions
bool classical_oracle(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.front().size();
  std::vector<std::vector<double>> candidates;
  if (d == 1) {
    candidates = {{1.0}, {-1.0}};
  } else {
    for (const auto& r : rows) {
      candidates.push_back({-r[1], r[0]});
      candidates.push_back({r[1], -r[0]});
    }
  }
  for (const auto& xi : candidates) {
    bool nonneg = true, pos = false;
    for (const auto& r : rows) {
      double v = 0;
      for (std::size_t i = 0; i < d; ++i) v += r[i] * xi[i];
      nonneg = nonneg && v >= -1e-12;
      pos = pos || v > 1e-12;
    }
    if (nonneg && pos) return true;
  }
  return false;
}

}  // namespace

TEST(Detect, Example1IsArbitrageFreeInBothModes) {
  for (const auto& sem : {kClassical, kFull}) {
    const ArbitrageReport rep = detect(two_level(1, 2, 0.5, 1.5, 0.5, 0.0, sem));
    EXPECT_EQ(rep.verdict, Verdict::arbitrage_free);
    ASSERT_NE(rep.risk_neutral_certificate(), nullptr);
    EXPECT_TRUE(verify_risk_neutral(two_level(1, 2, 0.5, 1.5, 0.5, 0.0, sem), rep.risk_neutral_certificate()->rho_star)
                    .risk_neutral());
  }
}

TEST(Detect, Example3Thresholds) {
  const auto classical = detect(two_level(1.5, 2, 0.9, 1, 0, 0.0, kClassical));
  EXPECT_EQ(classical.verdict, Verdict::arbitrage);
  EXPECT_EQ(detect(two_level(1.5, 2, 0.9, 1, 0, 0.0, kFull)).verdict, Verdict::arbitrage_free);

  const MarketModel m = two_level(1.5, 2, 0.2, 1, 0, 0.0, kFull);
  const ArbitrageReport rep = detect(m);
  ASSERT_EQ(rep.verdict, Verdict::arbitrage);
  const ArbitrageCertificate* c = rep.arbitrage_certificate();
  ASSERT_NE(c, nullptr);
  EXPECT_NEAR(c->payoff_min, 0.75 - std::sqrt(0.1025), 1e-9);
  EXPECT_NEAR(c->portfolio.xi0 / c->portfolio.xi[0], -1.0, 1e-12);
  EXPECT_GT(c->portfolio.xi[0], 0.0);
  EXPECT_TRUE(verify_arbitrage_certificate(m, *c));
}

TEST(Detect, TraceAndStateReadingsDifferOnRankDeficientRho) {
  // Y = diag(0, 1): PSD, nonzero only on null(rho)
  const auto market = [](ArbitrageSemantics sem) {
    return MarketModel(PriceSystem(0.0, {1.0}, {make_asset("S", HermitianOperator::diagonal({1.0, 2.0}))}),
                       HermitianOperator::diagonal({1.0, 0.0}), sem);
  };
  const ArbitrageReport state = detect(market(kFullState));
  ASSERT_EQ(state.verdict, Verdict::arbitrage);
  EXPECT_TRUE(verify_arbitrage_certificate(market(kFullState), *state.arbitrage_certificate()));
  EXPECT_EQ(detect(market(kFull)).verdict, Verdict::arbitrage_free);
  EXPECT_EQ(detect(market(kSupport)).verdict, Verdict::arbitrage_free);
  EXPECT_EQ(detect(market(kClassical)).verdict, Verdict::arbitrage_free);
}

TEST(Detect, DivergenceFixture) {
  for (const auto& sem : {kFull, kFullState}) {
    const MarketModel m = divergence_fixture(sem);
    const ArbitrageReport rep = detect(m);
    EXPECT_EQ(rep.verdict, Verdict::arbitrage_free);
    EXPECT_TRUE(rep.divergence);
    EXPECT_EQ(rep.risk_neutral_certificate(), nullptr);
    EXPECT_THROW(find_risk_neutral(m), NoCertificate);
    const RoundTripReport rt = ftqap_round_trip(m);
    EXPECT_TRUE(rt.divergence);
    EXPECT_TRUE(rt.consistent);
    EXPECT_FALSE(rt.exactly_one);
  }
  const MarketModel sup = divergence_fixture(kSupport);
  const ArbitrageReport rep = detect(sup);
  ASSERT_EQ(rep.verdict, Verdict::arbitrage);
  EXPECT_TRUE(verify_arbitrage_certificate(sup, *rep.arbitrage_certificate()));
  EXPECT_TRUE(ftqap_round_trip(sup).exactly_one);
}

TEST(Detect, BoundaryWithoutVerifiableCertificateIsDegenerate) {
  // the only gain sits on a state whose rho weight is below feas_tol, and the
  // only pricing density drops that state
  const MarketModel m(PriceSystem(0.0, {1.0}, {make_asset("S", HermitianOperator::diagonal({1.0, 2.0}))}),
                      HermitianOperator::diagonal({1 - 5e-9, 5e-9}), kFull);
  const ArbitrageReport rep = detect(m);
  EXPECT_EQ(rep.verdict, Verdict::degenerate);
  EXPECT_EQ(rep.arbitrage_certificate(), nullptr);
  EXPECT_EQ(rep.risk_neutral_certificate(), nullptr);
}

TEST(FindRiskNeutral, Examples) {
  const auto q0 = find_risk_neutral(two_level(1, 2, 0, 1.5, 0));
  EXPECT_LE((q0.rho_star - HermitianOperator::identity(2) * 0.5).frobenius_norm(), 1e-6);

  const MarketModel m = two_level(1, 2, 0.4, 1.5, 0);
  const auto q4 = find_risk_neutral(m);
  EXPECT_LE(std::abs(trace_inner(q4.rho_star, discounted_net_gains(m)[0])), 1e-8);
  EXPECT_GT(q4.min_support_eigen, 1e-8);

  const MarketModel clone(PriceSystem(0.0, {1.0}, {make_asset("c", HermitianOperator::identity(3))}),
                          HermitianOperator::diagonal({0.2, 0.3, 0.5}));
  EXPECT_LE((find_risk_neutral(clone).rho_star - HermitianOperator::identity(3) * (1.0 / 3)).frobenius_norm(), 1e-6);

  EXPECT_THROW(find_risk_neutral(two_level(1.5, 2, 0.2, 1, 0)), NoCertificate);
}

TEST(VerifyRiskNeutral, ClosingExample) {
  const MarketModel m = two_level(1, 2, 0.4, 1.5, 0);
  const auto bad = verify_risk_neutral(m, pauli_compose({0.5, 0.3, 0, 0}));
  EXPECT_NEAR(bad.residuals.at(0), 0.24, 1e-12);
  EXPECT_FALSE(bad.risk_neutral());
  const auto good = verify_risk_neutral(m, HermitianOperator::identity(2) * 0.5);
  EXPECT_NEAR(good.residuals.at(0), 0.0, 1e-15);
  EXPECT_TRUE(good.risk_neutral());

  const MarketModel priced(PriceSystem(0.0, {1.9}, {make_asset("S", pauli_compose({1.5, 0.8, 0, -0.5}))}),
                           HermitianOperator::identity(2) * 0.5);
  EXPECT_NEAR(verify_risk_neutral(priced, pauli_compose({0.5, 0.25, 0, 0})).residuals.at(0), 0.0, 1e-15);
  EXPECT_THROW(verify_risk_neutral(m, HermitianOperator::identity(3) * (1.0 / 3)), DimensionError);
}

TEST(WitnessState, Examples) {
  const auto a = witness_state(HermitianOperator::diagonal({0.7, 0.3}), HermitianOperator::diagonal({1.0, -1.0}));
  ASSERT_TRUE(a.has_value());
  EXPECT_NEAR(std::norm((*a)[0]), 1.0, 1e-12);

  const auto b = witness_state(HermitianOperator::identity(2) * 0.5, pauli::X());
  ASSERT_TRUE(b.has_value());
  EXPECT_NEAR(pauli::X().quadratic_form(*b), 1.0, 1e-12);
  EXPECT_NEAR((HermitianOperator::identity(2) * 0.5).quadratic_form(*b), 0.5, 1e-12);

  EXPECT_FALSE(witness_state(HermitianOperator::identity(2) * 0.5, -HermitianOperator::identity(2)).has_value());
}

TEST(WitnessState, ExistsWheneverTraceIsPositive) {
  Rng rng(51);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 2 + t % 4;
    const HermitianOperator rho = random_density(rng, k, 1 + t % k);
    HermitianOperator x = random_hermitian(rng, k);
    if (trace_inner(rho, x) <= 1e-6) x = -x;
    if (trace_inner(rho, x) <= 1e-6) continue;
    const auto w = witness_state(rho, x);
    ASSERT_TRUE(w.has_value());
    EXPECT_GT(x.quadratic_form(*w), 1e-8);
    EXPECT_GT(rho.quadratic_form(*w), 1e-8);
  }
}

TEST(Detect, ClassicalModeAgreesWithVertexOracle) {
  Rng rng(52);
  int arb = 0, free = 0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 2 + t % 4, d = 1 + t % 2;
    std::vector<double> p(k);
    double total = 0;
    for (auto& v : p) total += (v = uniform(rng, 0.05, 1));
    for (auto& v : p) v /= total;
    const double rate = uniform(rng, 0, 0.1);
    std::vector<QuantumAsset> assets;
    std::vector<double> prices;
    std::vector<std::vector<double>> rows(k, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> s(k);
      for (auto& v : s) v = uniform(rng, 0, 3);
      prices.push_back(uniform(rng, 0.2, 2.5));
      for (std::size_t w = 0; w < k; ++w) rows[w][i] = s[w] / (1 + rate) - prices.back();
      assets.push_back(classical_embedding(s, "S" + std::to_string(i)));
    }
    const MarketModel m(PriceSystem(rate, prices, assets), HermitianOperator::diagonal(p), kClassical);
    const bool expect = classical_oracle(rows);
    const ArbitrageReport rep = detect(m);
    ASSERT_NE(rep.verdict, Verdict::degenerate);
    EXPECT_EQ(rep.verdict == Verdict::arbitrage, expect) << "t=" << t;
    (expect ? arb : free)++;
  }
  EXPECT_GT(arb, 30);
  EXPECT_GT(free, 30);
}

TEST(Detect, ScaleInvariance) {
  Rng rng(53);
  for (int t = 0; t < 60; ++t) {
    const std::size_t k = 2 + t % 3, d = 1 + t % 2;
    const MarketModel m = random_market(rng, k, d, random_full_rank_density(rng, k));
    const auto& ps = m.price_system();
    std::vector<double> prices;
    std::vector<QuantumAsset> assets;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = uniform(rng, 0.1, 10);
      prices.push_back(ps.prices()[i] * c);
      assets.push_back(make_asset(ps.asset(i).name, ps.asset(i).payoff * c));
    }
    const MarketModel scaled(PriceSystem(ps.rate(), prices, assets), m.rho());
    EXPECT_EQ(detect(m).verdict, detect(scaled).verdict);
  }
}

TEST(Detect, ExclusivityAndSoundnessOnRandomModels) {
  Rng rng(54);
  for (int t = 0; t < 150; ++t) {
    const std::size_t k = 2 + t % 3, d = 1 + t % 3;
    const bool deficient = t % 3 == 0;
    const ArbitrageSemantics sem = deficient ? kSupport : (t % 2 ? kFull : kFullState);
    const HermitianOperator rho = deficient ? random_density(rng, k, 1 + t % (k - 1)) : random_full_rank_density(rng, k);
    const MarketModel m = random_market(rng, k, d, rho, sem, 0.5);
    const RoundTripReport rt = ftqap_round_trip(m);
    EXPECT_TRUE(rt.exactly_one) << "t=" << t << " " << rt.note;
    const ArbitrageReport rep = detect(m);
    if (const auto* c = rep.arbitrage_certificate()) {
      EXPECT_TRUE(verify_arbitrage_certificate(m, *c));
      // independent check: payoff PSD, some strictly positive state
      const HermitianOperator payoff = payoff_operator(m, c->portfolio);
      EXPECT_LE(portfolio_value(m, c->portfolio), 1e-8);
      if (sem.hhat != HhatMode::support) {
        EXPECT_GE(oracle_min_eig(payoff), -1e-8);
      }
      EXPECT_GT(state_payoff(m, c->portfolio, c->witness_state).payoff, 1e-8);
    } else if (const auto* r = rep.risk_neutral_certificate()) {
      const auto chk = verify_risk_neutral(m, r->rho_star);
      EXPECT_LE(chk.max_abs_residual, 1e-8);
      EXPECT_TRUE(chk.equivalent);
      EXPECT_TRUE(is_equivalent(r->rho_star, m.rho()));
    }
  }
}

TEST(Detect, NonnegativeGainsAreZeroGainsWithoutArbitrage) {
  Rng rng(55);
  int checked = 0;
  for (int t = 0; t < 80; ++t) {
    const std::size_t k = 2 + t % 3;
    MarketModel base = random_market(rng, k, 1, random_full_rank_density(rng, k), kFull, 0.1);
    // a redundant second asset: twice the first, at twice the price
    const auto& a = base.price_system().asset(0);
    const MarketModel m = base.with_asset(make_asset("twice", a.payoff * 2.0), 2.0 * base.price_system().prices()[0]);
    if (detect(m).verdict != Verdict::arbitrage_free) continue;
    const auto y = discounted_net_gains(m);
    for (int s = 0; s < 200; ++s) {
      std::vector<double> xi{uniform(rng, -1, 1), uniform(rng, -1, 1)};
      if (s == 0) xi = {2.0, -1.0};
      const HermitianOperator g = y[0] * xi[0] + y[1] * xi[1];
      if (oracle_min_eig(g) >= -1e-12) {
        ++checked;
        EXPECT_LE(g.frobenius_norm(), 1e-8);
      }
    }
  }
  EXPECT_GT(checked, 0);
}
