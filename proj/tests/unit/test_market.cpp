#include <gtest/gtest.h>

#include "qap/market.hpp"
#include "test_support.hpp"

using namespace qap;
using namespace qap::testing;

TEST(Market, ExpectedValue) {
  EXPECT_NEAR(expected_value(pauli_compose({0.5, 0.25, 0, 0}), pauli_compose({1, 0.4, 0, 0})), 1.2, 1e-15);
  EXPECT_NEAR(expected_value(HermitianOperator::diagonal({0.3, 0.7}), classical_embedding({2.0, 4.0}).payoff), 3.4,
              1e-15);
  Rng rng(2);
  EXPECT_NEAR(expected_value(random_density(rng, 4, 2), HermitianOperator::identity(4)), 1.0, 1e-14);
}

TEST(Market, ClassicalEmbedding) {
  EXPECT_EQ(classical_embedding({1.05, 1.05}).payoff, HermitianOperator::identity(2) * 1.05);
  EXPECT_EQ(classical_embedding({1.0, 2.0}).payoff, HermitianOperator::diagonal({1.0, 2.0}));
  EXPECT_EQ(classical_embedding({0.0, 0.0, 0.0}).payoff, HermitianOperator::zero(3));
  EXPECT_THROW(classical_embedding({1.0, -0.5}), DomainError);
}

TEST(Market, ValidatesConstruction) {
  const auto s = make_asset("S", HermitianOperator::diagonal({1.0, 2.0}));
  const auto rho = HermitianOperator::identity(2) * 0.5;
  EXPECT_THROW(PriceSystem(-1.0, {1.0}, {s}), DomainError);
  EXPECT_THROW(PriceSystem(0.0, {0.0}, {s}), DomainError);
  EXPECT_THROW(PriceSystem(0.0, {1.0, 1.0}, {s}), DimensionError);
  EXPECT_THROW(PriceSystem(0.0, {}, {}), DimensionError);
  EXPECT_THROW(make_asset("bad", pauli::X()), DomainError);
  EXPECT_THROW(MarketModel(PriceSystem(0.0, {1.0}, {s}), HermitianOperator::identity(2)), DomainError);
  EXPECT_THROW(MarketModel(PriceSystem(0.0, {1.0}, {s}), HermitianOperator::diagonal({1.5, -0.5})), DomainError);
  EXPECT_THROW(MarketModel(PriceSystem(0.0, {1.0}, {s}), HermitianOperator::identity(3) * (1.0 / 3)), DimensionError);
  EXPECT_NO_THROW(MarketModel(PriceSystem(0.0, {1.0}, {s}), rho));
}

TEST(Market, PayoffOperator) {
  const auto m = two_level(1.5, 2, 0.2, 1.0, 0.0);
  EXPECT_EQ(payoff_operator(m, {1.0, {0.0}}), HermitianOperator::identity(2));
  EXPECT_LE((payoff_operator(m, {-1.0, {1.0}}) - pauli_compose({0.75, 0.2, 0, -0.25})).frobenius_norm(), 1e-15);
  EXPECT_EQ(payoff_operator(m, {0.0, {0.0}}), HermitianOperator::zero(2));
  EXPECT_THROW(payoff_operator(m, {0.0, {1.0, 1.0}}), DimensionError);
}

TEST(Market, StatePayoff) {
  const double s = 1 / std::sqrt(2.0);
  const auto m2 = two_level(1, 1, 0.5, 1.0, 0.3);
  const auto plus = state_payoff(m2, {-1.0, {1.0}}, CVector{s, s});
  EXPECT_NEAR(plus.payoff, 0.5, 1e-15);
  EXPECT_NEAR(plus.rho_overlap, 0.5 * (1 + 0.3), 1e-15);
  EXPECT_NEAR(state_payoff(m2, {-1.0, {1.0}}, CVector{s, -s}).payoff, -0.5, 1e-15);
  const auto m1 = two_level(1, 2, 0.0, 1.5, 0.0);
  EXPECT_NEAR(state_payoff(m1, {0.0, {1.0}}, CVector{1.0, 0.0}).payoff, 1.0, 1e-15);
  EXPECT_THROW(state_payoff(m1, {0.0, {1.0}}, CVector{1.0, 1.0}), DomainError);
}

TEST(Market, DiscountedNetGains) {
  EXPECT_EQ(discounted_net_gains(two_level(1, 2, 0, 1.5, 0))[0], HermitianOperator::diagonal({-0.5, 0.5}));
  const MarketModel clone(PriceSystem(0.05, {2.0}, {make_asset("c", HermitianOperator::identity(3) * 2.1)}),
                          HermitianOperator::identity(3) * (1.0 / 3));
  EXPECT_LE(discounted_net_gains(clone)[0].frobenius_norm(), 1e-15);
  EXPECT_LE((discounted_net_gains(two_level(1.5, 2, 0.2, 1, 0))[0] - pauli_compose({0.75, 0.2, 0, -0.25})).frobenius_norm(),
            1e-15);
}

TEST(Market, RiskyToFull) {
  const auto m = two_level(1, 2, 0, 1.5, 0);
  EXPECT_DOUBLE_EQ(risky_to_full(m, std::vector<double>{1.0}).xi0, -1.5);
  EXPECT_DOUBLE_EQ(risky_to_full(m, std::vector<double>{0.0}).xi0, 0.0);
  const MarketModel m2(PriceSystem(0.0, {1.0, 3.0},
                                   {make_asset("a", HermitianOperator::identity(2)), make_asset("b", HermitianOperator::identity(2))},
                                   2.0),
                       HermitianOperator::identity(2) * 0.5);
  const Portfolio p = risky_to_full(m2, std::vector<double>{2.0, -1.0});
  EXPECT_DOUBLE_EQ(p.xi0, 0.5);
  EXPECT_DOUBLE_EQ(portfolio_value(m2, p), 0.0);
}

TEST(Market, ClassifyExamples) {
  const auto c3 = classify_portfolio(two_level(1.5, 2, 0.2, 1, 0), {-1.0, {1.0}});
  EXPECT_TRUE(c3.in_B && c3.in_C1 && c3.in_C2 && c3.in_Q1 && c3.in_Q2 && c3.in_CA && c3.in_QA);

  EXPECT_FALSE(classify_portfolio(two_level(1, 2, 0, 1.5, 0), {1.0, {0.0}}).in_B);

  const auto c1 = classify_portfolio(two_level(1, 2, 0, 1.5, 0), {-1.5, {1.0}});
  EXPECT_TRUE(c1.in_B && c1.in_C2 && c1.in_Q2);
  EXPECT_FALSE(c1.in_C1 || c1.in_Q1);
}

TEST(Market, ClassificationInclusionsOnRandomPortfolios) {
  Rng rng(21);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + t % 3, d = 1 + t % 3;
    const auto rho = t % 4 == 0 ? random_density(rng, k, 1) : random_full_rank_density(rng, k);
    const auto m = random_market(rng, k, d, rho);
    std::vector<double> xi(d);
    for (auto& x : xi) x = uniform(rng, -1, 1);
    Portfolio p = risky_to_full(m, xi);
    p.xi0 -= uniform(rng, 0.0, 0.2) * (t % 2);
    const auto c = classify_portfolio(m, p);
    EXPECT_TRUE(!c.in_Q1 || c.in_C1);
    EXPECT_TRUE(!c.in_C2 || c.in_Q2);
    EXPECT_EQ(c.in_CA, c.in_C1 && c.in_C2);
    EXPECT_EQ(c.in_QA, c.in_Q1 && c.in_Q2);
  }
}

TEST(Market, LemmaEquivalence) {
  // both risky-only conditions hold iff the zero-cost completion lands in QA
  Rng rng(22);
  int hits = 0;
  for (int t = 0; t < 600; ++t) {
    const std::size_t k = 2 + t % 3, d = 1 + t % 2;
    const auto m = random_market(rng, k, d, random_full_rank_density(rng, k), {}, 0.6);
    std::vector<double> xi(d);
    for (auto& x : xi) x = uniform(rng, -1, 1);
    const auto lc = lemma_conditions(m, xi, Condition2Mode::state);
    const auto c = classify_portfolio(m, risky_to_full(m, xi));
    EXPECT_EQ(lc.both(), c.in_QA);
    hits += lc.both();
  }
  EXPECT_GT(hits, 0);
}

TEST(Market, ExpectedValueLinearity) {
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + t % 3, d = 1 + t % 3;
    const auto m = random_market(rng, k, d, random_full_rank_density(rng, k));
    Portfolio p{uniform(rng, -1, 1), std::vector<double>(d)};
    for (auto& x : p.xi) x = uniform(rng, -1, 1);
    const auto& ps = m.price_system();
    double expect = p.xi0 * (1 + ps.rate()) * ps.riskless_price();
    for (std::size_t i = 0; i < d; ++i) expect += p.xi[i] * expected_value(m.rho(), ps.asset(i).payoff);
    EXPECT_NEAR(expected_value(m.rho(), payoff_operator(m, p)), expect, 1e-12);
    const auto a = random_hermitian(rng, k), b = random_hermitian(rng, k);
    const double alpha = uniform(rng, -2, 2);
    EXPECT_NEAR(expected_value(m.rho(), a + b * alpha),
                expected_value(m.rho(), a) + alpha * expected_value(m.rho(), b), 1e-12);
  }
}

TEST(Market, ClassicalExpectationMatchesDotProduct) {
  Rng rng(24);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + t % 6;
    std::vector<double> p(k), x(k);
    double total = 0;
    for (auto& v : p) total += (v = uniform(rng, 0, 1));
    for (auto& v : p) v /= total;
    for (auto& v : x) v = uniform(rng, 0, 5);
    double dot = 0;
    for (std::size_t i = 0; i < k; ++i) dot += p[i] * x[i];
    EXPECT_NEAR(expected_value(HermitianOperator::diagonal(p), classical_embedding(x).payoff), dot, 1e-13);
  }
}
