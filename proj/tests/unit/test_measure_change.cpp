#include <gtest/gtest.h>

#include "qap/measure_change.hpp"
#include "test_support.hpp"

using namespace qap;
using namespace qap::testing;

namespace {

const HermitianOperator kHalf = HermitianOperator::diagonal({0.5, 0.5});
const HermitianOperator kKet0 = HermitianOperator::diagonal({1.0, 0.0});
const HermitianOperator kPlus = pauli_compose({0.5, 0.5, 0, 0});

// density supported exactly on the range of an isometry v
HermitianOperator density_on(Rng& rng, const Matrix& v) {
  const HermitianOperator inner = random_full_rank_density(rng, v.cols(), 0.1);
  return HermitianOperator::hermitian_part(v * (inner * v.adjoint()));
}

}  // namespace

TEST(AbsContinuity, Examples) {
  EXPECT_TRUE(is_abs_continuous(kKet0, kHalf));
  EXPECT_FALSE(is_abs_continuous(kHalf, kKet0));
  EXPECT_TRUE(is_abs_continuous(kPlus, kPlus));
  EXPECT_THROW(is_abs_continuous(kHalf, HermitianOperator::identity(3) * (1.0 / 3)), DimensionError);
}

TEST(Equivalence, Examples) {
  EXPECT_TRUE(is_equivalent(HermitianOperator::diagonal({0.3, 0.7}), kHalf));
  EXPECT_FALSE(is_equivalent(kKet0, kHalf));
  EXPECT_TRUE(is_equivalent(kPlus, kPlus));
}

TEST(RnApply, Examples) {
  const MeasureChange mc(HermitianOperator::diagonal({0.3, 0.7}), kHalf);
  EXPECT_LE((rn_apply(mc, kHalf) - HermitianOperator::diagonal({0.3, 0.7})).frobenius_norm(), 1e-14);

  Rng rng(1);
  const HermitianOperator rho = random_full_rank_density(rng, 3);
  const HermitianOperator x = random_hermitian(rng, 3);
  EXPECT_LE((rn_apply(MeasureChange(rho, rho), x) - x).frobenius_norm(), 1e-9);

  const MeasureChange quarter(HermitianOperator::diagonal({0.25, 0.75}), kHalf);
  EXPECT_LE((rn_apply(quarter, kKet0) - HermitianOperator::diagonal({0.5, 0.0})).frobenius_norm(), 1e-14);

  EXPECT_THROW(MeasureChange(kHalf, kKet0), DomainError);
  EXPECT_THROW(rn_apply(mc, HermitianOperator::identity(3)), DimensionError);
}

TEST(RnCompose, Examples) {
  const HermitianOperator tau = kHalf, sigma = HermitianOperator::diagonal({0.25, 0.75}),
                          rho = HermitianOperator::diagonal({0.1, 0.9});
  const MeasureChange chain = rn_compose(MeasureChange(rho, sigma), MeasureChange(sigma, tau));
  EXPECT_LE((rn_apply(chain, tau) - rho).frobenius_norm(), 1e-14);
  EXPECT_THROW(rn_compose(MeasureChange(rho, sigma), MeasureChange(rho, tau)), DomainError);
}

TEST(RnInverse, Examples) {
  const HermitianOperator sigma = HermitianOperator::diagonal({0.25, 0.75});
  const MeasureChange fwd(sigma, kHalf);
  const MeasureChange back = rn_inverse(fwd);
  EXPECT_LE((rn_apply(back, rn_apply(fwd, pauli::Z())) - pauli::Z()).frobenius_norm(), 1e-12);

  // rank-one pair: the null-space component of X is removed
  const HermitianOperator x{{1.0, 2.0}, {2.0, 3.0}};
  const MeasureChange r1(kKet0, kKet0);
  EXPECT_LE((rn_apply(rn_inverse(r1), rn_apply(r1, x)) - HermitianOperator::diagonal({1.0, 0.0})).frobenius_norm(), 1e-14);

  EXPECT_THROW(rn_inverse(MeasureChange(kKet0, kHalf)), DomainError);
}

TEST(TraceTransfer, Examples) {
  const auto t = trace_transfer(HermitianOperator::diagonal({0.3, 0.7}), kHalf, HermitianOperator::diagonal({1.0, 2.0}));
  EXPECT_NEAR(t.trace_sigma_x, 1.7, 1e-15);
  EXPECT_NEAR(t.trace_rho_y, 1.7, 1e-14);

  const auto id = trace_transfer(kKet0, kHalf, HermitianOperator::identity(2));
  EXPECT_NEAR(id.trace_sigma_x, 1.0, 1e-15);
  EXPECT_NEAR(id.trace_rho_y, 1.0, 1e-14);

  const HermitianOperator x{{1.0, 2.0}, {2.0, 3.0}};
  const auto same = trace_transfer(kKet0, kKet0, x);
  EXPECT_LE((same.y - HermitianOperator::diagonal({1.0, 0.0})).frobenius_norm(), 1e-14);
  EXPECT_NEAR(same.trace_sigma_x, same.trace_rho_y, 1e-14);

  EXPECT_THROW(trace_transfer(kHalf, kKet0, x), DomainError);
}

TEST(MeasureChangeProperties, LinearityInFirstArgument) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 3;
    const HermitianOperator tau = random_full_rank_density(rng, k);
    const HermitianOperator rho = random_density(rng, k, 1 + t % k), sigma = random_density(rng, k, k);
    const double a = uniform(rng, 0, 1);
    const HermitianOperator mix = rho * a + sigma * (1 - a);
    EXPECT_LE((rn_apply(MeasureChange(mix, tau), tau) - mix).frobenius_norm(), 1e-9);
  }
}

TEST(MeasureChangeProperties, ChainRule) {
  Rng rng(32);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 3;
    const HermitianOperator rho = random_full_rank_density(rng, k), sigma = random_full_rank_density(rng, k),
                            tau = random_full_rank_density(rng, k);
    const HermitianOperator x = random_hermitian(rng, k);
    const MeasureChange outer(rho, sigma), inner(sigma, tau), direct(rho, tau);
    const HermitianOperator nested = rn_apply(outer, rn_apply(inner, x));
    EXPECT_LE((rn_apply(rn_compose(outer, inner), x) - nested).frobenius_norm(), 1e-9);
    EXPECT_LE((rn_apply(direct, x) - nested).frobenius_norm(), 1e-9 * (1 + x.frobenius_norm()));
  }
}

TEST(MeasureChangeProperties, InverseRoundTripProjectsOntoSupport) {
  Rng rng(33);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 4;
    const std::size_t rank = 1 + t % k;
    const HermitianOperator rho = random_density(rng, k, rank);
    const SupportProjector supp = support_projector(rho);
    const HermitianOperator sigma = density_on(rng, supp.basis);
    const HermitianOperator x = random_hermitian(rng, k);
    const MeasureChange to_sigma(sigma, rho);
    const HermitianOperator round = rn_apply(rn_inverse(to_sigma), rn_apply(to_sigma, x));
    const HermitianOperator expect = HermitianOperator::hermitian_part(supp.projector * (x * supp.projector));
    EXPECT_LE((round - expect).frobenius_norm(), 1e-9) << "k=" << k << " rank=" << rank;
  }
}

TEST(MeasureChangeProperties, TraceTransferWithRankDeficientRho) {
  Rng rng(34);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 4;
    const HermitianOperator rho = random_density(rng, k, 1 + t % k);
    const SupportProjector supp = support_projector(rho);
    // sigma << rho, possibly of smaller rank still
    const Matrix v = supp.basis;
    Matrix sub(k, 1 + t % v.cols());
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < sub.cols(); ++c) sub(r, c) = v(r, c);
    const HermitianOperator sigma = density_on(rng, sub);
    const HermitianOperator x = random_hermitian(rng, k);
    const auto tt = trace_transfer(sigma, rho, x);
    EXPECT_NEAR(tt.trace_sigma_x, tt.trace_rho_y, 1e-9);
    EXPECT_NEAR(tt.trace_sigma_x, (to_eigen(sigma) * to_eigen(x)).trace().real(), 1e-12);
  }
}

TEST(MeasureChangeProperties, DiagonalMatchesElementwiseOracle) {
  Rng rng(35);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + t % 5;
    std::vector<double> s(k), r(k);
    double ts = 0, tr = 0;
    for (std::size_t i = 0; i < k; ++i) {
      ts += (s[i] = uniform(rng, 0.05, 1));
      tr += (r[i] = uniform(rng, 0.05, 1));
    }
    for (std::size_t i = 0; i < k; ++i) {
      s[i] /= ts;
      r[i] /= tr;
    }
    const HermitianOperator x = random_hermitian(rng, k);
    const HermitianOperator got = rn_apply(MeasureChange(HermitianOperator::diagonal(s), HermitianOperator::diagonal(r)), x);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        const Complex expect = x(j, l) * std::sqrt(s[j] * s[l] / (r[j] * r[l]));
        EXPECT_NEAR(std::abs(got(j, l) - expect), 0.0, 1e-12);
      }
  }
}
