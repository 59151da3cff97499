#include <gtest/gtest.h>

#include "ebayes/decomp.hpp"
#include "ebayes/errors.hpp"
#include "ebayes/seq_eb.hpp"

using namespace ebayes;
using decomp::Support;

TEST(NuLambda, ExamplesAndNormalization) {
  EXPECT_EQ(decomp::nu_lambda(0, 5, 0.0), 1.0);
  EXPECT_NEAR(decomp::nu_lambda(1, 3, 0.5), 0.125, 1e-16);
  double total = 0.0;
  for (unsigned long long mask = 0; mask < (1ull << 10); ++mask)
    total += decomp::nu_lambda(Support::from_mask(mask, 10).size(), 10, 0.3);
  EXPECT_NEAR(total, 1.0, 1e-13);
}

TEST(EffectiveWeight, Examples) {
  EXPECT_NEAR(decomp::effective_weight(1, 2, 1, 1), std::log(0.25), 1e-14);
  EXPECT_EQ(decomp::effective_weight(0, 7, 1, 50), 0.0);
  EXPECT_EQ(decomp::effective_weight(6, 6, 3, 1), 0.0);
}

TEST(EffectiveWeight, MatchesRefinedGridMaximum) {
  for (int p = 1; p <= 15; p += 2)
    for (double beta : {1.0, 2.5, static_cast<double>(p * p)})
      for (int s = 0; s <= p; ++s) {
        const auto obj = [&](double l) { return decomp::log_nu_lambda(s, p, l) + seq::log_beta_weight(l, 1.0, beta); };
        double best = kNegInf, arg = 0;
        const int n = 20001;
        for (int i = 0; i < n; ++i) {
          const double l = static_cast<double>(i) / (n - 1);
          if (obj(l) > best) best = obj(l), arg = l;
        }
        double lo = std::max(0.0, arg - 1.0 / (n - 1)), hi = std::min(1.0, arg + 1.0 / (n - 1));
        for (int it = 0; it < 200; ++it) {
          const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
          if (obj(a) < obj(b))
            lo = a;
          else
            hi = b;
        }
        best = std::max(best, obj(0.5 * (lo + hi)));
        EXPECT_NEAR(decomp::effective_weight(s, p, 1.0, beta), best, 1e-9) << p << " " << s << " " << beta;
      }
}

TEST(EffectiveWeight, RatioSandwich) {
  for (int p : {8, 12, 16, 30}) {
    const double beta = std::pow(p, 4);
    const auto sw = decomp::gamma_ratio_sandwich(p, 1.0, beta);
    for (int s = 0; s < p; ++s) {
      const double r = decomp::effective_weight(s + 1, p, 1.0, beta) - decomp::effective_weight(s, p, 1.0, beta);
      EXPECT_GE(r, sw.log_lower - 1e-12);
      EXPECT_LE(r, sw.log_upper + 1e-12);
    }
  }
}

TEST(SumLemma, GroupingEqualsEnumeration) {
  for (int p : {2, 5, 8, 12})
    for (int s = 0; s <= p; s += 2) {
      const double beta = std::pow(p, 4);
      EXPECT_NEAR(decomp::verify_sum_lemma(p, 1.0, beta, 1.0, s).log_sum,
                  decomp::sum_lemma_by_enumeration(p, 1.0, beta, 1.0, s), 1e-10);
    }
}

TEST(SumLemma, BoundAndConstant) {
  const auto r = decomp::verify_sum_lemma(12, 1.0, std::pow(12, 4), 1.0, 2);
  EXPECT_TRUE(std::isfinite(r.minimal_C4));
  EXPECT_LE(r.minimal_C4, 12.0);
  EXPECT_NEAR(r.minimal_C4, r.log_sum / (2 * std::log(12.0)), 1e-12);
  EXPECT_TRUE(r.assumption_holds);
}

TEST(SumLemma, LargeBetaConcentratesOnEmptySupport) {
  const int p = 10, s = 0;
  double prev = kInf;
  for (double k : {4.0, 6.0, 8.0}) {
    const double v = decomp::verify_sum_lemma(p, 1.0, std::pow(p, k), 0.0, s).log_sum;
    EXPECT_LT(v, prev);
    EXPECT_GE(v, -1e-12);
    prev = v;
  }
  EXPECT_LT(prev, 1e-3);
  EXPECT_THROW(decomp::verify_sum_lemma(41, 1, 1, 1, 0), CapabilityError);
}

TEST(SequenceTest, ExactNullNeverRejects) {
  Eigen::VectorXd t(6);
  t << 1, 0, 0, 2, 0, 0;
  const Support star({0, 3}, 6);
  EXPECT_FALSE(decomp::test_reject_sequence_max(t, t, star));
  for (unsigned long long mask = 0; mask < 64; ++mask)
    EXPECT_FALSE(decomp::test_reject_sequence(t, t, Support::from_mask(mask, 6), star));
}

TEST(SequenceTest, MaxEqualsBruteForceOverSupports) {
  Rng rng(8);
  std::normal_distribution<double> normal;
  const Support star({1, 4}, 8);
  const Eigen::VectorXd t = Eigen::VectorXd::Zero(8);
  for (int rep = 0; rep < 300; ++rep) {
    Eigen::VectorXd y(8);
    for (int j = 0; j < 8; ++j) y(j) = 2.2 * normal(rng);
    bool any = false;
    for (unsigned long long mask = 0; mask < 256; ++mask)
      any = any || decomp::test_reject_sequence(y, t, Support::from_mask(mask, 8), star);
    EXPECT_EQ(decomp::test_reject_sequence_max(y, t, star), any);
  }
}

TEST(SlabBallMass, EmptySupportIsDeterministic) {
  Rng rng(2);
  Eigen::VectorXd t(3);
  t << 1, 0, 0;
  EXPECT_EQ(decomp::estimate_slab_ball_mass(Support::empty(3), t, 1.5, 1.0, 1000, rng).mass, 1.0);
  EXPECT_EQ(decomp::estimate_slab_ball_mass(Support::empty(3), t, 0.5, 1.0, 1000, rng).mass, 0.0);
}

TEST(SlabBallMass, SingleCoordinateMatchesLaplaceCdf) {
  Rng rng(4);
  const auto est = decomp::estimate_slab_ball_mass(Support({0}, 2), Eigen::VectorXd::Zero(2), 1.0, 1.0, 100000, rng);
  EXPECT_NEAR(est.mass, 1 - std::exp(-1.0), 3 * est.se);
  EXPECT_THROW(decomp::estimate_slab_ball_mass(Support({0}, 2), Eigen::VectorXd::Zero(2), 1.0, 1.0, 10, rng),
               DomainError);
}

TEST(SupportType, ValidatesIndices) {
  EXPECT_THROW(Support({2, 1}, 4), DomainError);
  EXPECT_THROW(Support({4}, 4), DomainError);
  EXPECT_EQ(Support({0, 2}, 4).united(Support({1, 2}, 4)), Support({0, 1, 2}, 4));
}
