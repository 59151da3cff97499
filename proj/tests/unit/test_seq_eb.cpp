#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "ebayes/errors.hpp"
#include "ebayes/seq_eb.hpp"

using namespace ebayes;
using seq::SequenceData;
using seq::SpikeSlabConfig;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(xs.size());
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// E[theta^k | y] at fixed lambda by quadrature against the exact posterior.
double posterior_moment(double y, double lambda, double tau, int k) {
  const auto slab = [&](double t) { return oracle::normal_pdf(y - t) * 0.5 * tau * std::exp(-tau * std::abs(t)); };
  const double num = oracle::integrate([&](double t) { return std::pow(t, k) * slab(t); }, -oracle::kInf, oracle::kInf,
                                       {0.0, y});
  const double den = (1 - lambda) * oracle::normal_pdf(y) + lambda * oracle::gauss_laplace_marginal(y, tau);
  return lambda * num / den;
}

}  // namespace

TEST(SeqMarginal, SingleCoordinateExample) {
  const SequenceData d(vec({0.0}));
  EXPECT_NEAR(seq::log_marginal_lambda(d, 0.5, {1, 1, 1}), -1.10787, 5e-5);
  const double ref = std::log(0.5 * oracle::normal_pdf(0) + 0.5 * oracle::gauss_laplace_marginal(0, 1));
  EXPECT_NEAR(seq::log_marginal_lambda(d, 0.5, {1, 1, 1}), ref, 1e-12);
}

TEST(SeqMarginal, SpikeOnlyIsNullLikelihood) {
  const SequenceData d(vec({0.3, -1.2, 2.5, 0.0}));
  double ref = 0;
  for (int j = 0; j < d.p(); ++j) ref += log_normal_pdf(d.y(j));
  EXPECT_NEAR(seq::log_marginal_lambda(d, 0.0, {1.0, 1000.0, 1.0}), ref, 1e-12);
  EXPECT_EQ(seq::log_marginal_lambda(d, 0.0, {2.0, 1.0, 1.0}), kNegInf);
}

TEST(SeqMarginal, PriorSamplingMonteCarlo) {
  const SequenceData d(vec({0.4, -2.1, 3.0}));
  const double lambda = 0.4;
  Rng rng(11);
  std::bernoulli_distribution coin(lambda);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution sign(0.5);
  const int n = 10000;
  std::vector<double> lik(n);
  for (int i = 0; i < n; ++i) {
    double l = 1.0;
    for (int j = 0; j < 3; ++j) {
      const double t = coin(rng) ? (sign(rng) ? 1 : -1) * expo(rng) : 0.0;
      l *= oracle::normal_pdf(d.y(j) - t);
    }
    lik[i] = l;
  }
  double mean = 0, sq = 0;
  for (double l : lik) mean += l, sq += l * l;
  mean /= n;
  const double se = std::sqrt((sq / n - mean * mean) / n) / mean;
  EXPECT_NEAR(seq::log_marginal_lambda(d, lambda, {1, 1, 1}), std::log(mean), 3 * se);
}

TEST(SeqMmle, NullDataGivesSmallLambda) {
  const SequenceData d(Eigen::VectorXd::Zero(100));
  const auto fit = seq::mmle(d, {1.0, 1e6, 1.0});
  EXPECT_LE(fit.lambda_hat, 0.01);
}

TEST(SeqMmle, DenseSignalGivesLargeLambda) {
  Eigen::VectorXd y(20);
  for (int j = 0; j < 20; ++j) y(j) = j % 2 ? 10.0 : -10.0;
  EXPECT_GE(seq::mmle(SequenceData(y), {1, 1, 1}).lambda_hat, 0.99);
}

TEST(SeqMmle, DominatesUniformGrid) {
  Rng rng(5);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 50);
  for (int inst = 0; inst < 20; ++inst) {
    const int p = dim(rng);
    Eigen::VectorXd y(p);
    for (int j = 0; j < p; ++j) y(j) = normal(rng) * (j % 4 == 0 ? 4.0 : 1.0);
    const SequenceData d(y);
    const SpikeSlabConfig cfg{1.0, static_cast<double>(p), 1.0};
    const auto fit = seq::mmle(d, cfg);
    const auto [gx, gv] = oracle::grid_max([&](double l) { return seq::log_marginal_lambda(d, l, cfg); }, 10000);
    EXPECT_GE(fit.log_marginal_at_hat, gv - 1e-9) << inst;
    EXPECT_NEAR(fit.log_marginal_at_hat, seq::log_marginal_lambda(d, fit.lambda_hat, cfg), 1e-12);
  }
}

TEST(SeqPosterior, InclusionExamples) {
  EXPECT_EQ(seq::posterior_inclusion(1.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(seq::posterior_inclusion(1.0, 1.0, 1.0), 1.0);
  const double m0 = oracle::gauss_laplace_marginal(0.0, 1.0);
  EXPECT_NEAR(seq::posterior_inclusion(0.0, 0.5, 1.0), m0 / (m0 + oracle::normal_pdf(0.0)), 1e-12);
  EXPECT_NEAR(seq::posterior_inclusion(0.0, 0.5, 1.0), 0.39602, 5e-6);
  double prev = 0.0;
  for (double y = 0.0; y < 15.0; y += 0.25) {
    const double q = seq::posterior_inclusion(y, 0.2, 1.0);
    EXPECT_GE(q, prev - 1e-15);
    EXPECT_NEAR(q, seq::posterior_inclusion(-y, 0.2, 1.0), 1e-15);
    prev = q;
  }
}

TEST(SeqPosterior, MeanAndSecondMomentMatchQuadrature) {
  EXPECT_EQ(seq::posterior_mean_coordinate(0.0, 0.5, 1.0), 0.0);
  EXPECT_NEAR(seq::posterior_mean_coordinate(3.0, 0.9, 1.0), posterior_moment(3.0, 0.9, 1.0, 1), 1e-7);
  for (double y : {-6.0, -0.7, 0.2, 1.9, 8.0})
    for (double lambda : {0.05, 0.5, 0.95}) {
      EXPECT_NEAR(seq::posterior_mean_coordinate(y, lambda, 1.5), posterior_moment(y, lambda, 1.5, 1), 1e-8);
      EXPECT_NEAR(seq::posterior_second_moment_coordinate(y, lambda, 1.5), posterior_moment(y, lambda, 1.5, 2), 1e-7);
      EXPECT_EQ(std::signbit(seq::posterior_mean_coordinate(y, lambda, 1.5)), std::signbit(y));
    }
}

TEST(SeqPosterior, SamplerMatchesAnalyticSummaries) {
  Rng rng(21);
  const SequenceData d(vec({2.0, -0.5}));
  const Eigen::MatrixXd draws = seq::sample_posterior(d, 0.5, 1.0, 100000, rng);
  const double mean = draws.col(0).mean();
  const double ex = seq::posterior_mean_coordinate(2.0, 0.5, 1.0);
  const double var = seq::posterior_second_moment_coordinate(2.0, 0.5, 1.0) - ex * ex;
  EXPECT_NEAR(mean, ex, 4 * std::sqrt(var / 1e5));
  const double incl = (draws.col(1).array() != 0.0).cast<double>().mean();
  const double q = seq::posterior_inclusion(-0.5, 0.5, 1.0);
  EXPECT_NEAR(incl, q, 4 * std::sqrt(q * (1 - q) / 1e5));

  const Eigen::MatrixXd zero = seq::sample_posterior(d, 0.0, 1.0, 100, rng);
  EXPECT_TRUE((zero.array() == 0.0).all());
}

TEST(SeqPosterior, ExpectedLossDecomposition) {
  const SequenceData d(vec({2.0, -0.5, 5.0}));
  const auto fit = seq::mmle(d, {1, 3, 1});
  const Eigen::VectorXd ts = vec({1.0, 0.0, 4.0});
  const double ref = (fit.post_second_moment - 2 * ts.cwiseProduct(fit.post_mean) + ts.cwiseProduct(ts)).sum();
  EXPECT_NEAR(seq::posterior_expected_loss(fit, ts), ref, 1e-12);
  EXPECT_GE(seq::posterior_expected_loss(fit, ts), (fit.post_mean - ts).squaredNorm() - 1e-12);
}

TEST(SeqConfig, RejectsInvalidInput) {
  EXPECT_THROW((SpikeSlabConfig{0.0, 1.0, 1.0}.validate()), DomainError);
  EXPECT_THROW((SpikeSlabConfig{1.0, 1.0, -1.0}.validate()), DomainError);
  EXPECT_THROW(SequenceData(Eigen::VectorXd()), DomainError);
  EXPECT_THROW(seq::log_marginal_lambda(SequenceData(vec({1.0})), 1.5, {}), DomainError);
}
