#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>

#include "../support/oracles.hpp"
#include "ebayes/errors.hpp"
#include "ebayes/sieve_density.hpp"

using namespace ebayes;
using sieve::SieveData;

namespace {

std::vector<double> uniform_sample(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST(SieveBasis, Orthonormal) {
  for (int j = 1; j <= 6; ++j)
    for (int k = j; k <= 6; ++k) {
      const double ip =
          oracle::integrate([&](double x) { return sieve::basis(j, x) * sieve::basis(k, x); }, 0, 1, {0.25, 0.5, 0.75});
      EXPECT_NEAR(ip, j == k ? 1.0 : 0.0, 1e-12) << j << " " << k;
    }
  EXPECT_NEAR(sieve::basis(1, 0.0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sieve::basis(2, 0.125), std::sqrt(2.0) * std::sin(M_PI / 4), 1e-15);
  EXPECT_THROW(sieve::basis(0, 0.5), DomainError);
}

TEST(SieveNormalizer, ClosedFormsAndRiemannSum) {
  EXPECT_NEAR(sieve::log_normalizer(Eigen::VectorXd::Zero(3)), 0.0, 1e-14);
  for (double t : {0.5, 2.0}) {
    Eigen::VectorXd th(1);
    th << t;
    const int n = 1000000;
    double riemann = 0;
    for (int i = 0; i < n; ++i) riemann += std::exp(t * sieve::basis(1, (i + 0.5) / n));
    EXPECT_NEAR(sieve::log_normalizer(th), std::log(riemann / n), 1e-9);
    EXPECT_NEAR(sieve::log_normalizer(th), std::log(boost::math::cyl_bessel_i(0, t * std::sqrt(2.0))), 1e-12);
  }
}

TEST(SieveNormalizer, DensityIntegratesToOne) {
  Rng rng(2);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd th(5);
    for (int j = 0; j < 5; ++j) th(j) = normal(rng);
    const sieve::ExpFamilyModel m(th);
    const double total = oracle::integrate([&](double x) { return std::exp(m.log_density(x)); }, 0, 1,
                                           {0.2, 0.4, 0.6, 0.8});
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(SieveLikelihood, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const SieveData d(uniform_sample(40, rng), 4);
  Eigen::VectorXd th(4);
  th << 0.3, -0.2, 0.5, 0.1;
  const Eigen::VectorXd g = sieve::log_likelihood_gradient(d, th);
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd a = th, b = th;
    a(j) += 1e-5, b(j) -= 1e-5;
    EXPECT_NEAR(g(j), (sieve::log_likelihood(d, a) - sieve::log_likelihood(d, b)) / 2e-5, 1e-5);
  }
}

TEST(SieveMap, StationaryPoint) {
  Rng rng(4);
  Eigen::VectorXd truth(3);
  truth << 0.8, -0.4, 0.3;
  const SieveData d(sieve::sample_density(truth, 300, rng), 3);
  const sieve::SievePriorConfig cfg{2.0, 1.0, 10};
  const auto fit = sieve::fit_map(d, 3, cfg);
  const Eigen::VectorXd grad = sieve::log_likelihood_gradient(d, fit.map) - fit.map / cfg.sigma2;
  EXPECT_LT(grad.norm(), 1e-8);
  EXPECT_NEAR((fit.precision - fit.precision.transpose()).norm(), 0.0, 1e-10);
}

TEST(SieveMarginal, EmptyDataHasUnitMarginal) {
  Rng rng(5);
  const SieveData d({}, 5);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(sieve::log_marginal_k(d, k, {}, rng).estimate, 0.0, 1e-10);
}

TEST(SieveMarginal, OneCoordinateMatchesPriorMonteCarlo) {
  Rng rng(6);
  const SieveData d(uniform_sample(50, rng), 3);
  const auto est = sieve::log_marginal_k(d, 1, {}, rng);
  std::normal_distribution<double> normal;
  const int n = 100000;
  std::vector<double> ll(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd th(1);
    th << normal(rng);
    ll[i] = sieve::log_likelihood(d, th);
  }
  const double mx = *std::max_element(ll.begin(), ll.end());
  double m1 = 0, m2 = 0;
  for (double v : ll) m1 += std::exp(v - mx), m2 += std::exp(2 * (v - mx));
  m1 /= n, m2 /= n;
  const double se = std::sqrt((m2 - m1 * m1) / n) / m1;
  EXPECT_NEAR(est.estimate, mx + std::log(m1), 3 * std::hypot(se, est.se));
}

TEST(SieveMarginal, StableUnderMoreDraws) {
  Rng gen(7);
  Eigen::VectorXd truth(2);
  truth << 0.5, 0.5;
  const SieveData d(sieve::sample_density(truth, 200, gen), 6);
  sieve::MarginalOptions a, b;
  b.is_draws = 2 * a.is_draws;
  Rng r1(1), r2(2);
  const auto e1 = sieve::log_marginal_k(d, 4, {}, r1, a);
  const auto e2 = sieve::log_marginal_k(d, 4, {}, r2, b);
  EXPECT_NEAR(e1.estimate, e2.estimate, 2 * std::hypot(e1.se, e2.se) + 1e-9);
}

TEST(SievePoisson, Weight) {
  EXPECT_NEAR(sieve::log_poisson_weight(3, 2.0), 3 * std::log(2.0) - std::log(6.0), 1e-14);
  EXPECT_EQ(sieve::log_poisson_weight(0, 5.0), 0.0);
}

TEST(SieveSelection, UniformDataSelectsSmallK) {
  for (int rep = 0; rep < 10; ++rep) {
    Rng rng(100 + rep);
    const SieveData d(uniform_sample(200, rng), 20);
    const auto fit = sieve::select_k_and_fit(d, {1.0, 1.0, 20}, derive_seed(9, rep), 50);
    EXPECT_LE(fit.k_hat, 2) << rep;
  }
}

TEST(SieveHellinger, IdentityAndSymmetry) {
  const auto f = [](double x) { return 1.0 + 0.5 * std::cos(2 * M_PI * x); };
  const auto g = [](double) { return 1.0; };
  EXPECT_NEAR(sieve::hellinger_sq(f, f), 0.0, 1e-14);
  EXPECT_NEAR(sieve::hellinger_sq(f, g), sieve::hellinger_sq(g, f), 1e-14);
  const double ref = 1.0 - oracle::integrate([&](double x) { return std::sqrt(f(x)); }, 0, 1, {0.5});
  EXPECT_NEAR(sieve::hellinger_sq(f, g), ref, 1e-10);
}

TEST(SieveSampler, BasisMeansMatchModel) {
  Eigen::VectorXd th(2);
  th << 0.7, -0.4;
  Rng rng(8);
  const auto x = sieve::sample_density(th, 200000, rng);
  const sieve::ExpFamilyModel m(th);
  for (int j = 1; j <= 3; ++j) {
    double s = 0;
    for (double v : x) s += sieve::basis(j, v);
    const double ref =
        oracle::integrate([&](double t) { return sieve::basis(j, t) * std::exp(m.log_density(t)); }, 0, 1, {0.5});
    EXPECT_NEAR(s / x.size(), ref, 4 * std::sqrt(2.0 / x.size()));
  }
}
