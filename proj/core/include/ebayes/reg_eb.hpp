#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebayes/decomp.hpp"
#include "ebayes/mvn_orthant.hpp"
#include "ebayes/seq_eb.hpp"

/// Empirical Bayes for sparse linear regression Y ~ N(X theta, I_n) under the
/// spike-and-slab prior, by exact enumeration of supports up to a size cap.
namespace ebayes::reg {

using decomp::Support;
using seq::SpikeSlabConfig;

struct RegressionData {
  Eigen::VectorXd Y;
  Eigen::MatrixXd X;

  RegressionData(Eigen::VectorXd y, Eigen::MatrixXd x);
  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

struct MarginalOptions {
  /// Importance-sampling draws for |S| >= 4 with a non-diagonal Gram matrix.
  int is_draws = 10000;
  double min_ess = 500.0;
  /// Draws for the per-support posterior mean when no closed form applies.
  int mean_draws = 2000;
  mvn::SovOptions sov;
  /// Master seed; each support gets a stream derived from its indices.
  std::uint64_t seed = 0;
};

/// log of \int N(Y; X_S theta, I) prod_{j in S} (tau/2) e^{-tau|theta_j|} d theta.
/// Closed form for a diagonal Gram matrix, orthant decomposition for |S| <= 3,
/// importance sampling beyond. Throws StructureError if X_S is rank deficient and
/// PrecisionError when the sampling ESS falls below opts.min_ess.
mvn::LogEstimate log_marginal_support(const RegressionData& data, const Support& s, double tau,
                                      const MarginalOptions& opts = {});

/// E[theta | S, Y] (length p, zero off S) under the Laplace slab.
Eigen::VectorXd posterior_mean_support(const RegressionData& data, const Support& s, double tau,
                                       const MarginalOptions& opts = {});

struct SupportMarginal {
  Support support;
  double log_marginal = 0.0;
  double se = 0.0;
};

struct RegressionEBFit {
  double lambda_hat = 0.0;
  double log_marginal_at_hat = kNegInf;
  /// Enumerated supports with their posterior probability at lambda_hat,
  /// sorted by decreasing probability.
  std::vector<std::pair<Support, double>> support_posterior;
  int s_max = 0;
  /// P(Binomial(p, lambda_hat) > s_max): prior mass left out by the cap.
  double truncation_bound = 0.0;
  /// Largest standard error among the enumerated log marginals.
  double max_marginal_se = 0.0;
  Eigen::VectorXd post_mean;
};

/// Number of supports with |S| <= s_max; throws CapabilityError above 10^6.
long long enumeration_size(int p, int s_max);

/// All supports of size <= s_max in size-then-lexicographic order.
std::vector<Support> enumerate_supports(int p, int s_max);

/// log marginals of every support of size <= s_max, in enumerate_supports order.
std::vector<SupportMarginal> support_marginals(const RegressionData& data, double tau, int s_max,
                                               const MarginalOptions& opts = {});

/// log w(lambda) + log sum_{|S| <= s_max} nu_lambda(S) exp(log marginal(S)),
/// from per-size log-sum-exps of the support marginals.
double log_marginal_lambda(const std::vector<double>& per_size_lse, int p, double lambda, const SpikeSlabConfig& cfg);

/// MMLE over lambda with cfg.tau as the slab rate. The posterior mean is
/// averaged over supports carrying more than 1e-12 posterior mass.
RegressionEBFit mmle_regression(const RegressionData& data, const SpikeSlabConfig& cfg, int s_max,
                                const MarginalOptions& opts = {});

/// ||X (theta - theta_star)||^2.
double prediction_loss(const RegressionData& data, const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_star);

/// Largest Euclidean column norm.
double max_column_norm(const Eigen::MatrixXd& x);

/// tau = p^{-zeta} * max column norm.
double regression_tau(const Eigen::MatrixXd& x, double zeta);

/// kappa(S) = inf ||X u|| sqrt|S| / (||X|| ||u_S||_1) over ||u_{S^c}||_1 <= 3 ||u_S||_1.
/// Minimizes ||Xu||^2 over each sign pattern of u_S with ||u_S||_1 = 1 by
/// accelerated projected gradient. Throws CapabilityError for |S| > 8.
double compatibility_number(const Eigen::MatrixXd& x, const Support& s);

}  // namespace ebayes::reg
