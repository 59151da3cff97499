#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Empirical Bayes for the Gaussian sequence model Y ~ N(theta, I_p) under the
/// spike-and-slab prior with a Laplace slab and beta-type weight on lambda.
namespace ebayes::seq {

/// Weight w(lambda) = lambda^{alpha-1} (1-lambda)^{beta-1} and slab rate tau.
struct SpikeSlabConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 1.0;

  void validate() const;
};

struct SequenceData {
  Eigen::VectorXd y;

  explicit SequenceData(Eigen::VectorXd values);
  int p() const { return static_cast<int>(y.size()); }
};

struct EBFit {
  double lambda_hat = 0.0;
  double log_marginal_at_hat = 0.0;
  Eigen::VectorXd inclusion_prob;
  Eigen::VectorXd post_mean;
  Eigen::VectorXd post_second_moment;
  std::optional<Eigen::MatrixXd> draws;
};

/// log w(lambda). At lambda in {0,1} the endpoint exponent contributes 0 when it
/// is exactly 0 (alpha = 1 or beta = 1) and -inf otherwise.
double log_beta_weight(double lambda, double alpha, double beta);

/// log w(lambda) + sum_j log[(1-lambda) phi(y_j) + lambda m(y_j)].
double log_marginal_lambda(const SequenceData& data, double lambda, const SpikeSlabConfig& cfg);

/// Maximizer of a scalar objective on [0,1]: 512-point grid, then golden-section
/// refinement around the best grid cells. Ties go to the smaller lambda.
/// Exposed so the regression model optimizes with the identical path.
struct ScalarMax {
  double arg = 0.0;
  double value = kNegInf;
};
template <class F>
ScalarMax maximize_on_unit_interval(F&& objective);

/// MMLE of lambda plus posterior summaries at the selected value.
EBFit mmle(const SequenceData& data, const SpikeSlabConfig& cfg);

/// P(theta_j != 0 | y_j) at fixed lambda.
double posterior_inclusion(double y, double lambda, double tau);

/// E[theta_j | y_j] at fixed lambda.
double posterior_mean_coordinate(double y, double lambda, double tau);

/// E[theta_j^2 | y_j] at fixed lambda.
double posterior_second_moment_coordinate(double y, double lambda, double tau);

/// Exact independent posterior draws, n_draws x p. Spike draws are exactly 0.
Eigen::MatrixXd sample_posterior(const SequenceData& data, double lambda, double tau, int n_draws, Rng& rng);

/// Posterior expected squared error E[||theta - theta_star||^2 | Y] at fixed summaries.
double posterior_expected_loss(const EBFit& fit, const Eigen::VectorXd& theta_star);

}  // namespace ebayes::seq

#include "ebayes/detail/unit_interval_max.ipp"
