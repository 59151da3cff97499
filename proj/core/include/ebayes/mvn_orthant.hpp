#pragma once

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Gaussian expectations of Laplace products, used for spike-and-slab
/// regression marginals. For theta ~ N(m, V) in R^s,
///
///   E[prod_j (tau/2) e^{-tau |theta_j|}]
///     = (tau/2)^s sum_{sigma in {+-1}^s} exp(-tau sigma'm + tau^2 sigma'V sigma / 2)
///                                        P_{N(m - tau V sigma, V)}(sigma_j theta_j > 0 for all j),
///
/// and each orthant probability is a Gaussian CDF evaluated by Genz's
/// separation of variables.
namespace ebayes::mvn {

struct LogEstimate {
  double log_value = 0.0;
  /// Standard error of log_value (0 for closed-form or deterministic rules).
  double se = 0.0;
};

/// Tanh-sinh step 2^{-level} on each separated coordinate (dimension <= 3 only).
struct SovOptions {
  int level = 3;
};

/// log P(X <= upper) for X ~ N(0, cov), dimension 1..3, deterministic.
double log_mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov, const SovOptions& opts = {});

/// log E_{N(m,V)}[prod_j (tau/2) e^{-tau|theta_j|}] by the orthant decomposition.
/// Dimension 1..3. Orthants whose upper bound is below the running maximum by
/// more than 40 nats are skipped.
double log_laplace_product_expectation_orthant(const Eigen::VectorXd& m, const Eigen::MatrixXd& v, double tau,
                                               const SovOptions& opts = {});

/// Closed form when V is diagonal (any dimension): product of univariate terms.
double log_laplace_product_expectation_diagonal(const Eigen::VectorXd& m, const Eigen::VectorXd& var, double tau);

struct IsDiagnostics {
  LogEstimate estimate;
  double ess = 0.0;
  int draws = 0;
};

/// Importance sampling for the same expectation. The N(m, V) proposal is shifted
/// by the Laplace tilt at m, i.e. centred at m - tau V sign(m).
IsDiagnostics log_laplace_product_expectation_is(const Eigen::VectorXd& m, const Eigen::MatrixXd& v, double tau,
                                                 int n_draws, Rng& rng);

/// True when the off-diagonal of v is zero relative to its diagonal scale.
bool is_diagonal(const Eigen::MatrixXd& v, double rel_tol = 1e-13);

}  // namespace ebayes::mvn
