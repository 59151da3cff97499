#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Density estimation on [0,1] with log-densities sum_j theta_j phi_j - c(theta)
/// in the Fourier basis, Gaussian priors per truncation level k and a Poisson
/// weight on k chosen by maximum marginal likelihood.
namespace ebayes::sieve {

/// phi_j for j >= 1: sqrt(2) cos(2 pi i x) for j = 2i - 1, sqrt(2) sin(2 pi i x) for j = 2i.
double basis(int j, double x);

struct SievePriorConfig {
  double sigma2 = 1.0;
  double tau_pois = 1.0;
  int k_max = 50;

  void validate() const;
};

/// Density p_theta; c(theta) is evaluated once at construction.
class ExpFamilyModel {
 public:
  ExpFamilyModel(Eigen::VectorXd coefficients, int nodes = 512);
  const Eigen::VectorXd& theta() const { return theta_; }
  int quad_nodes() const { return quad_nodes_; }
  int k() const { return static_cast<int>(theta_.size()); }
  double log_normalizer() const { return log_norm_; }
  double log_density(double x) const;

 private:
  Eigen::VectorXd theta_;
  int quad_nodes_;
  double log_norm_ = 0.0;
};

/// c(theta) = log int_0^1 exp(sum_j theta_j phi_j(x)) dx by composite 16-point
/// Gauss-Legendre with quad_nodes nodes (rounded up to a multiple of 16).
/// Throws PrecisionError when the value and its 2x refinement differ by > 1e-10.
double log_normalizer(const Eigen::VectorXd& theta, int quad_nodes = 512);

/// Sample with the basis sums T_j = sum_i phi_j(X_i), j = 1..k_max.
class SieveData {
 public:
  SieveData(std::vector<double> x, int k_max);
  int n() const { return static_cast<int>(x_.size()); }
  int k_max() const { return static_cast<int>(stats_.size()); }
  const std::vector<double>& x() const { return x_; }
  const Eigen::VectorXd& stats() const { return stats_; }
  /// First n_sub observations, basis sums recomputed.
  SieveData head(int n_sub) const;

 private:
  std::vector<double> x_;
  Eigen::VectorXd stats_;
};

/// theta' T_{1..k} - n c(theta).
double log_likelihood(const SieveData& data, const Eigen::VectorXd& theta, int quad_nodes = 512);

/// T_{1..k} - n E_theta[phi].
Eigen::VectorXd log_likelihood_gradient(const SieveData& data, const Eigen::VectorXd& theta, int quad_nodes = 512);

struct MarginalOptions {
  int is_draws = 2000;
  int quad_nodes = 512;
  int max_newton = 200;
  double grad_tol = 1e-8;
};

struct LaplaceFit {
  Eigen::VectorXd map;
  /// Negated Hessian of the log posterior at the MAP.
  Eigen::MatrixXd precision;
  int newton_iterations = 0;
};

/// MAP of log-likelihood - ||theta||^2 / (2 sigma2) by damped Newton.
/// Throws NumericError without convergence (||grad|| <= grad_tol) in max_newton steps.
LaplaceFit fit_map(const SieveData& data, int k, const SievePriorConfig& cfg, const MarginalOptions& opts = {});

struct LogEstimate {
  double estimate = 0.0;
  double se = 0.0;
  double laplace = 0.0;
};

/// log int prod_i p(X_i | theta) dN(0, sigma2 I_k): Laplace approximation at the
/// MAP corrected by importance sampling from the Laplace Gaussian.
LogEstimate log_marginal_k(const SieveData& data, int k, const SievePriorConfig& cfg, Rng& rng,
                           const MarginalOptions& opts = {});

/// k log tau - log k!.
double log_poisson_weight(int k, double tau);

struct SieveFit {
  int k_hat = 0;
  Eigen::VectorXd map_theta;
  /// log w(k) + log marginal for k = 1..K (index k-1), with SEs.
  std::vector<double> scores;
  std::vector<double> score_se;
  /// Draws from the Laplace Gaussian at k_hat, one per row.
  Eigen::MatrixXd draws;
  int quad_nodes = 512;

  /// Posterior average of H^2(p_theta, f) over the draws.
  double hellinger_sq_to(const std::function<double(double)>& density) const;
};

/// k_hat over k = 1..min(n, k_max); independent streams per k derived from `seed`.
SieveFit select_k_and_fit(const SieveData& data, const SievePriorConfig& cfg, std::uint64_t seed, int n_draws = 200,
                          const MarginalOptions& opts = {});

/// H^2(f, g) = 1 - int sqrt(f g) on [0,1] by quadrature.
double hellinger_sq(const std::function<double(double)>& f, const std::function<double(double)>& g,
                    int quad_nodes = 2048);

/// n exact draws from p_theta by rejection from the uniform density.
std::vector<double> sample_density(const Eigen::VectorXd& theta, int n, Rng& rng);

}  // namespace ebayes::sieve
