#pragma once

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Densities, convolutions, tail bounds and samplers shared by the models.
namespace ebayes::dists {

/// Laplace slab g(x) = (tau/2) exp(-tau |x|).
struct LaplaceSlab {
  double tau;

  explicit LaplaceSlab(double rate);
  double log_density(double x) const;
  double sample(Rng& rng) const;
};

/// log E[g(theta)] for theta ~ N(mean, var) and g the Laplace slab with rate tau.
/// With var = 1 this is the Gaussian-Laplace convolution evaluated at `mean`.
double log_gauss_laplace_expectation(double mean, double var, double tau);

/// log m(y), m(y) = \int phi(y - theta) g(theta) d theta.
double log_gauss_laplace_marginal(double y, double tau);

/// m(y), see log_gauss_laplace_marginal.
double gauss_laplace_marginal(double y, double tau);

/// min(1, exp(2d/3 - t/3)): the chi-square tail bound P(chi2_d > t) <= this.
double chi2_tail_bound(int d, double t);

/// Z ~ N(0,1) conditioned on Z > a.
double sample_std_normal_above(double a, Rng& rng);

/// Elliptical Laplace distribution on R^ell with density proportional to
/// exp(-tau ||M B||), M an N x ell operator of full column rank.
class EllipticalLaplace {
 public:
  /// Throws StructureError when M^T M has an eigenvalue below 1e-12.
  EllipticalLaplace(Eigen::MatrixXd op, double tau);

  int ell() const { return static_cast<int>(op_.cols()); }
  double tau() const { return tau_; }
  const Eigen::MatrixXd& op() const { return op_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  /// (M^T M)^{-1/2}
  const Eigen::MatrixXd& inv_sqrt_gram() const { return inv_sqrt_gram_; }
  double log_det_gram() const { return log_det_gram_; }

  /// log of sqrt(det M^T M)/2 * (tau/sqrt(pi))^ell * Gamma(ell/2)/Gamma(ell).
  double log_normalizer() const { return log_norm_; }

  double log_density(const Eigen::VectorXd& b) const;

  /// v = r u with u uniform on the sphere and r ~ Gamma(ell, rate tau); B = (M^T M)^{-1/2} v.
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::MatrixXd op_;
  double tau_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd inv_sqrt_gram_;
  double log_det_gram_ = 0.0;
  double log_norm_ = 0.0;
};

/// Log normalizing constant of the elliptical Laplace given ell, tau and
/// log det(M^T M); shared with code that never materializes the operator.
double elliptical_laplace_log_normalizer(int ell, double tau, double log_det_gram);

}  // namespace ebayes::dists
