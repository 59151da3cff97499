#include "ebayes/dists.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ebayes/errors.hpp"

namespace ebayes::dists {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

void require_rate(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("slab rate tau must be positive and finite");
}

}  // namespace

LaplaceSlab::LaplaceSlab(double rate) : tau(rate) { require_rate(rate); }

double LaplaceSlab::log_density(double x) const { return std::log(0.5 * tau) - tau * std::abs(x); }

double LaplaceSlab::sample(Rng& rng) const {
  std::exponential_distribution<double> expo(tau);
  std::bernoulli_distribution coin(0.5);
  const double r = expo(rng);
  return coin(rng) ? r : -r;
}

double log_gauss_laplace_expectation(double mean, double var, double tau) {
  require_finite(mean, "mean");
  require_rate(tau);
  if (!(var > 0.0)) throw DomainError("variance must be positive");
  // Split at 0 and complete the square on each half line:
  //   (tau/2) [ e^{-tau m + tau^2 v/2} Phi((m - tau v)/sd) + e^{tau m + tau^2 v/2} Phi((-m - tau v)/sd) ]
  const double sd = std::sqrt(var);
  const double shift = 0.5 * tau * tau * var;
  const double pos = shift - tau * mean + log_ndtr((mean - tau * var) / sd);
  const double neg = shift + tau * mean + log_ndtr((-mean - tau * var) / sd);
  return std::log(0.5 * tau) + log_add_exp(pos, neg);
}

double log_gauss_laplace_marginal(double y, double tau) {
  require_finite(y, "y");
  return log_gauss_laplace_expectation(y, 1.0, tau);
}

double gauss_laplace_marginal(double y, double tau) { return std::exp(log_gauss_laplace_marginal(y, tau)); }

double chi2_tail_bound(int d, double t) {
  if (d < 1) throw DomainError("chi2_tail_bound: d must be >= 1");
  if (!(t >= 0.0)) throw DomainError("chi2_tail_bound: t must be >= 0");
  return std::min(1.0, std::exp(2.0 * d / 3.0 - t / 3.0));
}

double sample_std_normal_above(double a, Rng& rng) {
  if (a < 0.5) {
    std::normal_distribution<double> normal;
    for (;;) {
      const double z = normal(rng);
      if (z > a) return z;
    }
  }
  // Exponential proposal with the optimal rate for the tail (Robert, 1995).
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  std::exponential_distribution<double> expo(rate);
  std::uniform_real_distribution<double> unif;
  for (;;) {
    const double z = a + expo(rng);
    const double d = z - rate;
    if (unif(rng) <= std::exp(-0.5 * d * d)) return z;
  }
}

double elliptical_laplace_log_normalizer(int ell, double tau, double log_det_gram) {
  return 0.5 * log_det_gram - std::log(2.0) + ell * (std::log(tau) - 0.5 * kLogPi) +
         std::lgamma(0.5 * ell) - std::lgamma(static_cast<double>(ell));
}

EllipticalLaplace::EllipticalLaplace(Eigen::MatrixXd op, double tau) : op_(std::move(op)), tau_(tau) {
  require_rate(tau);
  if (op_.cols() < 1 || op_.rows() < op_.cols()) throw StructureError("elliptical Laplace: operator must be N x ell with N >= ell >= 1");
  if (!op_.allFinite()) throw DomainError("elliptical Laplace: operator has non-finite entries");
  gram_ = op_.transpose() * op_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  if (ev.minCoeff() < 1e-12) throw StructureError("elliptical Laplace: operator is rank deficient (eigenvalue below 1e-12)");
  inv_sqrt_gram_ = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  log_det_gram_ = ev.array().log().sum();
  log_norm_ = elliptical_laplace_log_normalizer(ell(), tau_, log_det_gram_);
}

double EllipticalLaplace::log_density(const Eigen::VectorXd& b) const {
  if (b.size() != op_.cols()) throw DomainError("elliptical Laplace: dimension mismatch");
  return log_norm_ - tau_ * (op_ * b).norm();
}

Eigen::VectorXd EllipticalLaplace::sample(Rng& rng) const {
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> radius(static_cast<double>(ell()), 1.0 / tau_);
  Eigen::VectorXd u(ell());
  double nrm = 0.0;
  do {
    for (int i = 0; i < ell(); ++i) u(i) = normal(rng);
    nrm = u.norm();
  } while (nrm == 0.0);
  const Eigen::VectorXd v = (radius(rng) / nrm) * u;
  return inv_sqrt_gram_ * v;
}

}  // namespace ebayes::dists
