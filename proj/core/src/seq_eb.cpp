#include "ebayes/seq_eb.hpp"

#include <cmath>

#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"

namespace ebayes::seq {

namespace {

void require_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0,1]");
}

// Slab posterior phi(y - theta) g(theta) is a two-piece mixture: N(y - tau, 1)
// truncated to (0, inf) and N(y + tau, 1) truncated to (-inf, 0).
struct SlabPosterior {
  double prob_pos;
  double mu_pos;
  double mu_neg;
  double mills_pos;  // phi(mu_pos) / Phi(mu_pos)
  double mills_neg;  // phi(mu_neg) / Phi(-mu_neg)

  SlabPosterior(double y, double tau) {
    mu_pos = y - tau;
    mu_neg = y + tau;
    const double lw_pos = -tau * y + log_ndtr(mu_pos);
    const double lw_neg = tau * y + log_ndtr(-mu_neg);
    prob_pos = 1.0 / (1.0 + std::exp(lw_neg - lw_pos));
    mills_pos = std::exp(log_normal_pdf(mu_pos) - log_ndtr(mu_pos));
    mills_neg = std::exp(log_normal_pdf(mu_neg) - log_ndtr(-mu_neg));
  }

  double mean() const {
    const double m_pos = mu_pos + mills_pos;
    const double m_neg = mu_neg - mills_neg;
    return prob_pos * m_pos + (1.0 - prob_pos) * m_neg;
  }

  double second_moment() const {
    const double s_pos = mu_pos * mu_pos + mu_pos * mills_pos + 1.0;
    const double s_neg = mu_neg * mu_neg - mu_neg * mills_neg + 1.0;
    return prob_pos * s_pos + (1.0 - prob_pos) * s_neg;
  }

  double sample(Rng& rng) const {
    std::uniform_real_distribution<double> unif;
    if (unif(rng) < prob_pos) return mu_pos + dists::sample_std_normal_above(-mu_pos, rng);
    return mu_neg - dists::sample_std_normal_above(mu_neg, rng);
  }
};

}  // namespace

void SpikeSlabConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("spike-and-slab weight exponents alpha, beta must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("slab rate tau must be positive");
}

SequenceData::SequenceData(Eigen::VectorXd values) : y(std::move(values)) {
  if (y.size() < 1) throw DomainError("sequence data must have p >= 1");
  if (!y.allFinite()) throw DomainError("sequence data must be finite");
}

double log_beta_weight(double lambda, double alpha, double beta) {
  require_lambda(lambda);
  auto term = [](double exponent, double base) {
    if (base == 0.0) return exponent == 0.0 ? 0.0 : kNegInf;
    return exponent * std::log(base);
  };
  return term(alpha - 1.0, lambda) + term(beta - 1.0, 1.0 - lambda);
}

double log_marginal_lambda(const SequenceData& data, double lambda, const SpikeSlabConfig& cfg) {
  require_lambda(lambda);
  cfg.validate();
  const double lw = log_beta_weight(lambda, cfg.alpha, cfg.beta);
  if (lw == kNegInf) return kNegInf;
  const double log_spike = lambda < 1.0 ? std::log1p(-lambda) : kNegInf;
  const double log_slab = lambda > 0.0 ? std::log(lambda) : kNegInf;
  double total = lw;
  for (int j = 0; j < data.p(); ++j) {
    const double yj = data.y(j);
    const double a = log_spike == kNegInf ? kNegInf : log_spike + log_normal_pdf(yj);
    const double b = log_slab == kNegInf ? kNegInf : log_slab + dists::log_gauss_laplace_marginal(yj, cfg.tau);
    total += log_add_exp(a, b);
  }
  return total;
}

double posterior_inclusion(double y, double lambda, double tau) {
  require_lambda(lambda);
  if (lambda == 0.0) return 0.0;
  if (lambda == 1.0) return 1.0;
  const double log_odds = std::log(lambda) - std::log1p(-lambda) + dists::log_gauss_laplace_marginal(y, tau) - log_normal_pdf(y);
  return 1.0 / (1.0 + std::exp(-log_odds));
}

double posterior_mean_coordinate(double y, double lambda, double tau) {
  const double incl = posterior_inclusion(y, lambda, tau);
  if (incl == 0.0) return 0.0;
  return incl * SlabPosterior(y, tau).mean();
}

double posterior_second_moment_coordinate(double y, double lambda, double tau) {
  const double incl = posterior_inclusion(y, lambda, tau);
  if (incl == 0.0) return 0.0;
  return incl * SlabPosterior(y, tau).second_moment();
}

EBFit mmle(const SequenceData& data, const SpikeSlabConfig& cfg) {
  cfg.validate();
  const ScalarMax best = maximize_on_unit_interval([&](double lam) { return log_marginal_lambda(data, lam, cfg); });
  EBFit fit;
  fit.lambda_hat = best.arg;
  fit.log_marginal_at_hat = best.value;
  const int p = data.p();
  fit.inclusion_prob.resize(p);
  fit.post_mean.resize(p);
  fit.post_second_moment.resize(p);
  for (int j = 0; j < p; ++j) {
    fit.inclusion_prob(j) = posterior_inclusion(data.y(j), fit.lambda_hat, cfg.tau);
    fit.post_mean(j) = posterior_mean_coordinate(data.y(j), fit.lambda_hat, cfg.tau);
    fit.post_second_moment(j) = posterior_second_moment_coordinate(data.y(j), fit.lambda_hat, cfg.tau);
  }
  return fit;
}

Eigen::MatrixXd sample_posterior(const SequenceData& data, double lambda, double tau, int n_draws, Rng& rng) {
  require_lambda(lambda);
  if (n_draws <= 0) throw DomainError("sample_posterior: n_draws must be positive");
  const int p = data.p();
  Eigen::MatrixXd draws = Eigen::MatrixXd::Zero(n_draws, p);
  std::uniform_real_distribution<double> unif;
  for (int j = 0; j < p; ++j) {
    const double incl = posterior_inclusion(data.y(j), lambda, tau);
    if (incl == 0.0) continue;
    const SlabPosterior slab(data.y(j), tau);
    for (int d = 0; d < n_draws; ++d)
      if (unif(rng) < incl) draws(d, j) = slab.sample(rng);
  }
  return draws;
}

double posterior_expected_loss(const EBFit& fit, const Eigen::VectorXd& theta_star) {
  if (theta_star.size() != fit.post_mean.size()) throw DomainError("posterior_expected_loss: dimension mismatch");
  return (fit.post_second_moment - 2.0 * fit.post_mean.cwiseProduct(theta_star) + theta_star.cwiseAbs2()).sum();
}

}  // namespace ebayes::seq
