#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Conjugate Gaussian model selection, where the hierarchical posterior, the
/// evidences and every KL divergence are closed form. Used to check that the
/// MMLE over the model index coincides with the KL projection of the
/// hierarchical posterior onto single-model distributions.
namespace ebayes::bridge {

/// Y ~ N(A theta, I_n), theta ~ N(mu, Sigma).
struct ConjugateModel {
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;
  Eigen::MatrixXd design;

  int dim() const { return static_cast<int>(prior_mean.size()); }
};

struct ConjugateModelFamily {
  std::vector<ConjugateModel> models;
  std::vector<double> pi;

  /// Throws DomainError on inconsistent shapes, pi off the simplex, or a
  /// covariance that is not positive definite.
  void validate(int n) const;
};

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// log N(Y; A mu, I + A Sigma A^T).
double exact_log_evidence(const ConjugateModelFamily& family, int k, const Eigen::VectorXd& y);

/// Posterior in gain form: mean mu + K (Y - A mu), cov Sigma - K A Sigma, K = Sigma A^T (I + A Sigma A^T)^{-1}.
GaussianPosterior posterior_gain_form(const ConjugateModel& model, const Eigen::VectorXd& y);

/// Posterior in precision form: cov (Sigma^{-1} + A^T A)^{-1}, mean cov (Sigma^{-1} mu + A^T Y).
GaussianPosterior posterior_precision_form(const ConjugateModel& model, const Eigen::VectorXd& y);

/// log p(Y|theta0) + log p(theta0) - log p(theta0|Y) at the posterior mean, with the
/// precision-form posterior.
double log_evidence_by_identity(const ConjugateModel& model, const Eigen::VectorXd& y);

/// KL(N(m0, S0) || N(m1, S1)).
double gaussian_kl(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0, const Eigen::VectorXd& m1,
                   const Eigen::MatrixXd& s1);

struct EquivalenceReport {
  int k_hat_mmle = 0;
  int k_hat_kl = 0;
  /// Minimal KL over distributions supported on model k, closed form
  /// log pbar(Y) - log(pi_k evidence_k); +inf when pi_k = 0.
  std::vector<double> kl_closed;
  /// Same quantity as KL(posterior_k || k-th component of the hierarchical
  /// posterior) - log pbar(k|Y), from the independent route.
  std::vector<double> kl_direct;
  double log_pbar = 0.0;
  /// max_k |kl_closed - kl_direct| over models with pi_k > 0.
  double identity_residual = 0.0;
  /// max_k |kl_direct + log(pi_k evidence_k) - log pbar| over models with pi_k > 0.
  double constancy_residual = 0.0;
  bool selection_agrees = false;
};

/// At most 5 models.
EquivalenceReport verify_eb_vb_equivalence(const ConjugateModelFamily& family, const Eigen::VectorXd& y);

struct BridgeInstance {
  ConjugateModelFamily family;
  Eigen::VectorXd y;
};

/// n_models models with dimensions in [1, 3] over n observations, random designs,
/// well-conditioned priors, Dirichlet(1) model weights, Y drawn from a random model.
BridgeInstance random_instance(int n, int n_models, Rng& rng);

}  // namespace ebayes::bridge
