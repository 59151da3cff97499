#include "ebayes/bridge.hpp"

#include <algorithm>
#include <cmath>

#include "ebayes/errors.hpp"

namespace ebayes::bridge {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_mvn_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw DomainError("covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd r = l.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * x.size() * kLog2Pi - l.diagonal().array().log().sum() - 0.5 * r.squaredNorm();
}

double log_det_spd(const Eigen::MatrixXd& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

void ConjugateModelFamily::validate(int n) const {
  if (models.empty()) throw DomainError("model family is empty");
  if (pi.size() != models.size()) throw DomainError("model weights and models differ in count");
  double total = 0.0;
  for (double w : pi) {
    if (!(w >= 0.0)) throw DomainError("model weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("model weights must sum to 1");
  for (const ConjugateModel& m : models) {
    if (m.dim() < 1) throw DomainError("model dimension must be positive");
    if (m.prior_cov.rows() != m.dim() || m.prior_cov.cols() != m.dim()) throw DomainError("prior covariance shape mismatch");
    if (m.design.rows() != n || m.design.cols() != m.dim()) throw DomainError("design shape mismatch");
    if (Eigen::LLT<Eigen::MatrixXd>(m.prior_cov).info() != Eigen::Success)
      throw DomainError("prior covariance is not positive definite");
  }
}

double exact_log_evidence(const ConjugateModelFamily& family, int k, const Eigen::VectorXd& y) {
  if (k < 0 || k >= static_cast<int>(family.models.size())) throw DomainError("model index out of range");
  const ConjugateModel& m = family.models[k];
  if (m.design.rows() != y.size()) throw DomainError("design rows must match the response length");
  Eigen::MatrixXd s = m.design * m.prior_cov * m.design.transpose();
  s.diagonal().array() += 1.0;
  return log_mvn_density(y, m.design * m.prior_mean, s);
}

GaussianPosterior posterior_gain_form(const ConjugateModel& model, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd& a = model.design;
  const Eigen::MatrixXd& sigma = model.prior_cov;
  Eigen::MatrixXd s = a * sigma * a.transpose();
  s.diagonal().array() += 1.0;
  const Eigen::MatrixXd gain = s.llt().solve(a * sigma).transpose();
  GaussianPosterior post;
  post.mean = model.prior_mean + gain * (y - a * model.prior_mean);
  post.cov = sigma - gain * a * sigma;
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  return post;
}

GaussianPosterior posterior_precision_form(const ConjugateModel& model, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd& a = model.design;
  const Eigen::LLT<Eigen::MatrixXd> prior(model.prior_cov);
  const Eigen::MatrixXd prior_prec = prior.solve(Eigen::MatrixXd::Identity(model.dim(), model.dim()));
  const Eigen::MatrixXd prec = prior_prec + a.transpose() * a;
  const Eigen::LLT<Eigen::MatrixXd> llt(prec);
  GaussianPosterior post;
  post.cov = llt.solve(Eigen::MatrixXd::Identity(model.dim(), model.dim()));
  post.mean = llt.solve(prior_prec * model.prior_mean + a.transpose() * y);
  return post;
}

double log_evidence_by_identity(const ConjugateModel& model, const Eigen::VectorXd& y) {
  const GaussianPosterior post = posterior_precision_form(model, y);
  const Eigen::VectorXd& theta0 = post.mean;
  const double log_lik = -0.5 * y.size() * kLog2Pi - 0.5 * (y - model.design * theta0).squaredNorm();
  return log_lik + log_mvn_density(theta0, model.prior_mean, model.prior_cov) -
         log_mvn_density(theta0, post.mean, post.cov);
}

double gaussian_kl(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0, const Eigen::VectorXd& m1,
                   const Eigen::MatrixXd& s1) {
  const Eigen::LLT<Eigen::MatrixXd> llt1(s1);
  if (llt1.info() != Eigen::Success) throw DomainError("gaussian_kl: covariance is not positive definite");
  const Eigen::VectorXd d = m1 - m0;
  const double trace = llt1.solve(s0).trace();
  const double quad = d.dot(llt1.solve(d));
  return 0.5 * (trace + quad - m0.size() + log_det_spd(s1) - log_det_spd(s0));
}

EquivalenceReport verify_eb_vb_equivalence(const ConjugateModelFamily& family, const Eigen::VectorXd& y) {
  const int km = static_cast<int>(family.models.size());
  if (km > 5) throw CapabilityError("verify_eb_vb_equivalence: at most 5 models");
  family.validate(static_cast<int>(y.size()));

  std::vector<double> log_pi(km), ev_cov(km), ev_id(km);
  for (int k = 0; k < km; ++k) {
    log_pi[k] = family.pi[k] > 0.0 ? std::log(family.pi[k]) : kNegInf;
    ev_cov[k] = exact_log_evidence(family, k, y);
    ev_id[k] = log_evidence_by_identity(family.models[k], y);
  }

  EquivalenceReport rep;
  std::vector<double> joint_cov(km), joint_id(km);
  for (int k = 0; k < km; ++k) {
    joint_cov[k] = log_pi[k] + ev_cov[k];
    joint_id[k] = log_pi[k] + ev_id[k];
  }
  rep.log_pbar = log_sum_exp(joint_cov);
  const double log_pbar_id = log_sum_exp(joint_id);

  rep.kl_closed.resize(km);
  rep.kl_direct.resize(km);
  for (int k = 0; k < km; ++k) {
    rep.kl_closed[k] = log_pi[k] == kNegInf ? kInf : rep.log_pbar - joint_cov[k];
    if (log_pi[k] == kNegInf) {
      rep.kl_direct[k] = kInf;
      continue;
    }
    // On the model-k slice the hierarchical posterior is pbar(k|Y) times the
    // model-k posterior; the Gaussian part of the KL vanishes and what is left
    // is -log pbar(k|Y).
    const GaussianPosterior q = posterior_precision_form(family.models[k], y);
    const GaussianPosterior comp = posterior_gain_form(family.models[k], y);
    const double log_post_k = joint_id[k] - log_pbar_id;
    rep.kl_direct[k] = gaussian_kl(q.mean, q.cov, comp.mean, comp.cov) - log_post_k;
    rep.identity_residual = std::max(rep.identity_residual, std::abs(rep.kl_closed[k] - rep.kl_direct[k]));
    rep.constancy_residual = std::max(rep.constancy_residual, std::abs(rep.kl_direct[k] + joint_cov[k] - rep.log_pbar));
  }

  rep.k_hat_mmle = static_cast<int>(std::max_element(joint_cov.begin(), joint_cov.end()) - joint_cov.begin());
  rep.k_hat_kl = static_cast<int>(std::min_element(rep.kl_direct.begin(), rep.kl_direct.end()) - rep.kl_direct.begin());
  rep.selection_agrees = rep.k_hat_mmle == rep.k_hat_kl;
  return rep;
}

BridgeInstance random_instance(int n, int n_models, Rng& rng) {
  if (n < 1 || n_models < 1 || n_models > 5) throw DomainError("random_instance: need n >= 1 and 1..5 models");
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim(1, 3);
  std::gamma_distribution<double> gam(1.0, 1.0);
  BridgeInstance inst;
  double total = 0.0;
  for (int k = 0; k < n_models; ++k) {
    const int d = dim(rng);
    ConjugateModel m;
    m.prior_mean.resize(d);
    for (int j = 0; j < d; ++j) m.prior_mean(j) = normal(rng);
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d * d; ++i) b(i) = normal(rng);
    m.prior_cov = b * b.transpose() / d + 0.5 * Eigen::MatrixXd::Identity(d, d);
    m.design.resize(n, d);
    for (int i = 0; i < n * d; ++i) m.design(i) = normal(rng);
    inst.family.models.push_back(std::move(m));
    inst.family.pi.push_back(gam(rng));
    total += inst.family.pi.back();
  }
  for (double& w : inst.family.pi) w /= total;

  std::uniform_int_distribution<int> pick(0, n_models - 1);
  const ConjugateModel& truth = inst.family.models[pick(rng)];
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(truth.prior_cov).matrixL();
  Eigen::VectorXd z(truth.dim());
  for (int j = 0; j < truth.dim(); ++j) z(j) = normal(rng);
  const Eigen::VectorXd theta = truth.prior_mean + l * z;
  inst.y = truth.design * theta;
  for (int i = 0; i < n; ++i) inst.y(i) += normal(rng);
  return inst;
}

}  // namespace ebayes::bridge
