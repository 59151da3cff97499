#include "ebayes/reg_eb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"

namespace ebayes::reg {

namespace {

constexpr long long kEnumerationBudget = 1000000;
constexpr double kPosteriorMassFloor = 1e-12;

// Least-squares reduction of the support integral around theta_hat.
struct Reduced {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd cov;  // G^{-1}
  double rss = 0.0;
  double log_det_gram = 0.0;
  bool diagonal = false;
};

Reduced reduce(const RegressionData& data, const Support& s) {
  const int k = s.size();
  Eigen::MatrixXd xs(data.n(), k);
  for (int c = 0; c < k; ++c) xs.col(c) = data.X.col(s.indices()[c]);
  const Eigen::MatrixXd gram = xs.transpose() * xs;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-10 * std::max(1.0, ev.maxCoeff())))
    throw StructureError("design restricted to the support is rank deficient");
  Reduced r;
  r.cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  r.cov = 0.5 * (r.cov + r.cov.transpose());
  r.theta_hat = r.cov * (xs.transpose() * data.Y);
  r.rss = (data.Y - xs * r.theta_hat).squaredNorm();
  r.log_det_gram = ev.array().log().sum();
  r.diagonal = mvn::is_diagonal(gram);
  if (r.diagonal) {
    // Exact inverse of a diagonal Gram matrix, without eigen-solver rounding.
    r.cov = gram.diagonal().cwiseInverse().asDiagonal();
    r.theta_hat = r.cov * (xs.transpose() * data.Y);
    r.rss = (data.Y - xs * r.theta_hat).squaredNorm();
    r.log_det_gram = gram.diagonal().array().log().sum();
  }
  return r;
}

Rng support_stream(const MarginalOptions& opts, const Support& s, int salt) {
  std::vector<int> key = s.indices();
  key.push_back(salt);
  return Rng(derive_seed(opts.seed, key));
}

// E[theta] for density proportional to N(theta; m, v) e^{-tau |theta|}.
double tilted_mean(double m, double v, double tau) {
  const double sd = std::sqrt(v);
  const double mu_pos = m - tau * v;
  const double mu_neg = m + tau * v;
  const double lw_pos = -tau * m + log_ndtr(mu_pos / sd);
  const double lw_neg = tau * m + log_ndtr(-mu_neg / sd);
  const double prob_pos = 1.0 / (1.0 + std::exp(lw_neg - lw_pos));
  const double mean_pos = mu_pos + sd * std::exp(log_normal_pdf(mu_pos / sd) - log_ndtr(mu_pos / sd));
  const double mean_neg = mu_neg - sd * std::exp(log_normal_pdf(mu_neg / sd) - log_ndtr(-mu_neg / sd));
  return prob_pos * mean_pos + (1.0 - prob_pos) * mean_neg;
}

void next_combination_or_size(std::vector<int>& idx, int p, bool& done) {
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[i] == p - k + i) --i;
  if (i < 0) {
    done = true;
    return;
  }
  ++idx[i];
  for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
}

void project_simplex(Eigen::Ref<Eigen::VectorXd> v, double radius) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cum += sorted[i];
    const double t = (cum - radius) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) theta = t;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::max(v(i) - theta, 0.0);
}

void project_l1_ball(Eigen::Ref<Eigen::VectorXd> v, double radius) {
  if (v.lpNorm<1>() <= radius) return;
  Eigen::VectorXd mag = v.cwiseAbs();
  project_simplex(mag, radius);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::copysign(mag(i), v(i));
}

}  // namespace

RegressionData::RegressionData(Eigen::VectorXd y, Eigen::MatrixXd x) : Y(std::move(y)), X(std::move(x)) {
  if (X.rows() != Y.size()) throw DomainError("regression data: X rows must match length of Y");
  if (X.cols() < 1 || Y.size() < 1) throw DomainError("regression data: empty design");
  if (!Y.allFinite() || !X.allFinite()) throw DomainError("regression data must be finite");
}

mvn::LogEstimate log_marginal_support(const RegressionData& data, const Support& s, double tau,
                                      const MarginalOptions& opts) {
  if (!(tau > 0.0)) throw DomainError("slab rate tau must be positive");
  if (s.p() != data.p()) throw DomainError("support dimension does not match the design");
  const double n = data.n();
  if (s.size() == 0) return {-0.5 * n * std::log(2.0 * M_PI) - 0.5 * data.Y.squaredNorm(), 0.0};

  const Reduced r = reduce(data, s);
  const int k = s.size();
  const double base = -0.5 * (n - k) * std::log(2.0 * M_PI) - 0.5 * r.rss - 0.5 * r.log_det_gram;
  if (r.diagonal) return {base + mvn::log_laplace_product_expectation_diagonal(r.theta_hat, r.cov.diagonal(), tau), 0.0};
  if (k <= 3) return {base + mvn::log_laplace_product_expectation_orthant(r.theta_hat, r.cov, tau, opts.sov), 0.0};

  Rng rng = support_stream(opts, s, 0);
  const mvn::IsDiagnostics d = mvn::log_laplace_product_expectation_is(r.theta_hat, r.cov, tau, opts.is_draws, rng);
  const double estimate = base + d.estimate.log_value;
  if (d.ess < opts.min_ess)
    throw PrecisionError("support marginal: importance-sampling ESS below threshold", estimate, d.estimate.se);
  return {estimate, d.estimate.se};
}

Eigen::VectorXd posterior_mean_support(const RegressionData& data, const Support& s, double tau,
                                       const MarginalOptions& opts) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(data.p());
  if (s.size() == 0) return out;
  const Reduced r = reduce(data, s);
  const int k = s.size();
  if (r.diagonal) {
    for (int c = 0; c < k; ++c) out(s.indices()[c]) = tilted_mean(r.theta_hat(c), r.cov(c, c), tau);
    return out;
  }
  Rng rng = support_stream(opts, s, 1);
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(r.cov).matrixL();
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> draws(opts.mean_draws);
  std::vector<double> logw(opts.mean_draws);
  Eigen::VectorXd z(k);
  for (int i = 0; i < opts.mean_draws; ++i) {
    for (int j = 0; j < k; ++j) z(j) = normal(rng);
    draws[i] = r.theta_hat + l * z;
    logw[i] = -tau * draws[i].cwiseAbs().sum();
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
  double total = 0.0;
  for (int i = 0; i < opts.mean_draws; ++i) {
    const double w = std::exp(logw[i] - mx);
    acc += w * draws[i];
    total += w;
  }
  acc /= total;
  for (int c = 0; c < k; ++c) out(s.indices()[c]) = acc(c);
  return out;
}

long long enumeration_size(int p, int s_max) {
  if (p < 1 || s_max < 0) throw DomainError("enumeration_size: need p >= 1 and s_max >= 0");
  long double total = 0.0L, c = 1.0L;
  for (int s = 0; s <= std::min(s_max, p); ++s) {
    total += c;
    if (total > kEnumerationBudget)
      throw CapabilityError("support enumeration exceeds the budget of 10^6 supports");
    c = c * (p - s) / (s + 1);
  }
  return static_cast<long long>(total);
}

std::vector<Support> enumerate_supports(int p, int s_max) {
  enumeration_size(p, s_max);
  std::vector<Support> out;
  for (int k = 0; k <= std::min(s_max, p); ++k) {
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    bool done = false;
    while (!done) {
      out.emplace_back(idx, p);
      next_combination_or_size(idx, p, done);
    }
  }
  return out;
}

std::vector<SupportMarginal> support_marginals(const RegressionData& data, double tau, int s_max,
                                               const MarginalOptions& opts) {
  std::vector<SupportMarginal> out;
  for (Support& s : enumerate_supports(data.p(), s_max)) {
    const mvn::LogEstimate est = log_marginal_support(data, s, tau, opts);
    out.push_back({std::move(s), est.log_value, est.se});
  }
  return out;
}

double log_marginal_lambda(const std::vector<double>& per_size_lse, int p, double lambda, const SpikeSlabConfig& cfg) {
  const double lw = seq::log_beta_weight(lambda, cfg.alpha, cfg.beta);
  if (lw == kNegInf) return kNegInf;
  std::vector<double> terms;
  terms.reserve(per_size_lse.size());
  for (std::size_t s = 0; s < per_size_lse.size(); ++s)
    terms.push_back(decomp::log_nu_lambda(static_cast<int>(s), p, lambda) + per_size_lse[s]);
  return lw + log_sum_exp(terms);
}

RegressionEBFit mmle_regression(const RegressionData& data, const SpikeSlabConfig& cfg, int s_max,
                                const MarginalOptions& opts) {
  cfg.validate();
  const int p = data.p();
  s_max = std::min(s_max, p);
  const std::vector<SupportMarginal> marg = support_marginals(data, cfg.tau, s_max, opts);

  std::vector<std::vector<double>> by_size(s_max + 1);
  for (const SupportMarginal& m : marg) by_size[m.support.size()].push_back(m.log_marginal);
  std::vector<double> per_size(s_max + 1);
  for (int s = 0; s <= s_max; ++s) per_size[s] = log_sum_exp(by_size[s]);

  const seq::ScalarMax best =
      seq::maximize_on_unit_interval([&](double lam) { return log_marginal_lambda(per_size, p, lam, cfg); });

  RegressionEBFit fit;
  fit.lambda_hat = best.arg;
  fit.log_marginal_at_hat = best.value;
  fit.s_max = s_max;

  std::vector<double> logpost(marg.size());
  for (std::size_t i = 0; i < marg.size(); ++i) {
    logpost[i] = decomp::log_nu_lambda(marg[i].support.size(), p, fit.lambda_hat) + marg[i].log_marginal;
    fit.max_marginal_se = std::max(fit.max_marginal_se, marg[i].se);
  }
  const double norm = log_sum_exp(logpost);
  std::vector<std::size_t> order(marg.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logpost[a] > logpost[b]; });
  fit.post_mean = Eigen::VectorXd::Zero(p);
  for (std::size_t i : order) {
    const double prob = std::exp(logpost[i] - norm);
    fit.support_posterior.emplace_back(marg[i].support, prob);
    if (prob > kPosteriorMassFloor) fit.post_mean += prob * posterior_mean_support(data, marg[i].support, cfg.tau, opts);
  }

  std::vector<double> tail;
  for (int s = s_max + 1; s <= p; ++s) tail.push_back(log_binomial(p, s) + decomp::log_nu_lambda(s, p, fit.lambda_hat));
  fit.truncation_bound = std::exp(log_sum_exp(tail));
  return fit;
}

double prediction_loss(const RegressionData& data, const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_star) {
  if (theta.size() != data.p() || theta_star.size() != data.p()) throw DomainError("prediction_loss: dimension mismatch");
  return (data.X * (theta - theta_star)).squaredNorm();
}

double max_column_norm(const Eigen::MatrixXd& x) {
  if (x.cols() == 0) throw DomainError("max_column_norm: empty matrix");
  return x.colwise().norm().maxCoeff();
}

double regression_tau(const Eigen::MatrixXd& x, double zeta) {
  return std::pow(static_cast<double>(x.cols()), -zeta) * max_column_norm(x);
}

double compatibility_number(const Eigen::MatrixXd& x, const Support& s) {
  const int p = static_cast<int>(x.cols());
  const int k = s.size();
  if (s.p() != p) throw DomainError("compatibility_number: support dimension does not match the design");
  if (k == 0) throw DomainError("compatibility_number: support must be nonempty");
  if (k > 8) throw CapabilityError("compatibility_number: sign-pattern enumeration is limited to |S| <= 8");

  std::vector<int> in = s.indices(), out;
  for (int j = 0; j < p; ++j)
    if (!s.contains(j)) out.push_back(j);
  std::vector<int> perm = in;
  perm.insert(perm.end(), out.begin(), out.end());
  const double scale = max_column_norm(x);
  if (!(scale > 0.0)) return 0.0;
  Eigen::MatrixXd xp(x.rows(), p);
  for (int c = 0; c < p; ++c) xp.col(c) = x.col(perm[c]) / scale;
  const Eigen::MatrixXd q = xp.transpose() * xp;
  const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (!(lip > 0.0)) return 0.0;

  auto objective = [&](const Eigen::VectorXd& u) { return u.dot(q * u); };
  double best = kInf;
  // u and -u give the same objective, so the first sign can be fixed.
  for (unsigned mask = 0; mask < (1u << (k - 1)); ++mask) {
    Eigen::VectorXd sigma(k);
    sigma(0) = 1.0;
    for (int j = 1; j < k; ++j) sigma(j) = ((mask >> (j - 1)) & 1u) ? -1.0 : 1.0;
    auto project = [&](Eigen::VectorXd& u) {
      Eigen::VectorXd head = sigma.cwiseProduct(u.head(k));
      project_simplex(head, 1.0);
      u.head(k) = sigma.cwiseProduct(head);
      if (p > k) project_l1_ball(u.tail(p - k), 3.0);
    };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    u.head(k) = sigma / k;
    Eigen::VectorXd y = u, prev = u;
    double f = objective(u), t = 1.0;
    for (int it = 0; it < 50000; ++it) {
      Eigen::VectorXd next = y - (2.0 / lip) * (q * y);
      project(next);
      const double fn = objective(next);
      if (fn > f) {
        // Adaptive restart: drop momentum and retry from the current iterate.
        if (t == 1.0) break;
        y = u;
        t = 1.0;
        continue;
      }
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      prev = u;
      u = next;
      const double step = (u - prev).lpNorm<Eigen::Infinity>();
      y = u + ((t - 1.0) / tn) * (u - prev);
      t = tn;
      f = fn;
      if (step < 1e-14) break;
    }
    best = std::min(best, f);
  }
  return std::sqrt(std::max(best, 0.0)) * std::sqrt(static_cast<double>(k));
}

}  // namespace ebayes::reg
