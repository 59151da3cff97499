#include "ebayes/mvn_orthant.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"

namespace ebayes::mvn {

namespace {

constexpr double kPruneNats = 40.0;
constexpr double kTanhSinhRange = 3.2;

// Tanh-sinh nodes/weights on [0,1]; robust to the endpoint singularities of
// the separated integrands.
struct UnitRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;

  explicit UnitRule(int level) {
    const double h = std::ldexp(1.0, -level);
    const int kmax = static_cast<int>(std::ceil(kTanhSinhRange / h));
    for (int k = -kmax; k <= kmax; ++k) {
      const double t = k * h;
      const double u = 0.5 * M_PI * std::sinh(t);
      nodes.push_back(1.0 / (1.0 + std::exp(-2.0 * u)));
      const double ch = std::cosh(u);
      log_weights.push_back(std::log(0.25 * M_PI * h * std::cosh(t)) - 2.0 * std::log(ch));
    }
  }
};

const UnitRule& unit_rule(int level) {
  thread_local std::vector<std::pair<int, UnitRule>> cache;
  for (const auto& [l, rule] : cache)
    if (l == level) return rule;
  cache.emplace_back(level, UnitRule(level));
  return cache.back().second;
}

double inverse_from_log(double w, double log_e) {
  const double q = std::max(w * std::exp(log_e), 1e-300);
  return ndtri(std::min(q, 1.0 - 1e-16));
}

}  // namespace

double log_mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov, const SovOptions& opts) {
  const int d = static_cast<int>(upper.size());
  if (d < 1 || d > 3) throw CapabilityError("log_mvn_cdf: deterministic rule supports dimension 1..3");
  if (cov.rows() != d || cov.cols() != d) throw DomainError("log_mvn_cdf: dimension mismatch");

  // Most restrictive coordinate first.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return upper(a) / std::sqrt(cov(a, a)) < upper(b) / std::sqrt(cov(b, b));
  });
  Eigen::VectorXd b(d);
  Eigen::MatrixXd c(d, d);
  for (int i = 0; i < d; ++i) {
    b(i) = upper(order[i]);
    for (int j = 0; j < d; ++j) c(i, j) = cov(order[i], order[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw StructureError("log_mvn_cdf: covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();

  const double log_e1 = log_ndtr(b(0) / l(0, 0));
  if (d == 1) return log_e1;

  const UnitRule& rule = unit_rule(opts.level);
  const std::size_t g = rule.nodes.size();
  std::vector<double> logs;
  logs.reserve(d == 2 ? g : g * g);
  for (std::size_t i = 0; i < g; ++i) {
    const double y1 = inverse_from_log(rule.nodes[i], log_e1);
    const double log_e2 = log_ndtr((b(1) - l(1, 0) * y1) / l(1, 1));
    if (d == 2) {
      logs.push_back(rule.log_weights[i] + log_e2);
      continue;
    }
    for (std::size_t k = 0; k < g; ++k) {
      const double y2 = inverse_from_log(rule.nodes[k], log_e2);
      const double log_e3 = log_ndtr((b(2) - l(2, 0) * y1 - l(2, 1) * y2) / l(2, 2));
      logs.push_back(rule.log_weights[i] + rule.log_weights[k] + log_e2 + log_e3);
    }
  }
  return log_e1 + log_sum_exp(logs);
}

double log_laplace_product_expectation_orthant(const Eigen::VectorXd& m, const Eigen::MatrixXd& v, double tau,
                                               const SovOptions& opts) {
  const int s = static_cast<int>(m.size());
  if (s < 1 || s > 3) throw CapabilityError("orthant decomposition supports dimension 1..3");
  struct Orthant {
    unsigned mask;
    double log_prefactor;
    double log_bound;
    Eigen::VectorXd upper;
  };
  std::vector<Orthant> orthants;
  for (unsigned mask = 0; mask < (1u << s); ++mask) {
    Eigen::VectorXd sigma(s);
    for (int j = 0; j < s; ++j) sigma(j) = ((mask >> j) & 1u) ? -1.0 : 1.0;
    const Eigen::VectorXd shifted = m - tau * (v * sigma);
    Orthant o;
    o.mask = mask;
    o.log_prefactor = -tau * sigma.dot(m) + 0.5 * tau * tau * sigma.dot(v * sigma);
    o.upper = sigma.cwiseProduct(shifted);
    double bound = 0.0;
    for (int j = 0; j < s; ++j) bound = std::min(bound, log_ndtr(o.upper(j) / std::sqrt(v(j, j))));
    o.log_bound = o.log_prefactor + bound;
    orthants.push_back(std::move(o));
  }
  std::sort(orthants.begin(), orthants.end(), [](const Orthant& a, const Orthant& b) { return a.log_bound > b.log_bound; });

  std::vector<double> terms;
  double best = kNegInf;
  for (const Orthant& o : orthants) {
    if (o.log_bound < best - kPruneNats) break;
    Eigen::VectorXd sigma(s);
    for (int j = 0; j < s; ++j) sigma(j) = ((o.mask >> j) & 1u) ? -1.0 : 1.0;
    const Eigen::MatrixXd cov = sigma.asDiagonal() * v * sigma.asDiagonal();
    const double t = o.log_prefactor + log_mvn_cdf(o.upper, cov, opts);
    terms.push_back(t);
    best = std::max(best, t);
  }
  return s * std::log(0.5 * tau) + log_sum_exp(terms);
}

double log_laplace_product_expectation_diagonal(const Eigen::VectorXd& m, const Eigen::VectorXd& var, double tau) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < m.size(); ++j) total += dists::log_gauss_laplace_expectation(m(j), var(j), tau);
  return total;
}

IsDiagnostics log_laplace_product_expectation_is(const Eigen::VectorXd& m, const Eigen::MatrixXd& v, double tau,
                                                 int n_draws, Rng& rng) {
  if (n_draws < 2) throw DomainError("importance sampling needs at least 2 draws");
  const int s = static_cast<int>(m.size());
  Eigen::LLT<Eigen::MatrixXd> llt(v);
  if (llt.info() != Eigen::Success) throw StructureError("proposal covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  // Proposal N(m - tau V s, V), s = sign(m): the Gaussian shifted by the
  // Laplace tilt, which cancels it exactly while the signs agree.
  Eigen::VectorXd sgn(s);
  for (int j = 0; j < s; ++j) sgn(j) = m(j) > 0.0 ? 1.0 : (m(j) < 0.0 ? -1.0 : 0.0);
  const Eigen::VectorXd mu = m - tau * (v * sgn);
  const Eigen::VectorXd lts = l.transpose() * sgn;
  const double correction = -0.5 * tau * tau * sgn.dot(v * sgn);
  std::normal_distribution<double> normal;
  std::vector<double> logw(n_draws);
  Eigen::VectorXd z(s);
  const double log_half_tau = std::log(0.5 * tau);
  for (int i = 0; i < n_draws; ++i) {
    for (int j = 0; j < s; ++j) z(j) = normal(rng);
    const Eigen::VectorXd theta = mu + l * z;
    logw[i] = s * log_half_tau - tau * theta.cwiseAbs().sum() + tau * lts.dot(z) + correction;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0, sum2 = 0.0;
  for (double lw : logw) {
    const double w = std::exp(lw - mx);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n_draws;
  const double var = std::max(sum2 / n_draws - mean * mean, 0.0);
  IsDiagnostics out;
  out.draws = n_draws;
  out.ess = sum * sum / sum2;
  out.estimate.log_value = mx + std::log(mean);
  out.estimate.se = std::sqrt(var / n_draws) / mean;
  return out;
}

bool is_diagonal(const Eigen::MatrixXd& v, double rel_tol) {
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      if (i != j && std::abs(v(i, j)) > rel_tol * std::sqrt(std::abs(v(i, i) * v(j, j)))) return false;
  return true;
}

}  // namespace ebayes::mvn
