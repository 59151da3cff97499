#include "ebayes/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"

namespace ebayes::decomp {

Support::Support(std::vector<int> indices, int p) : indices_(std::move(indices)), p_(p) {
  if (p < 0) throw DomainError("support: p must be nonnegative");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= p) throw DomainError("support: index out of range");
    if (i > 0 && indices_[i] <= indices_[i - 1]) throw DomainError("support: indices must be strictly increasing");
  }
}

Support Support::from_mask(unsigned long long mask, int p) {
  std::vector<int> idx;
  for (int j = 0; j < p; ++j)
    if ((mask >> j) & 1ULL) idx.push_back(j);
  return Support(std::move(idx), p);
}

bool Support::contains(int j) const { return std::binary_search(indices_.begin(), indices_.end(), j); }

Support Support::united(const Support& other) const {
  if (other.p_ != p_) throw DomainError("support: ambient dimensions differ");
  std::vector<int> out;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(), std::back_inserter(out));
  return Support(std::move(out), p_);
}

double RateMap::rate_sq(int s) const { return s * std::log(static_cast<double>(p)); }

double log_nu_lambda(int s, int p, double lambda) {
  if (s < 0 || s > p) throw DomainError("nu_lambda: need 0 <= s <= p");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("nu_lambda: lambda must lie in [0,1]");
  auto term = [](int k, double base) { return k == 0 ? 0.0 : (base == 0.0 ? kNegInf : k * std::log(base)); };
  return term(p - s, 1.0 - lambda) + term(s, lambda);
}

double nu_lambda(int s, int p, double lambda) { return std::exp(log_nu_lambda(s, p, lambda)); }

double effective_weight(int s, int p, double alpha, double beta) {
  if (s < 0 || s > p) throw DomainError("effective_weight: need 0 <= s <= p");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("effective_weight: alpha, beta must be positive");
  const double a = alpha + s - 1.0;
  const double b = p - s + beta - 1.0;
  const double c = p + alpha + beta - 2.0;
  if (!(c > 0.0)) throw DomainError("effective_weight: p + alpha + beta - 2 must be positive");
  if (a < 0.0 || b < 0.0) return kInf;
  return xlogy(a, a / c) + xlogy(b, b / c);
}

RatioSandwich gamma_ratio_sandwich(int p, double alpha, double beta) {
  return {std::log(alpha) - 1.0 - std::log(p + beta - 1.0), 1.0 + std::log(alpha + p) - std::log(beta - 1.0)};
}

namespace {

double sum_term(int p, int s, double alpha, double beta, double C2, double log_gamma_star) {
  return effective_weight(s, p, alpha, beta) - log_gamma_star + 2.0 * C2 * s * std::log(static_cast<double>(p));
}

}  // namespace

SumLemmaResult verify_sum_lemma(int p, double alpha, double beta, double C2, int s_star) {
  if (p < 1) throw DomainError("verify_sum_lemma: p must be >= 1");
  if (p > 40) throw CapabilityError("verify_sum_lemma: exact summation is limited to p <= 40");
  if (s_star < 0 || s_star > p) throw DomainError("verify_sum_lemma: need 0 <= s* <= p");
  const double log_gamma_star = effective_weight(s_star, p, alpha, beta);
  std::vector<double> terms;
  terms.reserve(p + 1);
  for (int s = 0; s <= p; ++s) terms.push_back(log_binomial(p, s) + sum_term(p, s, alpha, beta, C2, log_gamma_star));

  SumLemmaResult r;
  r.log_sum = log_sum_exp(terms);
  const double logp = std::log(static_cast<double>(p));
  if (s_star == 0)
    r.minimal_C4 = r.log_sum > 0.0 ? kInf : 0.0;
  else
    r.minimal_C4 = r.log_sum / (s_star * logp);

  const RatioSandwich sw = gamma_ratio_sandwich(p, alpha, beta);
  if (p > 1) {
    r.c1_prime = -sw.log_lower / logp;
    r.c2_prime = -sw.log_upper / logp;
  } else {
    r.c1_prime = r.c2_prime = std::numeric_limits<double>::quiet_NaN();
  }
  r.assumption_holds = p > 1 && beta > 1.0 && r.c1_prime > r.c2_prime && r.c2_prime > 0.0;
  return r;
}

double sum_lemma_by_enumeration(int p, double alpha, double beta, double C2, int s_star) {
  if (p > 20) throw CapabilityError("sum_lemma_by_enumeration: p <= 20");
  const double log_gamma_star = effective_weight(s_star, p, alpha, beta);
  std::vector<double> terms;
  terms.reserve(1ULL << p);
  for (unsigned long long mask = 0; mask < (1ULL << p); ++mask) {
    const int s = static_cast<int>(__builtin_popcountll(mask));
    terms.push_back(sum_term(p, s, alpha, beta, C2, log_gamma_star));
  }
  return log_sum_exp(terms);
}

bool test_reject_sequence(const Eigen::VectorXd& y, const Eigen::VectorXd& theta_star, const Support& s,
                          const Support& s_star) {
  if (y.size() != theta_star.size() || s.p() != y.size() || s_star.p() != y.size())
    throw DomainError("test_reject_sequence: dimension mismatch");
  const Support u = s.united(s_star);
  double stat = 0.0;
  for (int j : u.indices()) stat += (y(j) - theta_star(j)) * (y(j) - theta_star(j));
  const double logp = std::log(static_cast<double>(y.size()));
  return stat > 6.0 * (s.size() + s_star.size()) * logp;
}

bool test_reject_sequence_max(const Eigen::VectorXd& y, const Eigen::VectorXd& theta_star, const Support& s_star) {
  if (y.size() != theta_star.size() || s_star.p() != y.size()) throw DomainError("test_reject_sequence_max: dimension mismatch");
  const int p = static_cast<int>(y.size());
  const double logp = std::log(static_cast<double>(p));
  double base = 0.0;
  std::vector<double> outside;
  for (int j = 0; j < p; ++j) {
    const double r2 = (y(j) - theta_star(j)) * (y(j) - theta_star(j));
    if (s_star.contains(j))
      base += r2;
    else
      outside.push_back(r2);
  }
  std::sort(outside.begin(), outside.end(), std::greater<>());
  // For |S| = s the largest statistic takes the s largest residuals outside S*;
  // once those run out, extra indices of S fall inside S* and add nothing.
  double stat = base;
  for (int s = 0; s <= p; ++s) {
    if (s > 0 && s <= static_cast<int>(outside.size())) stat += outside[s - 1];
    if (stat > 6.0 * (s + s_star.size()) * logp) return true;
  }
  return false;
}

MassEstimate estimate_slab_ball_mass(const Support& s, const Eigen::VectorXd& theta_star, double eps_sq, double tau,
                                     int n_mc, Rng& rng) {
  if (n_mc < 1000) throw DomainError("estimate_slab_ball_mass: n_mc must be >= 1000");
  if (s.p() != theta_star.size()) throw DomainError("estimate_slab_ball_mass: dimension mismatch");
  double fixed = 0.0;
  for (int j = 0; j < s.p(); ++j)
    if (!s.contains(j)) fixed += theta_star(j) * theta_star(j);
  if (s.size() == 0) return {fixed <= eps_sq ? 1.0 : 0.0, 0.0};

  const dists::LaplaceSlab slab(tau);
  long hits = 0;
  for (int i = 0; i < n_mc; ++i) {
    double d2 = fixed;
    for (int j : s.indices()) {
      const double diff = slab.sample(rng) - theta_star(j);
      d2 += diff * diff;
    }
    if (d2 <= eps_sq) ++hits;
  }
  const double m = static_cast<double>(hits) / n_mc;
  return {m, std::sqrt(m * (1.0 - m) / n_mc)};
}

}  // namespace ebayes::decomp
