#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Prior-decomposition calculus for the spike-and-slab prior: supports, the
/// mixing weights nu_lambda(S), the effective weight gamma(S), the sieve sum
/// bound, the chi-square tests and the slab ball-mass estimates.
namespace ebayes::decomp {

/// Subset S of {0, ..., p-1} (zero-based), strictly increasing.
class Support {
 public:
  Support() = default;
  Support(std::vector<int> indices, int p);

  static Support empty(int p) { return Support({}, p); }
  static Support from_mask(unsigned long long mask, int p);

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  int p() const { return p_; }
  bool contains(int j) const;
  Support united(const Support& other) const;

  friend bool operator==(const Support&, const Support&) = default;

 private:
  std::vector<int> indices_;
  int p_ = 0;
};

/// epsilon(S)^2 = |S| log p and delta(S) = 1.
struct RateMap {
  int p;
  double rate_sq(int s) const;
  double delta(const Support&) const { return 1.0; }
};

/// (1-lambda)^{p-s} lambda^s with 0^0 = 1.
double nu_lambda(int s, int p, double lambda);
double log_nu_lambda(int s, int p, double lambda);

/// log gamma(S) for |S| = s: log max_lambda nu_lambda(S) w(lambda), closed form.
/// Returns +inf when an exponent is negative (the weight is unbounded).
double effective_weight(int s, int p, double alpha, double beta);

/// Bounds on gamma_{s+1}/gamma_s used in the sieve-sum argument:
/// lower alpha/(e(p+beta-1)), upper e(alpha+p)/(beta-1).
struct RatioSandwich {
  double log_lower;
  double log_upper;
};
RatioSandwich gamma_ratio_sandwich(int p, double alpha, double beta);

struct SumLemmaResult {
  double log_sum = 0.0;
  double minimal_C4 = 0.0;
  /// Exponents implied by the alpha/beta assumptions: alpha/(e(p+beta-1)) = p^{-c1} and
  /// e(alpha+p)/(beta-1) = p^{-c2}; the assumption holds when c1 > c2 > 0.
  double c1_prime = 0.0;
  double c2_prime = 0.0;
  bool assumption_holds = false;
};

/// Exact log of sum_S gamma(S)/gamma(S*) exp(2 C2 |S| log p), grouped by |S|.
/// Throws CapabilityError for p > 40.
SumLemmaResult verify_sum_lemma(int p, double alpha, double beta, double C2, int s_star);

/// Same sum by full enumeration of all 2^p supports (p <= 20); test oracle.
double sum_lemma_by_enumeration(int p, double alpha, double beta, double C2, int s_star);

/// phi_S: ||(Y - theta*)_{S u S*}||^2 > 6 (|S| + |S*|) log p.
bool test_reject_sequence(const Eigen::VectorXd& y, const Eigen::VectorXd& theta_star, const Support& s,
                          const Support& s_star);

/// max over all S of phi_S, evaluated exactly by size: for each size the worst
/// case adds the largest squared residuals outside S*.
bool test_reject_sequence_max(const Eigen::VectorXd& y, const Eigen::VectorXd& theta_star, const Support& s_star);

struct MassEstimate {
  double mass;
  double se;
};

/// Monte Carlo estimate of Gamma_S({theta in Theta_S : ||theta - theta*||^2 <= eps_sq}),
/// Gamma_S the product Laplace measure on Theta_S. Requires n_mc >= 1000.
MassEstimate estimate_slab_ball_mass(const Support& s, const Eigen::VectorXd& theta_star, double eps_sq, double tau,
                                     int n_mc, Rng& rng);

}  // namespace ebayes::decomp
