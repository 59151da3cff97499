#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebayes/numeric.hpp"

/// Structured linear models Y ~ N(X_Z B, I_N): a discrete structure Z from a
/// class Z_lambda, an elliptical Laplace prior on B in R^ell, and the
/// gamma-ratio weight on lambda.
namespace ebayes::slm {

struct StructureSpec {
  std::string lambda_id;
  int ell = 1;
  /// log |Z_lambda|, the nominal class size.
  double log_count = 0.0;

  void validate() const;
};

struct SLMConfig {
  double D = 4.0;
  double tau = 1.0;

  void validate() const;
};

/// ell + log_count.
double epsilon_sq(const StructureSpec& spec);

/// log Gamma(ell) - log Gamma(ell/2) - D epsilon^2.
double log_weight_slm(const StructureSpec& spec, const SLMConfig& cfg);

/// A concrete structure: the owning class and family-specific integer labels.
struct Structure {
  int lambda_index = 0;
  std::vector<int> labels;

  friend bool operator==(const Structure&, const Structure&) = default;
  friend auto operator<=>(const Structure&, const Structure&) = default;
};

class StructureRegistry {
 public:
  virtual ~StructureRegistry() = default;

  virtual const std::vector<StructureSpec>& specs() const = 0;
  /// Length N of the response vector.
  virtual int response_size() const = 0;
  /// log of the number of labelings visited by for_each_structure(lambda).
  virtual double log_enumeration_size(int lambda) const = 0;
  virtual void for_each_structure(int lambda, const std::function<void(const Structure&)>& visit) const = 0;
  /// Uniform draw from the enumerated labelings of class lambda (may be degenerate).
  virtual Structure random_structure(int lambda, Rng& rng) const = 0;
  /// Structures differing from z in one label, same class.
  virtual std::vector<Structure> neighbours(const Structure& z) const = 0;
  /// Operator X_Z, or nullopt when it is rank deficient (excluded from the class).
  virtual std::optional<Eigen::MatrixXd> op(const Structure& z) const = 0;
  /// Throws StructureError when z is not a member of any class.
  virtual void check_member(const Structure& z) const = 0;

  /// Representative of z under relabelings that leave the marginal unchanged,
  /// and the log size of that orbit. Defaults: no symmetry.
  virtual Structure canonical(const Structure& z) const { return z; }
  virtual double log_orbit_size(const Structure&) const { return 0.0; }
};

struct ComplexityCheck {
  bool holds = true;
  std::vector<int> offending_t;
};

/// |{lambda : t-1 < epsilon^2 <= t}| <= t for every positive integer t.
ComplexityCheck check_complexity_condition(const std::vector<StructureSpec>& specs);
ComplexityCheck check_complexity_condition(const StructureRegistry& registry);

struct MarginalEstimate {
  double estimate = 0.0;
  double se = 0.0;
  double ess = 0.0;
};

/// log \int N(Y; M B, I) f(B) dB, f the elliptical Laplace density with operator M,
/// by importance sampling from N(B_ls, (M^T M)^{-1}). Throws StructureError for a
/// rank-deficient operator and PrecisionError when ESS < n_is / 20.
MarginalEstimate log_marginal_structure(const Eigen::VectorXd& y, const Eigen::MatrixXd& op, double tau, int n_is,
                                        Rng& rng);

/// Gaussian part of the marginal evaluated at the least-squares point:
/// log N-profile plus log f(B_ls). Cheap deterministic proxy for structure search.
double profile_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& op, double tau);

enum class Approximation {
  /// Exact enumeration only; classes over budget raise CapabilityError.
  kNone,
  /// Uniform subsampling of labelings with the count correction.
  kSubsample,
  /// Local search from several random starts, summing the marginals over the
  /// modes and their one-label neighbourhoods (a lower bound on the class sum).
  kModeSearch,
};

struct SelectOptions {
  int n_is = 2000;
  double exact_budget = 1e4;
  Approximation approximation = Approximation::kModeSearch;
  int n_subsample = 2000;
  int n_starts = 8;
  int max_moves = 200;
  std::uint64_t seed = 0;
};

struct LambdaScore {
  int lambda_index = 0;
  double log_weight = 0.0;
  /// log sum of marginals over the (visited) structures minus log_count.
  double log_mean_marginal = kNegInf;
  double se = 0.0;
  long long structures = 0;
  bool approximate = false;
  double score = kNegInf;
};

struct SelectionResult {
  int lambda_hat = 0;
  std::vector<LambdaScore> scores;
  /// Top-two score gap below three combined standard errors.
  bool unstable = false;
  bool approximate = false;
};

/// score(lambda) = log w(lambda) + log sum_Z marginal(Z) - log |Z_lambda|;
/// argmax, ties toward the smaller epsilon^2.
SelectionResult eb_select_lambda(const Eigen::VectorXd& y, const StructureRegistry& registry, const SLMConfig& cfg,
                                 const SelectOptions& opts = {});

/// log w(lambda) - log |Z_lambda| for the class owning z.
double effective_weight_slm(const Structure& z, const StructureRegistry& registry, const SLMConfig& cfg);

struct SieveSumCheck {
  double log_sum = 0.0;
  double log_bound = 0.0;
  bool holds = false;
};

/// log sum_lambda exp((2 C2 - D) eps_lambda^2 + D eps_*^2) |Z_*| against
/// (D + 1) eps_*^2 + 1, the form the sieve sum takes after the gamma factors cancel.
SieveSumCheck slm_sieve_sum(const std::vector<StructureSpec>& specs, const SLMConfig& cfg, double C2, int lambda_star);

/// Checkerboard means: rows and columns carry labels z1 in [k], z2 in [l] and
/// Y_{ij} = B_{z1(i) z2(j)} + noise, vectorized row-major (index i*m + j).
/// Classes (k, l) for k <= k_max, l <= l_max; lambda index (k-1)*l_max + (l-1).
std::unique_ptr<StructureRegistry> make_biclustering_registry(int n, int m, int k_max, int l_max);

/// Supports of size s = 1..s_max of the columns of X; ell = s.
std::unique_ptr<StructureRegistry> make_sparse_regression_registry(const Eigen::MatrixXd& x, int s_max);

/// m tasks sharing one support: vec(Y) with Y = X_S A + noise, A in R^{s x m};
/// ell = m s and the operator is I_m (x) X_S.
std::unique_ptr<StructureRegistry> make_multitask_registry(const Eigen::MatrixXd& x, int m, int s_max);

struct BiclusterInstance {
  Eigen::VectorXd y;
  Structure truth;
  Eigen::MatrixXd block_means;
};

/// Balanced random labelings with k and l groups, block means
/// separation * ((a + b) mod 2), unit Gaussian noise.
BiclusterInstance simulate_bicluster(int n, int m, int k, int l, double separation, int l_max, Rng& rng);

}  // namespace ebayes::slm
