#include "ebayes/slm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"

namespace ebayes::slm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Reduced {
  int ell = 0;
  double base = 0.0;      // Gaussian part: -(N-ell)/2 log 2pi - RSS/2 - logdet/2
  double log_norm = 0.0;  // elliptical Laplace normalizer
  Eigen::VectorXd c;      // R B_ls with M^T M = R^T R
};

bool full_rank(const Eigen::MatrixXd& gram) {
  if (gram.rows() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
}

Reduced reduce(const Eigen::VectorXd& y, const Eigen::MatrixXd& op, double tau) {
  if (op.rows() != y.size()) throw DomainError("structure operator rows must match the response length");
  if (!(tau > 0.0)) throw DomainError("elliptical Laplace rate must be positive");
  const Eigen::MatrixXd gram = op.transpose() * op;
  if (!full_rank(gram)) throw StructureError("structure operator is rank deficient");
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::VectorXd b = llt.solve(op.transpose() * y);
  const Eigen::MatrixXd l = llt.matrixL();
  Reduced r;
  r.ell = static_cast<int>(op.cols());
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double rss = (y - op * b).squaredNorm();
  r.base = -0.5 * (y.size() - r.ell) * kLog2Pi - 0.5 * rss - 0.5 * log_det;
  r.log_norm = dists::elliptical_laplace_log_normalizer(r.ell, tau, log_det);
  r.c = l.transpose() * b;
  return r;
}

std::uint64_t structure_seed(std::uint64_t master, const Structure& z, int salt) {
  std::vector<int> key;
  key.reserve(z.labels.size() + 2);
  key.push_back(salt);
  key.push_back(z.lambda_index);
  key.insert(key.end(), z.labels.begin(), z.labels.end());
  return derive_seed(master, key);
}

// Combined SE of a log-sum-exp from per-term SEs on the log scale.
double lse_se(const std::vector<double>& logs, const std::vector<double>& ses, double lse) {
  double v = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double w = std::exp(logs[i] - lse);
    v += w * w * ses[i] * ses[i];
  }
  return std::sqrt(v);
}

void require_spec_index(const StructureRegistry& reg, int lambda) {
  if (lambda < 0 || lambda >= static_cast<int>(reg.specs().size())) throw StructureError("unknown structure class");
}

// ---------------------------------------------------------------------------

class BiclusterRegistry final : public StructureRegistry {
 public:
  BiclusterRegistry(int n, int m, int k_max, int l_max) : n_(n), m_(m), k_max_(k_max), l_max_(l_max) {
    if (n < 1 || m < 1 || k_max < 1 || l_max < 1) throw DomainError("biclustering registry: sizes must be positive");
    for (int k = 1; k <= k_max; ++k)
      for (int l = 1; l <= l_max; ++l)
        specs_.push_back({"k" + std::to_string(k) + "_l" + std::to_string(l), k * l, n * std::log(k) + m * std::log(l)});
  }

  const std::vector<StructureSpec>& specs() const override { return specs_; }
  int response_size() const override { return n_ * m_; }
  double log_enumeration_size(int lambda) const override {
    require_spec_index(*this, lambda);
    return specs_[lambda].log_count;
  }

  void for_each_structure(int lambda, const std::function<void(const Structure&)>& visit) const override {
    require_spec_index(*this, lambda);
    const auto [k, l] = kl(lambda);
    Structure z{lambda, std::vector<int>(n_ + m_, 0)};
    for (;;) {
      visit(z);
      int pos = 0;
      for (; pos < n_ + m_; ++pos) {
        const int base = pos < n_ ? k : l;
        if (++z.labels[pos] < base) break;
        z.labels[pos] = 0;
      }
      if (pos == n_ + m_) return;
    }
  }

  Structure random_structure(int lambda, Rng& rng) const override {
    require_spec_index(*this, lambda);
    const auto [k, l] = kl(lambda);
    Structure z{lambda, std::vector<int>(n_ + m_)};
    std::uniform_int_distribution<int> rk(0, k - 1), rl(0, l - 1);
    for (int i = 0; i < n_; ++i) z.labels[i] = rk(rng);
    for (int j = 0; j < m_; ++j) z.labels[n_ + j] = rl(rng);
    return z;
  }

  std::vector<Structure> neighbours(const Structure& z) const override {
    check_member(z);
    const auto [k, l] = kl(z.lambda_index);
    std::vector<Structure> out;
    for (int pos = 0; pos < n_ + m_; ++pos) {
      const int base = pos < n_ ? k : l;
      for (int v = 0; v < base; ++v) {
        if (v == z.labels[pos]) continue;
        Structure nb = z;
        nb.labels[pos] = v;
        out.push_back(std::move(nb));
      }
    }
    return out;
  }

  std::optional<Eigen::MatrixXd> op(const Structure& z) const override {
    check_member(z);
    const auto [k, l] = kl(z.lambda_index);
    if (used(z, 0, n_, k) < k || used(z, n_, m_, l) < l) return std::nullopt;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_ * m_, k * l);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) x(i * m_ + j, z.labels[i] * l + z.labels[n_ + j]) = 1.0;
    return x;
  }

  void check_member(const Structure& z) const override {
    require_spec_index(*this, z.lambda_index);
    if (static_cast<int>(z.labels.size()) != n_ + m_) throw StructureError("biclustering structure has the wrong label count");
    const auto [k, l] = kl(z.lambda_index);
    for (int pos = 0; pos < n_ + m_; ++pos) {
      const int base = pos < n_ ? k : l;
      if (z.labels[pos] < 0 || z.labels[pos] >= base) throw StructureError("biclustering label out of range");
    }
  }

  Structure canonical(const Structure& z) const override {
    Structure c = z;
    relabel(c.labels, 0, n_);
    relabel(c.labels, n_, m_);
    return c;
  }

  double log_orbit_size(const Structure& z) const override {
    const auto [k, l] = kl(z.lambda_index);
    const int ur = used(z, 0, n_, k), uc = used(z, n_, m_, l);
    return std::lgamma(k + 1.0) - std::lgamma(k - ur + 1.0) + std::lgamma(l + 1.0) - std::lgamma(l - uc + 1.0);
  }

 private:
  std::pair<int, int> kl(int lambda) const { return {lambda / l_max_ + 1, lambda % l_max_ + 1}; }

  static int used(const Structure& z, int start, int len, int base) {
    std::vector<char> seen(base, 0);
    for (int i = start; i < start + len; ++i) seen[z.labels[i]] = 1;
    return static_cast<int>(std::count(seen.begin(), seen.end(), 1));
  }

  static void relabel(std::vector<int>& labels, int start, int len) {
    std::vector<int> map;
    for (int i = start; i < start + len; ++i) {
      const int v = labels[i];
      if (v >= static_cast<int>(map.size())) map.resize(v + 1, -1);
      if (map[v] < 0) map[v] = *std::max_element(map.begin(), map.end()) + 1;
      labels[i] = map[v];
    }
  }

  int n_, m_, k_max_, l_max_;
  std::vector<StructureSpec> specs_;
};

// Shared by sparse regression (tasks = 1) and multi-task regression.
class SupportRegistry final : public StructureRegistry {
 public:
  SupportRegistry(Eigen::MatrixXd x, int tasks, int s_max) : x_(std::move(x)), tasks_(tasks) {
    const int p = static_cast<int>(x_.cols());
    if (p < 1 || x_.rows() < 1) throw DomainError("support registry: empty design");
    if (tasks < 1) throw DomainError("support registry: task count must be positive");
    if (s_max < 1) throw DomainError("support registry: s_max must be >= 1");
    s_max = std::min(s_max, p);
    for (int s = 1; s <= s_max; ++s) specs_.push_back({"s" + std::to_string(s), tasks * s, log_binomial(p, s)});
  }

  const std::vector<StructureSpec>& specs() const override { return specs_; }
  int response_size() const override { return static_cast<int>(x_.rows()) * tasks_; }
  double log_enumeration_size(int lambda) const override {
    require_spec_index(*this, lambda);
    return specs_[lambda].log_count;
  }

  void for_each_structure(int lambda, const std::function<void(const Structure&)>& visit) const override {
    require_spec_index(*this, lambda);
    const int s = lambda + 1, p = static_cast<int>(x_.cols());
    Structure z{lambda, std::vector<int>(s)};
    std::iota(z.labels.begin(), z.labels.end(), 0);
    for (;;) {
      visit(z);
      int i = s - 1;
      while (i >= 0 && z.labels[i] == p - s + i) --i;
      if (i < 0) return;
      ++z.labels[i];
      for (int j = i + 1; j < s; ++j) z.labels[j] = z.labels[j - 1] + 1;
    }
  }

  Structure random_structure(int lambda, Rng& rng) const override {
    require_spec_index(*this, lambda);
    const int s = lambda + 1, p = static_cast<int>(x_.cols());
    std::vector<int> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < s; ++i) {
      std::uniform_int_distribution<int> pick(i, p - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(s);
    std::sort(idx.begin(), idx.end());
    return {lambda, idx};
  }

  std::vector<Structure> neighbours(const Structure& z) const override {
    check_member(z);
    const int p = static_cast<int>(x_.cols());
    std::vector<Structure> out;
    for (std::size_t i = 0; i < z.labels.size(); ++i) {
      for (int j = 0; j < p; ++j) {
        if (std::binary_search(z.labels.begin(), z.labels.end(), j)) continue;
        Structure nb = z;
        nb.labels[i] = j;
        std::sort(nb.labels.begin(), nb.labels.end());
        out.push_back(std::move(nb));
      }
    }
    return out;
  }

  std::optional<Eigen::MatrixXd> op(const Structure& z) const override {
    check_member(z);
    const int s = static_cast<int>(z.labels.size());
    const Eigen::Index n = x_.rows();
    Eigen::MatrixXd xs(n, s);
    for (int c = 0; c < s; ++c) xs.col(c) = x_.col(z.labels[c]);
    if (!full_rank(xs.transpose() * xs)) return std::nullopt;
    if (tasks_ == 1) return xs;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * tasks_, s * tasks_);
    for (int t = 0; t < tasks_; ++t) out.block(t * n, t * s, n, s) = xs;
    return out;
  }

  void check_member(const Structure& z) const override {
    require_spec_index(*this, z.lambda_index);
    const int p = static_cast<int>(x_.cols());
    if (static_cast<int>(z.labels.size()) != z.lambda_index + 1) throw StructureError("support size does not match its class");
    for (std::size_t i = 0; i < z.labels.size(); ++i) {
      if (z.labels[i] < 0 || z.labels[i] >= p) throw StructureError("support index out of range");
      if (i > 0 && z.labels[i] <= z.labels[i - 1]) throw StructureError("support indices must be strictly increasing");
    }
  }

 private:
  Eigen::MatrixXd x_;
  int tasks_;
  std::vector<StructureSpec> specs_;
};

// Steepest ascent on the profile score; returns the local mode.
Structure climb(const Eigen::VectorXd& y, const StructureRegistry& reg, Structure z, double tau, int max_moves) {
  double cur = profile_score(y, *reg.op(z), tau);
  for (int move = 0; move < max_moves; ++move) {
    double best = cur;
    std::optional<Structure> next;
    for (Structure& nb : reg.neighbours(z)) {
      const auto x = reg.op(nb);
      if (!x) continue;
      const double v = profile_score(y, *x, tau);
      if (v > best + 1e-12) {
        best = v;
        next = std::move(nb);
      }
    }
    if (!next) break;
    z = std::move(*next);
    cur = best;
  }
  return z;
}

}  // namespace

void StructureSpec::validate() const {
  if (ell < 1) throw DomainError("structure spec: ell must be >= 1");
  if (!(log_count >= 0.0) || !std::isfinite(log_count)) throw DomainError("structure spec: log_count must be finite and >= 0");
}

void SLMConfig::validate() const {
  if (!(D > 0.0) || !std::isfinite(D)) throw DomainError("SLM config: D must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("SLM config: tau must be positive");
}

double epsilon_sq(const StructureSpec& spec) {
  spec.validate();
  return spec.ell + spec.log_count;
}

double log_weight_slm(const StructureSpec& spec, const SLMConfig& cfg) {
  cfg.validate();
  return std::lgamma(static_cast<double>(spec.ell)) - std::lgamma(0.5 * spec.ell) - cfg.D * epsilon_sq(spec);
}

ComplexityCheck check_complexity_condition(const std::vector<StructureSpec>& specs) {
  std::vector<int> bins;
  for (const StructureSpec& s : specs) {
    const int t = static_cast<int>(std::ceil(epsilon_sq(s)));
    if (t >= static_cast<int>(bins.size())) bins.resize(t + 1, 0);
    ++bins[t];
  }
  ComplexityCheck out;
  for (int t = 1; t < static_cast<int>(bins.size()); ++t) {
    if (bins[t] > t) {
      out.holds = false;
      out.offending_t.push_back(t);
    }
  }
  return out;
}

ComplexityCheck check_complexity_condition(const StructureRegistry& registry) {
  return check_complexity_condition(registry.specs());
}

MarginalEstimate log_marginal_structure(const Eigen::VectorXd& y, const Eigen::MatrixXd& op, double tau, int n_is,
                                        Rng& rng) {
  if (n_is < 2) throw DomainError("log_marginal_structure: n_is must be >= 2");
  const Reduced r = reduce(y, op, tau);
  // With B = B_ls + R^{-1} z, z ~ N(0, I), the integrand weight is exp(-tau ||c + z||).
  // Proposal: an equal mixture of N(mu, I), mu = -c min(1, tau/||c||) the mode of the
  // tilted density, and the isotropic Laplace exp(-tau ||c + z||) / K itself. The first
  // component serves a prior wider than the likelihood, the second a narrower one.
  const int ell = r.ell;
  const double cn = r.c.norm();
  const Eigen::VectorXd mu = cn > 0.0 ? Eigen::VectorXd(-r.c * std::min(1.0, tau / cn)) : Eigen::VectorXd::Zero(ell);
  const double log_k = std::log(2.0) + 0.5 * ell * std::log(M_PI) + std::lgamma(ell) - std::lgamma(0.5 * ell) -
                       ell * std::log(tau);
  const double half_log_2pi = 0.5 * ell * std::log(2.0 * M_PI);
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> radius(ell, 1.0 / tau);
  std::bernoulli_distribution pick;
  std::vector<double> logw(n_is);
  Eigen::VectorXd z(ell);
  for (int i = 0; i < n_is; ++i) {
    if (pick(rng)) {
      for (int j = 0; j < ell; ++j) z(j) = mu(j) + normal(rng);
    } else {
      for (int j = 0; j < ell; ++j) z(j) = normal(rng);
      z *= radius(rng) / z.norm();
      z -= r.c;
    }
    const double laplace = -tau * (r.c + z).norm();
    const double log_q = log_sum_exp(std::array{-0.5 * (z - mu).squaredNorm() - half_log_2pi, laplace - log_k}) - std::log(2.0);
    logw[i] = -0.5 * z.squaredNorm() - half_log_2pi + laplace - log_q;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0, sum2 = 0.0;
  for (double lw : logw) {
    const double w = std::exp(lw - mx);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n_is;
  MarginalEstimate out;
  out.estimate = r.base + r.log_norm + mx + std::log(mean);
  out.se = std::sqrt(std::max(sum2 / n_is - mean * mean, 0.0) / n_is) / mean;
  out.ess = sum * sum / sum2;
  if (out.ess < n_is / 20.0)
    throw PrecisionError("structure marginal: importance-sampling ESS below n_is/20", out.estimate, out.se);
  return out;
}

double profile_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& op, double tau) {
  const Reduced r = reduce(y, op, tau);
  return r.base + r.log_norm - tau * r.c.norm();
}

SelectionResult eb_select_lambda(const Eigen::VectorXd& y, const StructureRegistry& registry, const SLMConfig& cfg,
                                 const SelectOptions& opts) {
  cfg.validate();
  if (y.size() != registry.response_size()) throw DomainError("response length does not match the registry");
  const auto& specs = registry.specs();
  if (specs.empty()) throw DomainError("registry has no structure classes");

  SelectionResult res;
  for (int lam = 0; lam < static_cast<int>(specs.size()); ++lam) {
    LambdaScore sc;
    sc.lambda_index = lam;
    sc.log_weight = log_weight_slm(specs[lam], cfg);
    std::vector<double> logs, ses;
    auto add = [&](const Structure& z, const Eigen::MatrixXd& x, double log_mult) {
      Rng rng(structure_seed(opts.seed, z, 0));
      const MarginalEstimate e = log_marginal_structure(y, x, cfg.tau, opts.n_is, rng);
      logs.push_back(e.estimate + log_mult);
      ses.push_back(e.se);
      ++sc.structures;
    };

    const double log_enum = registry.log_enumeration_size(lam);
    double log_total;
    if (log_enum <= std::log(opts.exact_budget) + 1e-9) {
      registry.for_each_structure(lam, [&](const Structure& z) {
        if (const auto x = registry.op(z)) add(z, *x, 0.0);
      });
      log_total = log_sum_exp(logs);
    } else if (opts.approximation == Approximation::kNone) {
      throw CapabilityError("structure class " + specs[lam].lambda_id + " exceeds the exact enumeration budget");
    } else if (opts.approximation == Approximation::kSubsample) {
      sc.approximate = true;
      Rng rng(derive_seed(opts.seed, std::vector<int>{-1, lam}));
      for (int i = 0; i < opts.n_subsample; ++i) {
        const Structure z = registry.random_structure(lam, rng);
        if (const auto x = registry.op(z)) add(z, *x, 0.0);
      }
      log_total = log_sum_exp(logs) - std::log(static_cast<double>(opts.n_subsample)) + log_enum;
    } else {
      sc.approximate = true;
      Rng rng(derive_seed(opts.seed, std::vector<int>{-2, lam}));
      std::set<Structure> visited;
      for (int start = 0; start < opts.n_starts; ++start) {
        Structure z = registry.random_structure(lam, rng);
        int tries = 0;
        while (!registry.op(z)) {
          if (++tries > 1000) throw StructureError("no full-rank structure found in class " + specs[lam].lambda_id);
          z = registry.random_structure(lam, rng);
        }
        const Structure mode = climb(y, registry, std::move(z), cfg.tau, opts.max_moves);
        visited.insert(registry.canonical(mode));
        for (const Structure& nb : registry.neighbours(mode))
          if (registry.op(nb)) visited.insert(registry.canonical(nb));
      }
      for (const Structure& z : visited) add(z, *registry.op(z), registry.log_orbit_size(z));
      log_total = log_sum_exp(logs);
    }
    sc.se = logs.empty() ? 0.0 : lse_se(logs, ses, log_total);
    sc.log_mean_marginal = log_total - specs[lam].log_count;
    sc.score = sc.log_weight + sc.log_mean_marginal;
    res.approximate = res.approximate || sc.approximate;
    res.scores.push_back(sc);
  }

  std::vector<int> order(specs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (res.scores[a].score != res.scores[b].score) return res.scores[a].score > res.scores[b].score;
    return epsilon_sq(specs[a]) < epsilon_sq(specs[b]);
  });
  res.lambda_hat = order[0];
  if (order.size() > 1) {
    const LambdaScore& a = res.scores[order[0]];
    const LambdaScore& b = res.scores[order[1]];
    res.unstable = a.score - b.score < 3.0 * std::hypot(a.se, b.se);
  }
  return res;
}

double effective_weight_slm(const Structure& z, const StructureRegistry& registry, const SLMConfig& cfg) {
  registry.check_member(z);
  const StructureSpec& spec = registry.specs()[z.lambda_index];
  return log_weight_slm(spec, cfg) - spec.log_count;
}

SieveSumCheck slm_sieve_sum(const std::vector<StructureSpec>& specs, const SLMConfig& cfg, double C2, int lambda_star) {
  cfg.validate();
  if (lambda_star < 0 || lambda_star >= static_cast<int>(specs.size())) throw DomainError("slm_sieve_sum: lambda_star out of range");
  const double eps_star = epsilon_sq(specs[lambda_star]);
  std::vector<double> terms;
  for (const StructureSpec& s : specs) terms.push_back((2.0 * C2 - cfg.D) * epsilon_sq(s));
  SieveSumCheck out;
  out.log_sum = log_sum_exp(terms) + cfg.D * eps_star + specs[lambda_star].log_count;
  out.log_bound = (cfg.D + 1.0) * eps_star + 1.0;
  out.holds = out.log_sum <= out.log_bound;
  return out;
}

std::unique_ptr<StructureRegistry> make_biclustering_registry(int n, int m, int k_max, int l_max) {
  return std::make_unique<BiclusterRegistry>(n, m, k_max, l_max);
}

std::unique_ptr<StructureRegistry> make_sparse_regression_registry(const Eigen::MatrixXd& x, int s_max) {
  return std::make_unique<SupportRegistry>(x, 1, s_max);
}

std::unique_ptr<StructureRegistry> make_multitask_registry(const Eigen::MatrixXd& x, int m, int s_max) {
  return std::make_unique<SupportRegistry>(x, m, s_max);
}

BiclusterInstance simulate_bicluster(int n, int m, int k, int l, double separation, int l_max, Rng& rng) {
  if (k < 1 || l < 1 || k > n || l > m || l > l_max) throw DomainError("simulate_bicluster: invalid cluster counts");
  auto balanced = [&rng](int size, int groups) {
    std::vector<int> z(size);
    for (int i = 0; i < size; ++i) z[i] = i % groups;
    std::shuffle(z.begin(), z.end(), rng);
    return z;
  };
  BiclusterInstance inst;
  inst.truth.lambda_index = (k - 1) * l_max + (l - 1);
  inst.truth.labels = balanced(n, k);
  const std::vector<int> cols = balanced(m, l);
  inst.truth.labels.insert(inst.truth.labels.end(), cols.begin(), cols.end());
  inst.block_means.resize(k, l);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < l; ++b) inst.block_means(a, b) = separation * ((a + b) % 2);
  std::normal_distribution<double> normal;
  inst.y.resize(n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      inst.y(i * m + j) = inst.block_means(inst.truth.labels[i], inst.truth.labels[n + j]) + normal(rng);
  return inst;
}

}  // namespace ebayes::slm
