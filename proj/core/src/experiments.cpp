#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ebayes/bridge.hpp"
#include "ebayes/decomp.hpp"
#include "ebayes/dists.hpp"
#include "ebayes/errors.hpp"
#include "ebayes/numeric.hpp"
#include "ebayes/reg_eb.hpp"
#include "ebayes/seq_eb.hpp"
#include "ebayes/sieve_density.hpp"
#include "ebayes/slm.hpp"

namespace ebayes::harness::detail {

namespace {

using nlohmann::json;

double num(const Row& row, std::size_t i) {
  if (const auto* v = std::get_if<double>(&row.at(i))) return *v;
  if (const auto* v = std::get_if<long long>(&row.at(i))) return static_cast<double>(*v);
  throw std::logic_error("non-numeric cell");
}

const std::string& str(const Row& row, std::size_t i) { return std::get<std::string>(row.at(i)); }

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(const std::vector<double>& xs) { return quantile(xs, 0.5); }

json quantiles(const std::vector<double>& xs) {
  return {{"q10", quantile(xs, 0.1)}, {"q50", quantile(xs, 0.5)}, {"q90", quantile(xs, 0.9)}};
}

int positive_int(const ExperimentConfig& cfg, const std::string& key, long long fallback, long long lo = 1,
                 long long hi = 1'000'000'000) {
  const long long v = cfg.get_int(key, fallback);
  if (v < lo || v > hi)
    throw UsageError("config key '" + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double positive_double(const ExperimentConfig& cfg, const std::string& key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("config key '" + key + "' must be positive");
  return v;
}

std::vector<int> random_support(int p, int s, Rng& rng) {
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < s; ++i) {
    std::uniform_int_distribution<int> pick(i, p - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Eigen::VectorXd normal_vector(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- seq-contraction

struct SeqParams {
  std::vector<int> ps;
  int s_star;
  double signal_mult, alpha, beta_power, tau;

  explicit SeqParams(const ExperimentConfig& cfg) {
    if (cfg.has("p_values")) {
      for (double v : cfg.get_list("p_values")) {
        if (v != std::floor(v) || v < 1) throw UsageError("p_values must be positive integers");
        ps.push_back(static_cast<int>(v));
      }
    } else {
      ps.push_back(positive_int(cfg, "p", 500));
    }
    s_star = positive_int(cfg, "s_star", 10);
    for (int p : ps)
      if (s_star > p) throw UsageError("s_star must not exceed p");
    signal_mult = cfg.get_double("signal_mult", 6.0);
    alpha = positive_double(cfg, "alpha", 1.0);
    beta_power = cfg.get_double("beta_power", 3.0);
    tau = positive_double(cfg, "tau", 1.0);
  }
};

std::vector<Row> seq_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const SeqParams prm(cfg);
  std::vector<Row> rows;
  for (int p : prm.ps) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const double log_p = std::log(static_cast<double>(p));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    for (int j : random_support(p, prm.s_star, rng)) theta(j) = prm.signal_mult * std::sqrt(log_p);
    const Eigen::VectorXd y = theta + normal_vector(p, rng);
    const seq::SpikeSlabConfig sc{prm.alpha, std::pow(static_cast<double>(p), prm.beta_power), prm.tau};
    const seq::EBFit fit = seq::mmle(seq::SequenceData(y), sc);
    const double rate = prm.s_star * log_p;
    const double loss = (fit.post_mean - theta).squaredNorm();
    const double post_loss = seq::posterior_expected_loss(fit, theta);
    rows.push_back({static_cast<long long>(p), static_cast<long long>(prm.s_star), fit.lambda_hat,
                    fit.lambda_hat / (prm.s_star / static_cast<double>(p)), loss, loss / rate, post_loss,
                    post_loss / rate, fit.inclusion_prob.sum()});
  }
  return rows;
}

json seq_summarize(const ExperimentConfig& cfg, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  const SeqParams prm(cfg);
  std::map<int, std::vector<double>> loss, lam, post;
  std::vector<double> all_loss, all_lam;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      const int p = static_cast<int>(num(row, 0));
      loss[p].push_back(num(row, 5));
      lam[p].push_back(num(row, 3));
      post[p].push_back(num(row, 7));
      all_loss.push_back(num(row, 5));
      all_lam.push_back(num(row, 3));
    }
  json by_p = json::array();
  for (int p : prm.ps) {
    by_p.push_back({{"p", p},
                    {"median_loss_ratio", median(loss[p])},
                    {"loss_ratio_quantiles", quantiles(loss[p])},
                    {"median_posterior_loss_ratio", median(post[p])},
                    {"median_lambda_ratio", median(lam[p])},
                    {"lambda_ratio_quantiles", quantiles(lam[p])}});
    plot.rows.push_back({std::string("median_loss_ratio"), static_cast<double>(p), median(loss[p])});
    plot.rows.push_back({std::string("median_posterior_loss_ratio"), static_cast<double>(p), median(post[p])});
    plot.rows.push_back({std::string("median_lambda_ratio"), static_cast<double>(p), median(lam[p])});
  }
  return {{"median_loss_ratio", median(all_loss)},
          {"loss_ratio_quantiles", quantiles(all_loss)},
          {"median_lambda_ratio", median(all_lam)},
          {"by_p", by_p}};
}

// ---------------------------------------------------------------- reg-contraction

struct RegParams {
  int n, p, s_star, s_max, is_draws;
  double signal_mult, zeta, alpha, beta_power;

  explicit RegParams(const ExperimentConfig& cfg) {
    n = positive_int(cfg, "n", 100);
    p = positive_int(cfg, "p", 12, 1, 62);
    s_star = positive_int(cfg, "s_star", 2, 1, p);
    s_max = positive_int(cfg, "s_max", 4, 1, p);
    is_draws = positive_int(cfg, "is_draws", 10000, 100);
    signal_mult = cfg.get_double("signal_mult", 6.0);
    zeta = cfg.get_double("zeta", 1.0);
    alpha = positive_double(cfg, "alpha", 1.0);
    beta_power = cfg.get_double("beta_power", 3.0);
    try {
      (void)reg::enumeration_size(p, s_max);
    } catch (const CapabilityError& e) {
      throw UsageError(e.what());
    }
  }
};

std::vector<Row> reg_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const RegParams prm(cfg);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(prm.n, prm.p);
  for (int i = 0; i < x.size(); ++i) x(i) = normal(rng);
  const double log_p = std::log(static_cast<double>(prm.p));
  const std::vector<int> support = random_support(prm.p, prm.s_star, rng);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(prm.p);
  for (int j : support) theta(j) = prm.signal_mult * std::sqrt(log_p);
  const Eigen::VectorXd y = x * theta + normal_vector(prm.n, rng);
  const reg::RegressionData data(y, x);

  const double tau = reg::regression_tau(x, prm.zeta);
  const seq::SpikeSlabConfig sc{prm.alpha, std::pow(static_cast<double>(prm.p), prm.beta_power), tau};
  reg::MarginalOptions opts;
  opts.is_draws = prm.is_draws;
  opts.seed = derive_seed(seed, 1);
  const reg::RegressionEBFit fit = reg::mmle_regression(data, sc, prm.s_max, opts);

  const decomp::Support truth(support, prm.p);
  double truth_prob = 0.0;
  for (const auto& [s, prob] : fit.support_posterior)
    if (s == truth) truth_prob = prob;
  const bool top = !fit.support_posterior.empty() && fit.support_posterior.front().first == truth;
  const double loss = reg::prediction_loss(data, fit.post_mean, theta);
  return {{fit.lambda_hat, loss, loss / (prm.s_star * log_p), static_cast<long long>(top),
           fit.support_posterior.empty() ? 0.0 : fit.support_posterior.front().second, truth_prob,
           fit.truncation_bound, fit.max_marginal_se, tau}};
}

json reg_summarize(const ExperimentConfig&, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  std::vector<double> ratio;
  long long top = 0, done = 0;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      ratio.push_back(num(row, 2));
      top += static_cast<long long>(num(row, 3));
      ++done;
      plot.rows.push_back({std::string("loss_ratio"), static_cast<double>(rep.replicate), num(row, 2)});
    }
  return {{"median_loss_ratio", median(ratio)},
          {"loss_ratio_quantiles", quantiles(ratio)},
          {"top_rank_frequency", done ? static_cast<double>(top) / done : std::nan("")},
          {"pass_counts", {{"true_support_top_ranked", top}, {"total", done}}}};
}

// ---------------------------------------------------------------- slm-bicluster

struct SlmParams {
  int n, m, k_star, l_star, k_max, l_max, n_is, n_starts;
  double separation, D, tau;

  explicit SlmParams(const ExperimentConfig& cfg) {
    n = positive_int(cfg, "n", 12, 2);
    m = positive_int(cfg, "m", 12, 2);
    k_max = positive_int(cfg, "k_max", 3, 1, n);
    l_max = positive_int(cfg, "l_max", 3, 1, m);
    k_star = positive_int(cfg, "k_star", 2, 1, k_max);
    l_star = positive_int(cfg, "l_star", 2, 1, l_max);
    n_is = positive_int(cfg, "n_is", 2000, 100);
    n_starts = positive_int(cfg, "n_starts", 8);
    separation = cfg.get_double("separation", 4.0);
    D = positive_double(cfg, "D", 4.0);
    tau = positive_double(cfg, "tau", 1.0);
  }
};

std::vector<Row> slm_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const SlmParams prm(cfg);
  Rng rng(seed);
  const slm::BiclusterInstance inst =
      slm::simulate_bicluster(prm.n, prm.m, prm.k_star, prm.l_star, prm.separation, prm.l_max, rng);
  const auto registry = slm::make_biclustering_registry(prm.n, prm.m, prm.k_max, prm.l_max);
  slm::SelectOptions opts;
  opts.n_is = prm.n_is;
  opts.n_starts = prm.n_starts;
  opts.seed = derive_seed(seed, 1);
  const slm::SelectionResult res = slm::eb_select_lambda(inst.y, *registry, slm::SLMConfig{prm.D, prm.tau}, opts);
  std::vector<double> sorted;
  for (const auto& s : res.scores) sorted.push_back(s.score);
  std::sort(sorted.rbegin(), sorted.rend());
  const int k_hat = res.lambda_hat / prm.l_max + 1;
  const int l_hat = res.lambda_hat % prm.l_max + 1;
  const bool correct = k_hat == prm.k_star && l_hat == prm.l_star;
  return {{static_cast<long long>(k_hat), static_cast<long long>(l_hat), static_cast<long long>(correct),
           static_cast<long long>(res.unstable), static_cast<long long>(res.approximate),
           sorted.size() > 1 ? sorted[0] - sorted[1] : kInf}};
}

json slm_summarize(const ExperimentConfig& cfg, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  const SlmParams prm(cfg);
  std::map<std::pair<int, int>, int> counts;
  long long correct = 0, done = 0;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      ++counts[{static_cast<int>(num(row, 0)), static_cast<int>(num(row, 1))}];
      correct += static_cast<long long>(num(row, 2));
      ++done;
    }
  std::pair<int, int> modal{0, 0};
  int modal_count = 0;
  json freq = json::array();
  for (const auto& [kl, c] : counts) {
    if (c > modal_count) modal = kl, modal_count = c;
    freq.push_back({{"k", kl.first}, {"l", kl.second}, {"count", c}});
    plot.rows.push_back({std::string("selection_count"), static_cast<double>((kl.first - 1) * prm.l_max + kl.second - 1),
                         static_cast<double>(c)});
  }
  const auto registry = slm::make_biclustering_registry(prm.n, prm.m, prm.k_max, prm.l_max);
  const slm::ComplexityCheck cc = slm::check_complexity_condition(*registry);
  return {{"pass_counts", {{"correct", correct}, {"total", done}}},
          {"modal_selection", {modal.first, modal.second}},
          {"modal_count", modal_count},
          {"selection_counts", freq},
          {"complexity_condition_holds", cc.holds}};
}

// ---------------------------------------------------------------- sieve-rate

struct SieveParams {
  std::vector<int> ns;
  int truth_coords, k_max, n_draws, quad_nodes;
  double truth_decay, sigma2, tau_pois, smoothness;

  explicit SieveParams(const ExperimentConfig& cfg) {
    for (double v : cfg.get_list("n_values", {500, 1000, 2000, 4000})) {
      if (v != std::floor(v) || v < 1) throw UsageError("n_values must be positive integers");
      ns.push_back(static_cast<int>(v));
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    truth_coords = positive_int(cfg, "truth_coords", 20);
    k_max = positive_int(cfg, "k_max", 50);
    n_draws = positive_int(cfg, "n_draws", 200);
    quad_nodes = positive_int(cfg, "quad_nodes", 512, 256);
    truth_decay = cfg.get_double("truth_decay", 1.5);
    sigma2 = positive_double(cfg, "sigma2", 1.0);
    tau_pois = positive_double(cfg, "tau_pois", 1.0);
    smoothness = positive_double(cfg, "smoothness", 1.0);
  }

  Eigen::VectorXd truth() const {
    Eigen::VectorXd t(truth_coords);
    for (int j = 1; j <= truth_coords; ++j) t(j - 1) = std::pow(static_cast<double>(j), -truth_decay);
    return t;
  }
};

std::vector<Row> sieve_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const SieveParams prm(cfg);
  const Eigen::VectorXd theta = prm.truth();
  Rng rng(seed);
  const sieve::SieveData full(sieve::sample_density(theta, prm.ns.back(), rng), prm.k_max);
  const sieve::ExpFamilyModel truth(theta, 2048);
  const auto f = [&](double x) { return std::exp(truth.log_density(x)); };
  const sieve::SievePriorConfig pc{prm.sigma2, prm.tau_pois, prm.k_max};
  sieve::MarginalOptions opts;
  opts.quad_nodes = prm.quad_nodes;

  std::vector<Row> rows;
  for (int n : prm.ns) {
    const sieve::SieveData data = full.head(n);
    const sieve::SieveFit fit =
        sieve::select_k_and_fit(data, pc, derive_seed(seed, static_cast<std::uint64_t>(n)), prm.n_draws, opts);
    const sieve::ExpFamilyModel map(fit.map_theta, 2048);
    const double h2 = fit.hellinger_sq_to(f);
    const double h2_map = sieve::hellinger_sq(f, [&](double x) { return std::exp(map.log_density(x)); });
    const double rate = std::pow(static_cast<double>(n), -2.0 * prm.smoothness / (2.0 * prm.smoothness + 1.0));
    rows.push_back({static_cast<long long>(n), static_cast<long long>(fit.k_hat), h2, h2_map, h2 / rate});
  }
  return rows;
}

json sieve_summarize(const ExperimentConfig& cfg, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  const SieveParams prm(cfg);
  std::map<int, std::vector<double>> h2, k_hat, ratio;
  long long monotone = 0, complete = 0;
  for (const auto& rep : reps) {
    if (rep.failed) continue;
    ++complete;
    bool nondecreasing = true;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const int n = static_cast<int>(num(rep.rows[i], 0));
      h2[n].push_back(num(rep.rows[i], 2));
      k_hat[n].push_back(num(rep.rows[i], 1));
      ratio[n].push_back(num(rep.rows[i], 4));
      if (i > 0 && num(rep.rows[i], 1) < num(rep.rows[i - 1], 1)) nondecreasing = false;
    }
    monotone += nondecreasing;
  }
  json by_n = json::array();
  std::vector<double> medians, all_ratio;
  for (int n : prm.ns) {
    medians.push_back(median(h2[n]));
    all_ratio.insert(all_ratio.end(), ratio[n].begin(), ratio[n].end());
    by_n.push_back({{"n", n},
                    {"median_hellinger_sq", medians.back()},
                    {"hellinger_sq_quantiles", quantiles(h2[n])},
                    {"median_k_hat", median(k_hat[n])}});
    plot.rows.push_back({std::string("median_hellinger_sq"), static_cast<double>(n), medians.back()});
    plot.rows.push_back({std::string("median_k_hat"), static_cast<double>(n), median(k_hat[n])});
  }
  bool decreasing = !medians.empty();
  for (std::size_t i = 1; i < medians.size(); ++i) decreasing = decreasing && medians[i] < medians[i - 1];
  return {{"median_loss_ratio", median(all_ratio)},
          {"by_n", by_n},
          {"median_hellinger_strictly_decreasing", decreasing},
          {"pass_counts", {{"k_hat_nondecreasing", monotone}, {"total", complete}}}};
}

// ---------------------------------------------------------------- lemma-suite

struct LemmaParams {
  int chi2_draws, mass_draws;

  explicit LemmaParams(const ExperimentConfig& cfg) {
    chi2_draws = positive_int(cfg, "chi2_draws", 100000, 1000);
    mass_draws = positive_int(cfg, "mass_draws", 20000, 1000);
  }
};

Row lemma_row(const std::string& lemma, const std::string& params, double value, double bound, bool pass) {
  return {lemma, params, value, bound, static_cast<long long>(pass)};
}

std::vector<Row> lemma_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const LemmaParams prm(cfg);
  std::vector<Row> rows;

  for (int p : {8, 12, 16}) {
    const double beta = std::pow(static_cast<double>(p), 4);
    for (int s = 0; s <= p; ++s) {
      const decomp::SumLemmaResult r = decomp::verify_sum_lemma(p, 1.0, beta, 1.0, s);
      const double bound = s == 0 ? 2.0 : 12.0 * s * std::log(static_cast<double>(p));
      rows.push_back(lemma_row("sum", "p=" + std::to_string(p) + ";s_star=" + std::to_string(s), r.log_sum, bound,
                               r.log_sum <= bound));
    }
  }

  for (int p : {8, 12})
    for (int s : {0, 2}) {
      const double beta = std::pow(static_cast<double>(p), 4);
      const double diff = std::abs(decomp::verify_sum_lemma(p, 1.0, beta, 1.0, s).log_sum -
                                   decomp::sum_lemma_by_enumeration(p, 1.0, beta, 1.0, s));
      rows.push_back(lemma_row("sum-enumeration", "p=" + std::to_string(p) + ";s_star=" + std::to_string(s), diff,
                               1e-9, diff <= 1e-9));
    }

  for (int p : {8, 12, 16}) {
    const double beta = std::pow(static_cast<double>(p), 4);
    const decomp::RatioSandwich sw = decomp::gamma_ratio_sandwich(p, 1.0, beta);
    double slack = kInf;
    for (int s = 0; s < p; ++s) {
      const double r = decomp::effective_weight(s + 1, p, 1.0, beta) - decomp::effective_weight(s, p, 1.0, beta);
      slack = std::min({slack, r - sw.log_lower, sw.log_upper - r});
    }
    rows.push_back(lemma_row("gamma-ratio-sandwich", "p=" + std::to_string(p), slack, 0.0, slack >= -1e-12));
  }

  {
    Rng rng(derive_seed(seed, 1));
    std::normal_distribution<double> normal;
    const std::pair<int, double> cases[] = {{2, 10.0}, {3, 12.0}, {5, 20.0}};
    for (const auto& [d, t] : cases) {
      long long hits = 0;
      for (int i = 0; i < prm.chi2_draws; ++i) {
        double q = 0.0;
        for (int j = 0; j < d; ++j) {
          const double z = normal(rng);
          q += z * z;
        }
        hits += q > t;
      }
      const double freq = static_cast<double>(hits) / prm.chi2_draws;
      const double se = std::sqrt(std::max(freq * (1 - freq), 1.0 / prm.chi2_draws) / prm.chi2_draws);
      const double bound = dists::chi2_tail_bound(d, t);
      rows.push_back(lemma_row("chi2-tail", "d=" + std::to_string(d) + ";t=" + fmt(t), freq, bound,
                               freq <= bound + 3.0 * se));
    }
  }

  {
    Rng rng(derive_seed(seed, 2));
    const int p = 6;
    const double log_p = std::log(6.0);
    const decomp::Support s_star({0}, p);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    theta(0) = 1.0;
    const decomp::MassEstimate denom = decomp::estimate_slab_ball_mass(s_star, theta, log_p, 1.0, prm.mass_draws, rng);
    const std::vector<std::vector<int>> supports = {{0}, {0, 1}, {1}, {1, 2}, {0, 1, 2}};
    for (const auto& idx : supports)
      for (double mult : {1.0, 2.0, 4.0, 8.0}) {
        const decomp::Support s(idx, p);
        const double eps_sq = mult * log_p;
        const decomp::MassEstimate num_mass = decomp::estimate_slab_ball_mass(s, theta, eps_sq, 1.0, prm.mass_draws, rng);
        const double log_ratio = std::log(num_mass.mass) - std::log(denom.mass);
        const double bound = eps_sq / 6.0 + 5.0 * (s.size() + 1) * log_p;
        std::string name = "S=";
        for (std::size_t i = 0; i < idx.size(); ++i) name += (i ? "+" : "") + std::to_string(idx[i]);
        rows.push_back(lemma_row("slab-mass-ratio", name + ";eps_sq=" + fmt(mult) + "log6", log_ratio, bound,
                                 log_ratio <= bound));
      }
  }

  {
    const auto bic = slm::make_biclustering_registry(12, 12, 3, 3);
    const slm::ComplexityCheck a = slm::check_complexity_condition(*bic);
    rows.push_back(lemma_row("slm-complexity", "biclustering;n=12;m=12;k_max=3;l_max=3",
                             static_cast<double>(a.offending_t.size()), 0.0, a.holds));
    Rng rng(derive_seed(seed, 3));
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(20, 8);
    for (int i = 0; i < x.size(); ++i) x(i) = normal(rng);
    const auto sparse = slm::make_sparse_regression_registry(x, 4);
    const slm::ComplexityCheck b = slm::check_complexity_condition(*sparse);
    rows.push_back(lemma_row("slm-complexity", "sparse-regression;p=8;s_max=4",
                             static_cast<double>(b.offending_t.size()), 0.0, b.holds));
    const auto multi = slm::make_multitask_registry(x, 3, 3);
    const slm::ComplexityCheck c = slm::check_complexity_condition(*multi);
    rows.push_back(lemma_row("slm-complexity", "multitask;p=8;m=3;s_max=3", static_cast<double>(c.offending_t.size()),
                             0.0, c.holds));

    const slm::SLMConfig sc{4.0, 1.0};
    const auto& specs = bic->specs();
    for (int star = 0; star < static_cast<int>(specs.size()); ++star) {
      const slm::SieveSumCheck chk = slm::slm_sieve_sum(specs, sc, 1.0, star);
      rows.push_back(lemma_row("slm-sieve-sum", "biclustering;D=4;C2=1;lambda=" + specs[star].lambda_id, chk.log_sum,
                               chk.log_bound, chk.holds));
    }
  }
  return rows;
}

json lemma_summarize(const ExperimentConfig&, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  std::map<std::string, std::pair<long long, long long>> by;
  long long passed = 0, total = 0;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      const bool ok = num(row, 4) != 0.0;
      auto& [p, t] = by[str(row, 0)];
      p += ok;
      ++t;
      passed += ok;
      ++total;
    }
  if (!reps.empty() && !reps.front().failed)
    for (const Row& row : reps.front().rows)
      if (str(row, 0) == "sum") {
        const std::string& prm = str(row, 1);
        const auto semi = prm.find(';');
        const double s = std::stod(prm.substr(prm.find('=', semi) + 1));
        plot.rows.push_back({"log_sum " + prm.substr(0, semi), s, num(row, 2)});
      }
  json by_lemma = json::object();
  for (const auto& [name, pt] : by) by_lemma[name] = {{"passed", pt.first}, {"total", pt.second}};
  return {{"pass_counts", {{"passed", passed}, {"total", total}}}, {"by_lemma", by_lemma}};
}

// ---------------------------------------------------------------- bridge-suite

struct BridgeParams {
  int n, models_min, models_max;
  double tolerance;

  explicit BridgeParams(const ExperimentConfig& cfg) {
    n = positive_int(cfg, "n", 6);
    models_min = positive_int(cfg, "models_min", 2, 1, 5);
    models_max = positive_int(cfg, "models_max", 5, models_min, 5);
    tolerance = positive_double(cfg, "tolerance", 1e-8);
  }
};

std::vector<Row> bridge_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const BridgeParams prm(cfg);
  Rng rng(seed);
  std::uniform_int_distribution<int> count(prm.models_min, prm.models_max);
  const int km = count(rng);
  const bridge::BridgeInstance inst = bridge::random_instance(prm.n, km, rng);
  const bridge::EquivalenceReport r = bridge::verify_eb_vb_equivalence(inst.family, inst.y);
  const bool pass = r.selection_agrees && r.identity_residual <= prm.tolerance && r.constancy_residual <= prm.tolerance;
  return {{static_cast<long long>(km), static_cast<long long>(r.k_hat_mmle), static_cast<long long>(r.k_hat_kl),
           static_cast<long long>(r.selection_agrees), r.identity_residual, r.constancy_residual, r.log_pbar,
           static_cast<long long>(pass)}};
}

json bridge_summarize(const ExperimentConfig&, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  long long agree = 0, pass = 0, total = 0;
  double max_id = 0.0, max_const = 0.0;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      agree += static_cast<long long>(num(row, 3));
      pass += static_cast<long long>(num(row, 7));
      ++total;
      max_id = std::max(max_id, num(row, 4));
      max_const = std::max(max_const, num(row, 5));
      plot.rows.push_back({std::string("identity_residual"), static_cast<double>(rep.replicate), num(row, 4)});
    }
  return {{"pass_counts", {{"passed", pass}, {"selection_agrees", agree}, {"total", total}}},
          {"max_identity_residual", max_id},
          {"max_constancy_residual", max_const}};
}

// ---------------------------------------------------------------- test-errors

struct TestParams {
  int p, s_star;
  double eps_mult, signal;

  explicit TestParams(const ExperimentConfig& cfg) {
    p = positive_int(cfg, "p", 8, 2, 62);
    s_star = positive_int(cfg, "s_star", 2, 1, p / 2);
    eps_mult = positive_double(cfg, "eps_mult", 20.0);
    signal = cfg.get_double("signal", 1.0);
    if (s_star * signal * signal > eps_sq())
      throw UsageError("signal too large: the disjoint alternative needs ||theta*||^2 <= eps^2");
  }

  double eps_sq() const { return eps_mult * s_star * std::log(static_cast<double>(p)); }
};

std::vector<Row> test_replicate(const ExperimentConfig& cfg, int, std::uint64_t seed) {
  const TestParams prm(cfg);
  Rng rng(seed);
  std::vector<int> idx(prm.p);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> star(idx.begin(), idx.begin() + prm.s_star);
  std::vector<int> other(idx.begin() + prm.s_star, idx.begin() + 2 * prm.s_star);
  std::sort(star.begin(), star.end());
  std::sort(other.begin(), other.end());
  const decomp::Support s_star(star, prm.p);

  Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(prm.p);
  for (int j : star) theta_star(j) = prm.signal;
  const double eps_sq = prm.eps_sq();

  const bool null_reject = decomp::test_reject_sequence_max(theta_star + normal_vector(prm.p, rng), theta_star, s_star);

  // theta in Theta_{S*} with ||theta - theta*||^2 = eps^2.
  Eigen::VectorXd same = theta_star;
  for (int j : star) same(j) += std::sqrt(eps_sq / prm.s_star);
  const bool same_reject = decomp::test_reject_sequence_max(same + normal_vector(prm.p, rng), theta_star, s_star);

  // theta in Theta_S, S disjoint from S*, at the same distance.
  Eigen::VectorXd disjoint = Eigen::VectorXd::Zero(prm.p);
  const double rest = eps_sq - theta_star.squaredNorm();
  for (int j : other) disjoint(j) = std::sqrt(rest / prm.s_star);
  const bool disjoint_reject =
      decomp::test_reject_sequence_max(disjoint + normal_vector(prm.p, rng), theta_star, s_star);

  return {{static_cast<long long>(null_reject), static_cast<long long>(same_reject),
           static_cast<long long>(disjoint_reject)}};
}

json test_summarize(const ExperimentConfig& cfg, const std::vector<ReplicateResult>& reps, PlotData& plot) {
  const TestParams prm(cfg);
  double hits[3] = {0, 0, 0};
  long long total = 0;
  for (const auto& rep : reps)
    for (const Row& row : rep.rows) {
      for (int i = 0; i < 3; ++i) hits[i] += num(row, i);
      ++total;
    }
  const double log_p = std::log(static_cast<double>(prm.p));
  const double bound = std::exp(-prm.s_star * log_p);
  const double nn = static_cast<double>(std::max<long long>(total, 1));
  const double se = std::sqrt(bound * (1 - bound) / nn);
  const double type1 = hits[0] / nn;
  const double power_same = hits[1] / nn;
  const double power_disjoint = hits[2] / nn;
  const double lemma_power =
      1.0 - std::exp(-2.0 / 3.0 * prm.eps_sq() + 5.0 * (2 * prm.s_star) * log_p);
  const bool type1_ok = type1 <= bound + 3.0 * se;
  const bool power_ok = power_same >= 0.99;
  plot.rows.push_back({std::string("rejection_rate"), 0.0, type1});
  plot.rows.push_back({std::string("rejection_rate"), 1.0, power_same});
  plot.rows.push_back({std::string("rejection_rate"), 2.0, power_disjoint});
  return {{"type1_rate", type1},
          {"type1_bound", bound},
          {"type1_binomial_se", se},
          {"power_same_support", power_same},
          {"power_disjoint_support", power_disjoint},
          {"lemma_power_bound", lemma_power},
          {"eps_sq", prm.eps_sq()},
          {"pass_counts", {{"type1", type1_ok}, {"power", power_ok}, {"passed", type1_ok + power_ok}, {"total", 2}}}};
}

template <class P>
std::function<void(const ExperimentConfig&)> checker() {
  return [](const ExperimentConfig& cfg) { (void)P(cfg); };
}

}  // namespace

const std::vector<ExperimentDef>& experiment_defs() {
  static const std::vector<ExperimentDef> defs = {
      {{"seq-contraction",
        "Sequence model: MMLE spike-and-slab posterior contraction over random signals.",
        {{"p", "dimension"},
         {"s_star", "true support size"},
         {"lambda_hat", "MMLE of the prior inclusion rate"},
         {"lambda_ratio", "lambda_hat / (s_star / p)"},
         {"loss", "||posterior mean - theta*||^2"},
         {"loss_ratio", "loss / (s_star log p)"},
         {"posterior_loss", "E[||theta - theta*||^2 | Y]"},
         {"posterior_loss_ratio", "posterior_loss / (s_star log p)"},
         {"expected_size", "sum of posterior inclusion probabilities"}},
        {{"p", "500"},
         {"p_values", "(p)"},
         {"s_star", "10"},
         {"signal_mult", "6"},
         {"alpha", "1"},
         {"beta_power", "3"},
         {"tau", "1"}}},
       checker<SeqParams>(),
       seq_replicate,
       seq_summarize},
      {{"reg-contraction",
        "Sparse regression: MMLE over exactly enumerated supports with Gaussian designs.",
        {{"lambda_hat", "MMLE of the prior inclusion rate"},
         {"loss", "||X (posterior mean - theta*)||^2"},
         {"loss_ratio", "loss / (s_star log p)"},
         {"top_is_true", "1 when the true support has the largest posterior probability"},
         {"top_prob", "largest support posterior probability"},
         {"true_support_prob", "posterior probability of the true support"},
         {"truncation_bound", "prior mass beyond s_max at lambda_hat"},
         {"max_marginal_se", "largest standard error among support log marginals"},
         {"tau", "slab rate p^-zeta max column norm"}},
        {{"n", "100"},
         {"p", "12"},
         {"s_star", "2"},
         {"signal_mult", "6"},
         {"s_max", "4"},
         {"zeta", "1"},
         {"alpha", "1"},
         {"beta_power", "3"},
         {"is_draws", "10000"}}},
       checker<RegParams>(),
       reg_replicate,
       reg_summarize},
      {{"slm-bicluster",
        "Biclustering structured linear model: EB selection of the (k, l) class.",
        {{"k_hat", "selected row cluster count"},
         {"l_hat", "selected column cluster count"},
         {"correct", "1 when (k_hat, l_hat) = (k_star, l_star)"},
         {"unstable", "1 when the top two scores are within three standard errors"},
         {"approximate", "1 when any class sum used mode search"},
         {"score_gap", "best minus second-best class score"}},
        {{"n", "12"},
         {"m", "12"},
         {"k_star", "2"},
         {"l_star", "2"},
         {"separation", "4"},
         {"k_max", "3"},
         {"l_max", "3"},
         {"D", "4"},
         {"tau", "1"},
         {"n_is", "2000"},
         {"n_starts", "8"}}},
       checker<SlmParams>(),
       slm_replicate,
       slm_summarize},
      {{"sieve-rate",
        "Fourier exponential-family density sieve with a Poisson weight on the truncation level.",
        {{"n", "sample size (nested samples within a replicate)"},
         {"k_hat", "selected truncation level"},
         {"hellinger_sq", "posterior mean of H^2(p_theta, f0)"},
         {"hellinger_sq_map", "H^2(p_MAP, f0)"},
         {"rate_ratio", "hellinger_sq / n^(-2a/(2a+1)), a = smoothness"}},
        {{"n_values", "500,1000,2000,4000"},
         {"truth_coords", "20"},
         {"truth_decay", "1.5"},
         {"sigma2", "1"},
         {"tau_pois", "1"},
         {"k_max", "50"},
         {"n_draws", "200"},
         {"quad_nodes", "512"},
         {"smoothness", "1"}}},
       checker<SieveParams>(),
       sieve_replicate,
       sieve_summarize},
      {{"lemma-suite",
        "Sum bound, gamma-ratio sandwich, chi-square tail, slab mass ratio and SLM sieve checks.",
        {{"lemma", "check family"},
         {"params", "parameter set, ';'-separated"},
         {"value", "computed quantity"},
         {"bound", "bound it is compared against"},
         {"pass", "1 when the check holds"}},
        {{"chi2_draws", "100000"}, {"mass_draws", "20000"}}},
       checker<LemmaParams>(),
       lemma_replicate,
       lemma_summarize},
      {{"bridge-suite",
        "Conjugate Gaussian model selection: MMLE versus KL projection, two routes.",
        {{"n_models", "number of candidate models"},
         {"k_hat_mmle", "model maximizing pi_k evidence_k"},
         {"k_hat_kl", "model minimizing the projection KL"},
         {"selection_agrees", "1 when both selections coincide"},
         {"identity_residual", "max |closed-form KL - direct KL|"},
         {"constancy_residual", "max |KL_k + log(pi_k evidence_k) - log pbar|"},
         {"log_pbar", "log marginal of the hierarchical model"},
         {"pass", "1 when selections agree and residuals are within tolerance"}},
        {{"n", "6"}, {"models_min", "2"}, {"models_max", "5"}, {"tolerance", "1e-8"}}},
       checker<BridgeParams>(),
       bridge_replicate,
       bridge_summarize},
      {{"test-errors",
        "Max chi-square test on the sequence model: one null and two alternative draws per replicate.",
        {{"reject_null", "test rejects under theta*"},
         {"reject_same_support", "test rejects at an alternative supported on S*"},
         {"reject_disjoint_support", "test rejects at an alternative supported off S*"}},
        {{"p", "8"}, {"s_star", "2"}, {"eps_mult", "20"}, {"signal", "1"}}},
       checker<TestParams>(),
       test_replicate,
       test_summarize},
  };
  return defs;
}

}  // namespace ebayes::harness::detail
