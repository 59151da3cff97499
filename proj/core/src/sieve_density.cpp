#include "ebayes/sieve_density.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/quadrature/gauss.hpp>

#include "ebayes/errors.hpp"

namespace ebayes::sieve {

namespace {

constexpr int kPanelOrder = 16;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Composite Gauss-Legendre grid on [0,1] with the basis tabulated at the nodes.
struct Grid {
  Eigen::VectorXd x;
  Eigen::VectorXd log_w;
  Eigen::MatrixXd phi;  // nodes x K

  explicit Grid(int nodes) {
    using Rule = boost::math::quadrature::gauss<double, kPanelOrder>;
    const int panels = (nodes + kPanelOrder - 1) / kPanelOrder;
    std::vector<std::pair<double, double>> ref;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      const double a = Rule::abscissa()[i], w = Rule::weights()[i];
      ref.emplace_back(-a, w);
      if (a != 0.0) ref.emplace_back(a, w);
    }
    x.resize(panels * static_cast<int>(ref.size()));
    log_w.resize(x.size());
    const double h = 1.0 / panels;
    int g = 0;
    for (int p = 0; p < panels; ++p)
      for (const auto& [a, w] : ref) {
        x(g) = h * (p + 0.5 * (a + 1.0));
        log_w(g) = std::log(0.5 * h * w);
        ++g;
      }
  }

  void ensure_basis(int k) {
    if (phi.cols() >= k) return;
    Eigen::MatrixXd next(x.size(), k);
    for (Eigen::Index g = 0; g < x.size(); ++g)
      for (int j = 1; j <= k; ++j) next(g, j - 1) = basis(j, x(g));
    phi = std::move(next);
  }
};

Grid& grid(int nodes, int k) {
  thread_local std::map<int, Grid> cache;
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, Grid(nodes)).first;
  it->second.ensure_basis(k);
  return it->second;
}

struct Moments {
  double c = 0.0;
  Eigen::VectorXd prob;  // normalized quadrature weights times density
};

Moments moments(const Eigen::VectorXd& theta, Grid& gr) {
  const int k = static_cast<int>(theta.size());
  Eigen::VectorXd s = gr.log_w;
  if (k > 0) s += gr.phi.leftCols(k) * theta;
  const double mx = s.maxCoeff();
  Eigen::VectorXd e = (s.array() - mx).exp();
  const double total = e.sum();
  return {mx + std::log(total), e / total};
}

double objective(const SieveData& data, const Eigen::VectorXd& theta, const SievePriorConfig& cfg, Grid& gr) {
  const int k = static_cast<int>(theta.size());
  return theta.dot(data.stats().head(k)) - data.n() * moments(theta, gr).c - 0.5 * theta.squaredNorm() / cfg.sigma2;
}

}  // namespace

double basis(int j, double x) {
  if (j < 1) throw DomainError("basis index must be >= 1");
  const int freq = (j + 1) / 2;
  const double arg = 2.0 * M_PI * freq * x;
  return M_SQRT2 * (j % 2 == 1 ? std::cos(arg) : std::sin(arg));
}

void SievePriorConfig::validate() const {
  if (!(sigma2 > 0.0) || !(tau_pois > 0.0) || k_max < 1) throw DomainError("sieve prior: sigma2, tau_pois, k_max must be positive");
}

ExpFamilyModel::ExpFamilyModel(Eigen::VectorXd coefficients, int nodes)
    : theta_(std::move(coefficients)), quad_nodes_(nodes) {
  if (!theta_.allFinite()) throw DomainError("exponential family: theta must be finite");
  if (quad_nodes_ < 256) throw DomainError("exponential family: quad_nodes must be >= 256");
  log_norm_ = sieve::log_normalizer(theta_, quad_nodes_);
}

double ExpFamilyModel::log_density(double x) const {
  double s = 0.0;
  for (int j = 1; j <= k(); ++j) s += theta_(j - 1) * basis(j, x);
  return s - log_norm_;
}

double log_normalizer(const Eigen::VectorXd& theta, int quad_nodes) {
  if (!theta.allFinite()) throw DomainError("log_normalizer: theta must be finite");
  if (quad_nodes < 1) throw DomainError("log_normalizer: quad_nodes must be positive");
  const int k = static_cast<int>(theta.size());
  const double c1 = moments(theta, grid(quad_nodes, k)).c;
  const double c2 = moments(theta, grid(2 * quad_nodes, k)).c;
  if (std::abs(c1 - c2) > 1e-10) throw PrecisionError("log_normalizer: quadrature refinement disagrees", c1, std::abs(c1 - c2));
  return c1;
}

SieveData::SieveData(std::vector<double> x, int k_max) : x_(std::move(x)), stats_(Eigen::VectorXd::Zero(k_max)) {
  if (k_max < 1) throw DomainError("sieve data: k_max must be positive");
  for (double v : x_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("sieve data must lie in [0,1]");
    for (int j = 1; j <= k_max; ++j) stats_(j - 1) += basis(j, v);
  }
}

SieveData SieveData::head(int n_sub) const {
  if (n_sub < 0 || n_sub > n()) throw DomainError("sieve data: head size out of range");
  return SieveData(std::vector<double>(x_.begin(), x_.begin() + n_sub), k_max());
}

double log_likelihood(const SieveData& data, const Eigen::VectorXd& theta, int quad_nodes) {
  const int k = static_cast<int>(theta.size());
  if (k > data.k_max()) throw DomainError("log_likelihood: theta longer than the tabulated basis");
  return theta.dot(data.stats().head(k)) - data.n() * moments(theta, grid(quad_nodes, k)).c;
}

Eigen::VectorXd log_likelihood_gradient(const SieveData& data, const Eigen::VectorXd& theta, int quad_nodes) {
  const int k = static_cast<int>(theta.size());
  if (k > data.k_max()) throw DomainError("log_likelihood_gradient: theta longer than the tabulated basis");
  Grid& gr = grid(quad_nodes, k);
  const Moments mo = moments(theta, gr);
  return data.stats().head(k) - data.n() * (gr.phi.leftCols(k).transpose() * mo.prob);
}

LaplaceFit fit_map(const SieveData& data, int k, const SievePriorConfig& cfg, const MarginalOptions& opts) {
  cfg.validate();
  if (k < 1 || k > data.k_max()) throw DomainError("fit_map: k out of range");
  Grid& gr = grid(opts.quad_nodes, k);
  const auto phi = gr.phi.leftCols(k);
  const double n = data.n();
  LaplaceFit fit;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
  double obj = objective(data, theta, cfg, gr);
  for (int it = 0; it <= opts.max_newton; ++it) {
    const Moments mo = moments(theta, gr);
    const Eigen::VectorXd mean = phi.transpose() * mo.prob;
    const Eigen::VectorXd grad = data.stats().head(k) - n * mean - theta / cfg.sigma2;
    Eigen::MatrixXd prec = n * (phi.transpose() * mo.prob.asDiagonal() * phi - mean * mean.transpose());
    prec.diagonal().array() += 1.0 / cfg.sigma2;
    fit.newton_iterations = it;
    if (grad.norm() <= opts.grad_tol) {
      Eigen::LLT<Eigen::MatrixXd> llt(prec);
      if (llt.info() != Eigen::Success) throw NumericError("fit_map: negated Hessian is not positive definite at the optimum");
      fit.map = theta;
      fit.precision = prec;
      return fit;
    }
    if (it == opts.max_newton) break;
    const Eigen::VectorXd step = prec.llt().solve(grad);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd cand = theta + t * step;
      const double val = objective(data, cand, cfg, gr);
      if (val >= obj - 1e-12 * std::max(1.0, std::abs(obj))) {
        theta = cand;
        obj = val;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  throw NumericError("fit_map: Newton iterations did not converge");
}

LogEstimate log_marginal_k(const SieveData& data, int k, const SievePriorConfig& cfg, Rng& rng,
                           const MarginalOptions& opts) {
  if (opts.is_draws < 2) throw DomainError("log_marginal_k: is_draws must be >= 2");
  const LaplaceFit fit = fit_map(data, k, cfg, opts);
  Grid& gr = grid(opts.quad_nodes, k);
  const Eigen::LLT<Eigen::MatrixXd> llt(fit.precision);
  const Eigen::MatrixXd l = llt.matrixL();
  const double half_logdet = l.diagonal().array().log().sum();
  const double log_prior_norm = -0.5 * k * (kLog2Pi + std::log(cfg.sigma2));
  auto h = [&](const Eigen::VectorXd& theta, double c) {
    return theta.dot(data.stats().head(k)) - data.n() * c - 0.5 * theta.squaredNorm() / cfg.sigma2 + log_prior_norm;
  };

  LogEstimate out;
  out.laplace = h(fit.map, moments(fit.map, gr).c) + 0.5 * k * kLog2Pi - half_logdet;

  const int nd = opts.is_draws;
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(k, nd);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < k; ++j) z(j, i) = normal(rng);
  // theta = map + L^{-T} z has covariance precision^{-1}.
  const Eigen::MatrixXd thetas = (l.transpose().triangularView<Eigen::Upper>().solve(z)).colwise() + fit.map;
  const Eigen::MatrixXd s = (gr.phi.leftCols(k) * thetas).colwise() + gr.log_w;
  std::vector<double> logw(nd);
  for (int i = 0; i < nd; ++i) {
    const double mx = s.col(i).maxCoeff();
    const double c = mx + std::log((s.col(i).array() - mx).exp().sum());
    const double log_q = -0.5 * k * kLog2Pi + half_logdet - 0.5 * z.col(i).squaredNorm();
    logw[i] = h(thetas.col(i), c) - log_q;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0, sum2 = 0.0;
  for (double lw : logw) {
    const double w = std::exp(lw - mx);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / nd;
  out.estimate = mx + std::log(mean);
  out.se = std::sqrt(std::max(sum2 / nd - mean * mean, 0.0) / nd) / mean;
  return out;
}

double log_poisson_weight(int k, double tau) {
  if (k < 0 || !(tau > 0.0)) throw DomainError("log_poisson_weight: need k >= 0 and tau > 0");
  return k * std::log(tau) - std::lgamma(k + 1.0);
}

double SieveFit::hellinger_sq_to(const std::function<double(double)>& density) const {
  if (draws.rows() == 0) throw DomainError("hellinger_sq_to: no posterior draws");
  const int k = static_cast<int>(draws.cols());
  Grid& gr = grid(quad_nodes, k);
  Eigen::VectorXd sqrt_f(gr.x.size());
  for (Eigen::Index g = 0; g < gr.x.size(); ++g) sqrt_f(g) = std::sqrt(density(gr.x(g)));
  const Eigen::VectorXd w = gr.log_w.array().exp();
  double total = 0.0;
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    const Eigen::VectorXd theta = draws.row(r).transpose();
    const double c = moments(theta, gr).c;
    const Eigen::VectorXd sqrt_p = (0.5 * ((gr.phi.leftCols(k) * theta).array() - c)).exp();
    total += std::clamp(1.0 - w.dot(sqrt_p.cwiseProduct(sqrt_f)), 0.0, 1.0);
  }
  return total / draws.rows();
}

SieveFit select_k_and_fit(const SieveData& data, const SievePriorConfig& cfg, std::uint64_t seed, int n_draws,
                          const MarginalOptions& opts) {
  cfg.validate();
  if (data.n() < 1) throw DomainError("select_k_and_fit: data must be nonempty");
  if (n_draws < 1) throw DomainError("select_k_and_fit: n_draws must be positive");
  const int kk = std::min({data.n(), cfg.k_max, data.k_max()});
  SieveFit fit;
  fit.quad_nodes = opts.quad_nodes;
  double best = kNegInf;
  for (int k = 1; k <= kk; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const LogEstimate e = log_marginal_k(data, k, cfg, rng, opts);
    const double score = log_poisson_weight(k, cfg.tau_pois) + e.estimate;
    fit.scores.push_back(score);
    fit.score_se.push_back(e.se);
    if (score > best) {
      best = score;
      fit.k_hat = k;
    }
  }
  const LaplaceFit lf = fit_map(data, fit.k_hat, cfg, opts);
  fit.map_theta = lf.map;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(lf.precision).matrixL();
  Rng rng(derive_seed(seed, std::vector<int>{-1}));
  std::normal_distribution<double> normal;
  fit.draws.resize(n_draws, fit.k_hat);
  Eigen::VectorXd z(fit.k_hat);
  for (int r = 0; r < n_draws; ++r) {
    for (int j = 0; j < fit.k_hat; ++j) z(j) = normal(rng);
    fit.draws.row(r) = (lf.map + l.transpose().triangularView<Eigen::Upper>().solve(z)).transpose();
  }
  return fit;
}

double hellinger_sq(const std::function<double(double)>& f, const std::function<double(double)>& g, int quad_nodes) {
  Grid& gr = grid(quad_nodes, 0);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < gr.x.size(); ++i) acc += std::exp(gr.log_w(i)) * std::sqrt(f(gr.x(i)) * g(gr.x(i)));
  return std::clamp(1.0 - acc, 0.0, 1.0);
}

std::vector<double> sample_density(const Eigen::VectorXd& theta, int n, Rng& rng) {
  if (n < 0) throw DomainError("sample_density: n must be nonnegative");
  const double bound = M_SQRT2 * theta.lpNorm<1>();
  std::uniform_real_distribution<double> unif;
  std::vector<double> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    const double x = unif(rng);
    double s = 0.0;
    for (int j = 1; j <= theta.size(); ++j) s += theta(j - 1) * basis(j, x);
    if (unif(rng) < std::exp(s - bound)) out.push_back(x);
  }
  return out;
}

}  // namespace ebayes::sieve
