#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "ebayes/dists.hpp"
#include "ebayes/mvn_orthant.hpp"
#include "ebayes/reg_eb.hpp"
#include "ebayes/seq_eb.hpp"
#include "ebayes/sieve_density.hpp"
#include "ebayes/slm.hpp"

using namespace ebayes;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m(i) = z(rng);
  return m;
}

void BM_GaussLaplaceMarginal(benchmark::State& st) {
  double y = -10.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(dists::log_gauss_laplace_marginal(y, 1.0));
    y = y > 10.0 ? -10.0 : y + 0.013;
  }
}
BENCHMARK(BM_GaussLaplaceMarginal);

void BM_SeqMmle(benchmark::State& st) {
  Rng rng(1);
  const Eigen::VectorXd y = gaussian(static_cast<int>(st.range(0)), 1, rng);
  const seq::SpikeSlabConfig cfg{1.0, static_cast<double>(y.size()), 1.0};
  for (auto _ : st) benchmark::DoNotOptimize(seq::mmle(seq::SequenceData(y), cfg).lambda_hat);
}
BENCHMARK(BM_SeqMmle)->Arg(100)->Arg(1000);

void BM_OrthantLaplace(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  Rng rng(2);
  const Eigen::MatrixXd a = gaussian(d, d, rng);
  const Eigen::MatrixXd v = a * a.transpose() / d + Eigen::MatrixXd::Identity(d, d) * 0.1;
  const Eigen::VectorXd m = gaussian(d, 1, rng);
  for (auto _ : st) benchmark::DoNotOptimize(mvn::log_laplace_product_expectation_orthant(m, v, 1.0));
}
BENCHMARK(BM_OrthantLaplace)->DenseRange(1, 3);

void BM_RegSupportMarginals(benchmark::State& st) {
  Rng rng(3);
  const reg::RegressionData data(gaussian(50, 1, rng).col(0), gaussian(50, 8, rng));
  for (auto _ : st) benchmark::DoNotOptimize(reg::support_marginals(data, 0.5, 3).size());
}
BENCHMARK(BM_RegSupportMarginals)->Unit(benchmark::kMillisecond);

void BM_SlmStructureMarginal(benchmark::State& st) {
  Rng rng(4);
  const Eigen::MatrixXd op = gaussian(40, 4, rng);
  const Eigen::VectorXd y = gaussian(40, 1, rng);
  for (auto _ : st) benchmark::DoNotOptimize(slm::log_marginal_structure(y, op, 1.0, 2000, rng).estimate);
}
BENCHMARK(BM_SlmStructureMarginal)->Unit(benchmark::kMicrosecond);

void BM_SieveLogNormalizer(benchmark::State& st) {
  Rng rng(5);
  Eigen::VectorXd theta = gaussian(static_cast<int>(st.range(0)), 1, rng);
  for (int j = 0; j < theta.size(); ++j) theta(j) *= std::pow(j + 1.0, -1.5);
  for (auto _ : st) benchmark::DoNotOptimize(sieve::log_normalizer(theta, 512));
}
BENCHMARK(BM_SieveLogNormalizer)->Arg(5)->Arg(50);

}  // namespace
