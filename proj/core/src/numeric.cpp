#include "ebayes/numeric.hpp"

#include <algorithm>

#include <boost/math/special_functions/erf.hpp>

namespace ebayes {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::span<const int> key) noexcept {
  std::uint64_t h = mix64(master ^ 0xa0761d6478bd642fULL);
  for (int k : key) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)));
  return h;
}

double log_ndtr(double x) {
  if (std::isnan(x)) return x;
  if (x > 6.0) return std::log1p(-0.5 * std::erfc(x / std::sqrt(2.0)));
  if (x > -20.0) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  // Asymptotic series for the lower tail: Phi(x) ~ phi(x)/|x| * sum (-1)^k (2k-1)!! / x^{2k}.
  const double x2 = x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 10; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    sum += term;
  }
  return log_normal_pdf(x) - std::log(-x) + std::log(sum);
}

double ndtr(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ndtri(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a == kInf || b == kInf) return kInf;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == kNegInf || m == kInf) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(y);
}

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace ebayes
