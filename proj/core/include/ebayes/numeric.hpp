#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace ebayes {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kLogPi = 1.1447298858494001741434273513531;

/// Random stream used throughout. Every stochastic routine takes one by
/// reference; independent streams come from derive_seed().
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive well-separated child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for the child stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seed derived from a master seed and an arbitrary key sequence.
std::uint64_t derive_seed(std::uint64_t master, std::span<const int> key) noexcept;

inline double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

/// log Phi(x), accurate in both tails.
double log_ndtr(double x);

/// Phi(x).
double ndtr(double x);

/// Phi^{-1}(p) for p in (0,1).
double ndtri(double p);

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
double log_add_exp(double a, double b);

/// log sum exp over a range; -inf for an empty range.
double log_sum_exp(std::span<const double> xs);

/// x * log(y) with the convention 0 * log 0 = 0.
double xlogy(double x, double y);

/// log C(n, k).
double log_binomial(int n, int k);

}  // namespace ebayes
