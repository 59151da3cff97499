#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace ebayes::seq {

namespace detail {

inline constexpr int kGridPoints = 512;
inline constexpr int kRefinedCells = 3;
inline constexpr double kGoldenTol = 1e-12;

template <class F>
double safe_eval(F& f, double x) {
  const double v = f(x);
  return std::isnan(v) ? kNegInf : v;
}

// True when (a, fa) beats (b, fb): larger value, ties toward smaller argument.
inline bool better(double a, double fa, double b, double fb) {
  if (fa != fb) return fa > fb;
  return a < b;
}

template <class F>
ScalarMax golden_section(F& f, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = safe_eval(f, c);
  double fd = safe_eval(f, d);
  for (int it = 0; it < 200 && (b - a) > kGoldenTol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = safe_eval(f, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = safe_eval(f, d);
    }
  }
  return better(c, fc, d, fd) ? ScalarMax{c, fc} : ScalarMax{d, fd};
}

}  // namespace detail

template <class F>
ScalarMax maximize_on_unit_interval(F&& objective) {
  using namespace detail;
  const int n = kGridPoints;
  std::vector<double> grid(n), vals(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = static_cast<double>(i) / (n - 1);
    vals[i] = safe_eval(objective, grid[i]);
  }
  ScalarMax best{grid[0], vals[0]};
  for (int i = 1; i < n; ++i)
    if (better(grid[i], vals[i], best.arg, best.value)) best = {grid[i], vals[i]};

  // Grid local maxima, best first; the objective can be multimodal for small p.
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || vals[i] >= vals[i - 1];
    const bool right_ok = i == n - 1 || vals[i] >= vals[i + 1];
    if (left_ok && right_ok && vals[i] > kNegInf) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return vals[a] > vals[b]; });
  if (peaks.size() > static_cast<std::size_t>(kRefinedCells)) peaks.resize(kRefinedCells);

  for (int i : peaks) {
    const double lo = grid[std::max(i - 1, 0)];
    const double hi = grid[std::min(i + 1, n - 1)];
    const ScalarMax r = golden_section(objective, lo, hi);
    if (better(r.arg, r.value, best.arg, best.value)) best = r;
  }
  return best;
}

}  // namespace ebayes::seq
