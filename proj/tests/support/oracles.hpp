#pragma once

// Independent reference implementations used only by tests. They favour
// directness over speed and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "tensor.hpp"

namespace oracle {

inline std::vector<double> luma(const wmlab::Tensor3& img) {
  std::vector<double> y(img.height() * img.width());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c)
      y[r * img.width() + c] = 0.299 * img.at(0, r, c) + 0.587 * img.at(1, r, c) +
                               0.114 * img.at(2, r, c);
  return y;
}

// Windowed SSIM straight from the definition: explicit 2-D Gaussian weights,
// weighted moments per window, no separable filtering.
inline double ssim(const wmlab::Tensor3& a, const wmlab::Tensor3& b) {
  const std::size_t h = a.height(), w = a.width();
  const auto x = luma(a), y = luma(b);
  double g[11][11];
  double total = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      const double di = i - 5, dj = j - 5;
      g[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += g[i][j];
    }
  for (auto& row : g)
    for (double& v : row) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + 11 <= h; ++r)
    for (std::size_t c = 0; c + 11 <= w; ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          mx += g[i][j] * x[(r + i) * w + c + j];
          my += g[i][j] * y[(r + i) * w + c + j];
        }
      double vx = 0, vy = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double dx = x[(r + i) * w + c + j] - mx, dy = y[(r + i) * w + c + j] - my;
          vx += g[i][j] * dx * dx;
          vy += g[i][j] * dy * dy;
          cov += g[i][j] * dx * dy;
        }
      sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return sum / static_cast<double>(count);
}

// Backward energy 0.5 (|dx| + |dy|) with central differences, clamped borders.
inline std::vector<double> energy(const std::vector<double>& y, std::size_t h, std::size_t w) {
  std::vector<double> e(h * w);
  auto at = [&](long r, long c) {
    r = std::clamp(r, 0L, static_cast<long>(h) - 1);
    c = std::clamp(c, 0L, static_cast<long>(w) - 1);
    return y[r * w + c];
  };
  for (long r = 0; r < static_cast<long>(h); ++r)
    for (long c = 0; c < static_cast<long>(w); ++c)
      e[r * w + c] = 0.5 * (std::abs(at(r, c + 1) - at(r, c - 1)) + std::abs(at(r + 1, c) - at(r - 1, c)));
  return e;
}

// Enumerates every 8-connected vertical seam. Among minimum-cost seams the
// winner is the one whose column sequence, read from the bottom row upwards,
// is lexicographically smallest.
inline std::vector<std::size_t> brute_force_seam(const std::vector<double>& e, std::size_t h,
                                                 std::size_t w) {
  std::vector<std::size_t> best, cur(h);
  double best_cost = std::numeric_limits<double>::infinity();
  auto better = [&](double cost) {
    if (cost < best_cost) return true;
    if (cost > best_cost) return false;
    for (std::size_t r = h; r-- > 0;) {
      if (cur[r] != best[r]) return cur[r] < best[r];
    }
    return false;
  };
  auto rec = [&](auto&& self, std::size_t r, double cost) -> void {
    if (r == h) {
      if (better(cost)) {
        best_cost = cost;
        best = cur;
      }
      return;
    }
    const std::size_t prev = cur[r - 1];
    for (long d = -1; d <= 1; ++d) {
      const long c = static_cast<long>(prev) + d;
      if (c < 0 || c >= static_cast<long>(w)) continue;
      cur[r] = static_cast<std::size_t>(c);
      self(self, r + 1, e[r * w + c] + cost);
    }
  };
  for (std::size_t c = 0; c < w; ++c) {
    cur[0] = c;
    if (h == 1) {
      if (better(e[c])) {
        best_cost = e[c];
        best = cur;
      }
    } else {
      rec(rec, 1, e[c]);
    }
  }
  return best;
}

inline wmlab::Tensor3 window_extreme(const wmlab::Tensor3& img, int k, bool take_min) {
  wmlab::Tensor3 out(img.channels(), img.height(), img.width());
  const long h = static_cast<long>(img.height()), w = static_cast<long>(img.width()), r = k / 2;
  for (std::size_t ch = 0; ch < img.channels(); ++ch)
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        float v = take_min ? std::numeric_limits<float>::infinity()
                           : -std::numeric_limits<float>::infinity();
        for (long dy = -r; dy <= r; ++dy)
          for (long dx = -r; dx <= r; ++dx) {
            const float s = img.at(ch, std::clamp(y + dy, 0L, h - 1), std::clamp(x + dx, 0L, w - 1));
            v = take_min ? std::min(v, s) : std::max(v, s);
          }
        out.at(ch, y, x) = v;
      }
  return out;
}

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
inline double ks_p_value(double d, double n) {
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b, double* p_value) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  if (p_value) *p_value = ks_p_value(d, ne);
  return d;
}

// One-sided two-sample KS: largest excess of the ECDF of `a` over that of `b`
// (how far `a` sits below `b`), with the asymptotic tail exp(-2 n D^2).
inline double ks_two_sample_below(std::vector<double> a, std::vector<double> b, double* p_value) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size());
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  if (p_value) *p_value = std::exp(-2.0 * ne * d * d);
  return d;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Used for grid-valued p-values k / (N + 1); the left-limit term then
// overstates D by at most one grid step, which only makes the test stricter.
inline double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace oracle
