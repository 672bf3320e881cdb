#pragma once

// Slow, independent reference implementations used only by tests. These
// deliberately avoid the library's own code paths so that agreement is
// evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oracle {

// Average ranks (1-based, ties share the mean of their positions).
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation; requires both vectors non-constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: bad input");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) throw std::invalid_argument("spearman: constant vector");
  return num / std::sqrt(da * db);
}

// Brute-force rank-1 completion: alternating least squares on the observed
// cells of a small grid, many restarts, tiny steps. Used as an oracle for
// low-rank reconstruction error on <=6x6 problems.
inline std::vector<std::vector<double>> rank1_als(
    const std::vector<std::vector<std::optional<double>>>& grid, int restarts = 20,
    int iters = 500) {
  const std::size_t n = grid.size();
  const std::size_t m = grid.empty() ? 0 : grid[0].size();
  std::vector<std::vector<double>> best(n, std::vector<double>(m, 0.0));
  double best_sse = std::numeric_limits<double>::infinity();
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next01 = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) / 9007199254740992.0;
  };
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> u(n), v(m);
    for (auto& x : u) x = next01() + 0.1;
    for (auto& x : v) x = next01() + 0.1;
    for (int it = 0; it < iters; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          if (!grid[i][j]) continue;
          num += *grid[i][j] * v[j];
          den += v[j] * v[j];
        }
        if (den > 1e-12) u[i] = num / den;
      }
      for (std::size_t j = 0; j < m; ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!grid[i][j]) continue;
          num += *grid[i][j] * u[i];
          den += u[i] * u[i];
        }
        if (den > 1e-12) v[j] = num / den;
      }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (!grid[i][j]) continue;
        const double d = u[i] * v[j] - *grid[i][j];
        sse += d * d;
      }
    }
    if (sse < best_sse) {
      best_sse = sse;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) best[i][j] = u[i] * v[j];
      }
    }
  }
  return best;
}

inline double rmse_over(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rmse_over: bad input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / a.size());
}

}  // namespace oracle
