#include "cmrec/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmrec/errors.hpp"

namespace cmrec {

bool detect_staggering(const Profile& p, std::size_t min_changes, double amplitude_fraction) {
  if (p.size() < 2) {
    throw DataError("profile needs at least 2 points, got " + std::to_string(p.size()));
  }
  for (double v : p) {
    if (!std::isfinite(v)) throw DataError("profile contains a non-finite value");
  }
  if (amplitude_fraction < 0.0) {
    throw std::invalid_argument("amplitude_fraction must be non-negative");
  }

  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  const double range = *hi - *lo;
  if (range == 0.0) return false;
  const double threshold = amplitude_fraction * range;

  std::size_t run = 0;
  std::size_t longest = 0;
  for (std::size_t t = 0; t + 2 < p.size(); ++t) {
    const double d0 = p[t + 1] - p[t];
    const double d1 = p[t + 2] - p[t + 1];
    const bool change = d0 * d1 < 0.0 && std::abs(d0) > threshold && std::abs(d1) > threshold;
    run = change ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  return longest >= min_changes;
}

PerformanceMatrix apply_stability_zeroing(
    const PerformanceMatrix& m,
    const std::vector<std::pair<std::string, std::string>>& flagged) {
  auto values = m.entries();
  const std::size_t n_cases = m.n_cases();
  for (const auto& [item_id, case_id] : flagged) {
    const auto i = m.item_index(item_id);
    if (!i) throw DataError("stability flag names unknown item '" + item_id + "'");
    const auto c = m.case_index(case_id);
    if (!c) throw DataError("stability flag names unknown case '" + case_id + "'");
    auto& cell = values[*i * n_cases + *c];
    if (!cell.has_value()) {
      throw DataError("stability flag on missing entry (" + item_id + ", " + case_id + ")");
    }
    cell = 0.0;
  }
  return PerformanceMatrix(m.item_ids(), m.case_ids(), std::move(values));
}

}  // namespace cmrec
