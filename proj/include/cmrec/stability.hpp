#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cmrec/matrix.hpp"

namespace cmrec {

/// Cell-centre solution field sampled along a line.
using Profile = std::vector<double>;

/// Flags spatially oscillatory ("staggering") profiles. A directional
/// change happens where two successive differences have strictly opposite
/// signs and both exceed amplitude_fraction of the profile's range; the
/// profile is flagged when at least min_changes such changes occur
/// consecutively. Constant profiles are never flagged. Throws DataError
/// for profiles shorter than 2 or with non-finite values.
bool detect_staggering(const Profile& p, std::size_t min_changes = 5,
                       double amplitude_fraction = 0.01);

/// Returns a copy of m with every flagged (item, case) entry set to 0.
/// Throws DataError when a flag names an unknown id or a missing entry.
PerformanceMatrix apply_stability_zeroing(
    const PerformanceMatrix& m,
    const std::vector<std::pair<std::string, std::string>>& flagged);

}  // namespace cmrec
