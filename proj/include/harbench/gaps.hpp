#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace harbench {

/// Linearly interpolates interior runs of at most `max_gap` missing (NaN)
/// samples. Longer runs, and runs touching either end of the series, stay NaN.
std::vector<double> clean_missing(std::span<const double> series, std::size_t max_gap);

/// Same rule applied column-wise to a row-major (rows x cols) block.
std::vector<double> clean_missing_columns(std::span<const double> block, std::size_t cols,
                                          std::size_t max_gap);

}  // namespace harbench
