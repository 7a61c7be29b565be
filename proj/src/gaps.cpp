#include "harbench/gaps.hpp"

#include <cmath>

namespace harbench {

namespace {

// Interpolates in place over a strided view.
void fill_gaps(double* first, std::size_t count, std::size_t stride, std::size_t max_gap) {
    auto at = [&](std::size_t i) -> double& { return first[i * stride]; };
    std::size_t i = 0;
    while (i < count) {
        if (!std::isnan(at(i))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < count && std::isnan(at(j))) ++j;
        const std::size_t gap = j - i;
        if (i > 0 && j < count && gap <= max_gap) {
            const double left = at(i - 1);
            const double right = at(j);
            const double span = static_cast<double>(gap + 1);
            for (std::size_t k = i; k < j; ++k) {
                const double frac = static_cast<double>(k - i + 1) / span;
                at(k) = left + (right - left) * frac;
            }
        }
        i = j;
    }
}

}  // namespace

std::vector<double> clean_missing(std::span<const double> series, std::size_t max_gap) {
    std::vector<double> out(series.begin(), series.end());
    fill_gaps(out.data(), out.size(), 1, max_gap);
    return out;
}

std::vector<double> clean_missing_columns(std::span<const double> block, std::size_t cols,
                                          std::size_t max_gap) {
    std::vector<double> out(block.begin(), block.end());
    if (cols == 0) return out;
    const std::size_t rows = out.size() / cols;
    for (std::size_t c = 0; c < cols; ++c) fill_gaps(out.data() + c, rows, cols, max_gap);
    return out;
}

}  // namespace harbench
