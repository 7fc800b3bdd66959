#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace latenteval {

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::size_t count = 0;
};

using Histogram = std::vector<HistogramBin>;

/// Bin values into `bin_count` equal-width bins spanning [min, max] of the
/// data. Bins are left-closed right-open; the final bin is right-closed, so
/// counts always sum to the number of values. A degenerate range (all values
/// equal) is widened by +-0.5 around the common value.
Histogram make_histogram(std::span<const double> values, std::size_t bin_count);

/// Bin against explicit ascending edges (edges.size() - 1 bins). Same edge
/// conventions; values outside [front, back] are clamped into the end bins so
/// the count-sum invariant holds regardless of the caller's edge choice.
Histogram make_histogram(std::span<const double> values, std::span<const double> edges);

/// Equal-width edges spanning the combined range of several value sets.
/// Handy when two histograms must share bins to be comparable.
std::vector<double> shared_edges(std::span<const std::span<const double>> value_sets,
                                 std::size_t bin_count);

}  // namespace latenteval
