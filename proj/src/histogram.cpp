#include "latenteval/histogram.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace latenteval {

namespace {

std::vector<double> equal_width_edges(double lo, double hi, std::size_t bin_count) {
    if (lo == hi) {  // degenerate range
        lo -= 0.5;
        hi += 0.5;
    }
    std::vector<double> edges(bin_count + 1);
    const double width = (hi - lo) / static_cast<double>(bin_count);
    for (std::size_t i = 0; i <= bin_count; ++i)
        edges[i] = lo + width * static_cast<double>(i);
    edges.front() = lo;
    edges.back() = hi;  // exact endpoints regardless of rounding
    return edges;
}

}  // namespace

Histogram make_histogram(std::span<const double> values, std::span<const double> edges) {
    if (edges.size() < 2) throw std::invalid_argument("histogram: need at least one bin");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("histogram: edges must be strictly increasing");
    if (values.empty()) throw std::invalid_argument("histogram: empty values");

    const std::size_t nbins = edges.size() - 1;
    Histogram hist(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
        hist[i].left = edges[i];
        hist[i].right = edges[i + 1];
    }
    for (double v : values) {
        std::size_t idx;
        if (v < edges.front()) {
            idx = 0;
        } else if (v >= edges.back()) {
            idx = nbins - 1;  // final bin right-closed; outliers clamp here
        } else {
            // first edge strictly greater than v, minus one: [e_i, e_{i+1})
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            idx = static_cast<std::size_t>(it - edges.begin()) - 1;
        }
        ++hist[idx].count;
    }
    return hist;
}

Histogram make_histogram(std::span<const double> values, std::size_t bin_count) {
    if (bin_count == 0) throw std::invalid_argument("histogram: need at least one bin");
    if (values.empty()) throw std::invalid_argument("histogram: empty values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const auto edges = equal_width_edges(*lo_it, *hi_it, bin_count);
    return make_histogram(values, edges);
}

std::vector<double> shared_edges(std::span<const std::span<const double>> value_sets,
                                 std::size_t bin_count) {
    if (bin_count == 0) throw std::invalid_argument("histogram: need at least one bin");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& set : value_sets) {
        for (double v : set) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("histogram: empty values");
    return equal_width_edges(lo, hi, bin_count);
}

}  // namespace latenteval
