#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nuc/errors.hpp"

namespace nuc {

/// Nearest-rank (ceiling) percentile: the value at index ceil(p/100 * n)-1
/// of the sorted sample. Always returns an actual sample value and is
/// exactly invariant under duplicating the whole multiset.
inline double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw UndefinedInputError("percentile of empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double rank = std::ceil(p / 100.0 * static_cast<double>(v.size()));
    auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(v.size())));
    return v[idx - 1];
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw UndefinedInputError("mean of empty sample");
    double s = 0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

/// Sum accumulated in ascending value order, so the result does not depend
/// on the order the inputs were produced in.
inline double sorted_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0;
    for (double v : values) s += v;
    return s;
}

}  // namespace nuc
