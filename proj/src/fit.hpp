#pragma once

#include <cstdint>

#include "core_types.hpp"

namespace selfsim {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    // residual-bootstrap percentile interval for the slope (2.5%, 97.5%)
    double slope_lo = 0.0;
    double slope_hi = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares y = slope x + intercept.
LinearFit linear_fit(const RVec& x, const RVec& y);
LinearFit linear_fit_bootstrap(const RVec& x, const RVec& y, int resamples, std::uint64_t seed);

}  // namespace selfsim
