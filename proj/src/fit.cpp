#include "fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace selfsim {

LinearFit linear_fit(const RVec& x, const RVec& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("linear fit needs two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("linear fit with degenerate abscissae");
    LinearFit f;
    f.n = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.slope_lo = f.slope_hi = f.slope;
    return f;
}

LinearFit linear_fit_bootstrap(const RVec& x, const RVec& y, int resamples, std::uint64_t seed) {
    LinearFit f = linear_fit(x, y);
    if (resamples < 1) return f;
    RVec fitted(x.size()), resid(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        fitted[i] = f.slope * x[i] + f.intercept;
        resid[i] = y[i] - fitted[i];
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    RVec slopes;
    slopes.reserve(resamples);
    RVec yb(x.size());
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < x.size(); ++i) yb[i] = fitted[i] + resid[pick(rng)];
        slopes.push_back(linear_fit(x, yb).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    auto q = [&](double p) {
        const double pos = p * (slopes.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double t = pos - i;
        return i + 1 < slopes.size() ? slopes[i] * (1 - t) + slopes[i + 1] * t : slopes[i];
    };
    f.slope_lo = q(0.025);
    f.slope_hi = q(0.975);
    return f;
}

}  // namespace selfsim
