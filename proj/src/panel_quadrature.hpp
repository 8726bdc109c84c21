#pragma once

#include "core_types.hpp"

namespace selfsim {

// 16-point Gauss-Legendre rule on [-1, 1] with the spectral matrices used
// for cumulative integration and differentiation of the nodal interpolant.
struct PanelRule {
    static constexpr int n = 16;
    RVec x, w;
    RVec tail;  // tail[i*n+j] = \int_{x_i}^{1} l_j
    RVec head;  // head[i*n+j] = \int_{-1}^{x_i} l_j
    RVec diff;  // diff[i*n+j] = l_j'(x_i)
    // Values of the interpolant at an arbitrary point t in [-1, 1].
    RVec basis_at(double t) const;
};

const PanelRule& panel_rule();

}  // namespace selfsim
