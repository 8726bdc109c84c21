#include "panel_quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace selfsim {

namespace {

// P_0..P_{m-1} and derivatives at x.
void legendre(double x, int m, RVec& p, RVec& dp) {
    p.assign(m, 0.0);
    dp.assign(m, 0.0);
    p[0] = 1.0;
    if (m > 1) {
        p[1] = x;
        dp[1] = 1.0;
    }
    for (int k = 1; k + 1 < m; ++k) {
        p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
        dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k];
    }
}

PanelRule build() {
    constexpr int n = PanelRule::n;
    using G = boost::math::quadrature::gauss<double, n>;
    PanelRule r;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) {
        r.x.push_back(-a[i]);
        r.w.push_back(wt[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        r.x.push_back(a[i]);
        r.w.push_back(wt[i]);
    }
    // Legendre coefficients of the interpolant: c_k = (2k+1)/2 sum_j w_j P_k(x_j) h_j.
    RVec Pv(n * n), dPv(n * n), Q(n * n), Qh(n * n);
    RVec p, dp, pe, dpe;
    for (int i = 0; i < n; ++i) {
        legendre(r.x[i], n + 1, p, dp);
        for (int k = 0; k < n; ++k) {
            Pv[i * n + k] = p[k];
            dPv[i * n + k] = dp[k];
            // \int_x^1 P_k and \int_{-1}^x P_k
            if (k == 0) {
                Q[i * n + k] = 1.0 - r.x[i];
                Qh[i * n + k] = r.x[i] + 1.0;
            } else {
                const double prim = (p[k + 1] - p[k - 1]) / (2 * k + 1);  // vanishes at +-1
                Q[i * n + k] = -prim;
                Qh[i * n + k] = prim;
            }
        }
    }
    r.tail.assign(n * n, 0.0);
    r.head.assign(n * n, 0.0);
    r.diff.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = 0.0, h = 0.0, d = 0.0;
            for (int k = 0; k < n; ++k) {
                const double ck = 0.5 * (2 * k + 1) * r.w[j] * Pv[j * n + k];
                t += Q[i * n + k] * ck;
                h += Qh[i * n + k] * ck;
                d += dPv[i * n + k] * ck;
            }
            r.tail[i * n + j] = t;
            r.head[i * n + j] = h;
            r.diff[i * n + j] = d;
        }
    return r;
}

}  // namespace

RVec PanelRule::basis_at(double t) const {
    RVec p, dp;
    legendre(t, n, p, dp);
    RVec out(n, 0.0);
    RVec pj, dpj;
    for (int j = 0; j < n; ++j) {
        legendre(x[j], n, pj, dpj);
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += 0.5 * (2 * k + 1) * w[j] * pj[k] * p[k];
        out[j] = s;
    }
    return out;
}

const PanelRule& panel_rule() {
    static const PanelRule rule = build();
    return rule;
}

}  // namespace selfsim
