#include "spectral_transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/special_functions/zeta.hpp>

#include "fft.hpp"

namespace selfsim {

NormKind NormKind::Lp(double p) {
    if (!(p >= 1.0)) throw ValidationError("Lebesgue exponent must be >= 1");
    NormKind k;
    k.tag = Tag::lp;
    k.p = p;
    return k;
}

NormKind NormKind::HomSobolev(double sigma, double p) {
    if (!(p >= 1.0)) throw ValidationError("Lebesgue exponent must be >= 1");
    if (!(sigma > -1.5 && sigma <= 1.0)) throw ValidationError("Sobolev order out of range");
    NormKind k;
    k.tag = Tag::hom_sobolev;
    k.sigma = sigma;
    k.p = p;
    return k;
}

NormKind NormKind::WeightedL2(double delta) {
    if (!(delta >= 0.0)) throw ValidationError("weight exponent must be >= 0");
    NormKind k;
    k.tag = Tag::weighted_l2;
    k.delta = delta;
    return k;
}

CVec fourier(const Field& f) {
    const int n = f.grid.N;
    CVec out = f.values;
    dft_forward(out.data(), n);
    const double dx = f.grid.dx();
    // x_0 = -L contributes exp(i xi_k L) = (-1)^k.
    for (int k = 0; k < n; ++k) out[k] *= (k % 2 ? -dx : dx);
    return out;
}

Field inverse_fourier(const Grid1D& g, CVec fhat, Geometry geom) {
    const int n = g.N;
    if (static_cast<int>(fhat.size()) != n) throw ValidationError("spectrum length does not match grid");
    for (int k = 0; k < n; ++k) fhat[k] *= (k % 2 ? -1.0 : 1.0);
    dft_backward(fhat.data(), n);
    const double s = 1.0 / (n * g.dx());
    for (auto& z : fhat) z *= s;
    return Field(g, std::move(fhat), Space::physical, geom);
}

Field apply_multiplier(const Field& f, const std::function<cplx(double)>& m) {
    const int n = f.grid.N;
    CVec w = f.values;
    dft_forward(w.data(), n);
    for (int k = 0; k < n; ++k) w[k] *= m(f.grid.xi(k)) / static_cast<double>(n);
    dft_backward(w.data(), n);
    return Field(f.grid, std::move(w), Space::physical, f.geom);
}

Field fractional_derivative(const Field& f, double alpha) {
    f.check_finite();
    if (alpha == 0.0) return f;
    const double lo = -0.5 * f.dim();
    if (!(alpha > lo && alpha <= 2.0)) throw ValidationError("fractional order out of range");
    return apply_multiplier(f, [alpha](double xi) -> cplx {
        const double a = std::abs(xi);
        if (a == 0.0) return 0.0;
        return std::pow(a, alpha);
    });
}

double lp_norm(const Field& f, double p) {
    const int n = f.grid.N;
    const double dx = f.grid.dx();
    if (f.geom == Geometry::cartesian) {
        if (std::isinf(p)) {
            double m = 0.0;
            for (const auto& z : f.values) m = std::max(m, std::abs(z));
            return m;
        }
        double s = 0.0;
        for (const auto& z : f.values) s += std::pow(std::abs(z), p);
        return std::pow(s * dx, 1.0 / p);
    }
    // Radial d = 3 through u = r f: \int_{R^3} |f|^p = 2 pi \int_R |x|^{2-p} |u|^p.
    if (std::isinf(p)) {
        double m = 0.0;
        for (int j = 0; j < n; ++j) {
            const double x = f.grid.x(j);
            if (x != 0.0) m = std::max(m, std::abs(f[j]) / std::abs(x));
        }
        return m;
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x = std::abs(f.grid.x(j));
        if (x == 0.0) continue;
        s += std::pow(x, 2.0 - p) * std::pow(std::abs(f[j]), p);
    }
    return std::pow(2.0 * M_PI * s * dx, 1.0 / p);
}

double norm(const Field& f, const NormKind& kind) {
    switch (kind.tag) {
        case NormKind::Tag::lp:
            return lp_norm(f, kind.p);
        case NormKind::Tag::hom_sobolev:
            if (kind.p == 2.0) return hom_sobolev_l2(f, kind.sigma);
            return lp_norm(fractional_derivative(f, kind.sigma), kind.p);
        case NormKind::Tag::weighted_l2: {
            Field w = f;
            for (int j = 0; j < f.grid.N; ++j) {
                const double x = f.grid.x(j);
                w[j] *= std::pow(1.0 + x * x, 0.5 * kind.delta);
            }
            return lp_norm(w, 2.0);
        }
    }
    return 0.0;
}

double hom_sobolev_l2(const Field& f, double sigma) {
    f.check_finite();
    if (sigma == 0.0) return lp_norm(f, 2.0);
    if (!(sigma > -0.5 && sigma <= 2.0)) throw ValidationError("Sobolev order out of range");
    const int n = f.grid.N;
    const int P = 4;
    const int np = P * n;
    CVec pad(np, cplx(0.0));
    const int off = (P - 1) * n / 2;
    for (int j = 0; j < n; ++j) pad[j + off] = f[j];
    const Grid1D pg(np, P * f.grid.L);
    const CVec h = fourier(Field(pg, std::move(pad), Space::physical, f.geom));
    const double dxi = pg.dxi();
    double S = 0.0;
    for (int k = 1; k < np; ++k) S += std::pow(std::abs(pg.xi(k)), 2.0 * sigma) * std::norm(h[k]);
    S *= dxi;

    // Trapezoid error from the |xi|^{2 sigma} cusp (Navot's expansion):
    //   S - I = 2 sum_m zeta(-2 sigma - 2m) e_m h^{2 sigma + 2m + 1},
    // e_m the xi^{2m} Taylor coefficient of |f^|^2 at 0, built from moments.
    constexpr int K = 7;
    std::array<cplx, K> a{};
    const double dx = f.grid.dx();
    for (int j = 0; j < n; ++j) {
        const double x = f.grid.x(j);
        double xp = dx;
        for (int m = 0; m < K; ++m) {
            a[m] += xp * f[j];
            xp *= x;
        }
    }
    double fact = 1.0;
    cplx mi = 1.0;
    for (int m = 0; m < K; ++m) {
        if (m > 0) fact *= m;
        a[m] *= mi / fact;
        mi *= cplx(0.0, -1.0);
    }
    double corr = 0.0;
    for (int m = 0; 2 * m < K; ++m) {
        double e = 0.0;
        for (int q = 0; q <= 2 * m; ++q) e += std::real(a[q] * std::conj(a[2 * m - q]));
        const double s = -2.0 * sigma - 2.0 * m;
        if (s == std::round(s) && s < 0.0 && static_cast<long>(s) % 2 == 0) continue;  // trivial zeros
        corr += 2.0 * boost::math::zeta(s) * e * std::pow(dxi, 2.0 * sigma + 2.0 * m + 1.0);
    }
    double I = (S - corr) / (2.0 * M_PI);
    if (f.geom == Geometry::radial_odd) I *= 2.0 * M_PI;
    return std::sqrt(std::max(I, 0.0));
}

double frequency_l2_norm(const Field& f) {
    const CVec h = fourier(f);
    double s = 0.0;
    for (const auto& z : h) s += std::norm(z);
    s *= f.grid.dxi() / (2.0 * M_PI);
    if (f.geom == Geometry::radial_odd) s *= 2.0 * M_PI;
    return std::sqrt(s);
}

namespace {

// Analytic model of g(y) = c2 y^2 + c4 y^4 integrated against y^{-1-2 delta}.
double small_y_piece(double g1, double g2, double h, double delta) {
    // c2 h^2 + c4 h^4 = g1, 4 c2 h^2 + 16 c4 h^4 = g2
    const double c4h4 = (g2 - 4.0 * g1) / 12.0;
    const double c2h2 = g1 - c4h4;
    const double yc = 2.0 * h;
    const double e2 = 2.0 - 2.0 * delta, e4 = 4.0 - 2.0 * delta;
    return c2h2 / (h * h) * std::pow(yc, e2) / e2 + c4h4 / std::pow(h, 4) * std::pow(yc, e4) / e4;
}

}  // namespace

double gagliardo_seminorm(const Field& f, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("Gagliardo order must lie in (0, 1)");
    if (f.geom != Geometry::cartesian) throw ValidationError("Gagliardo oracle implemented for d = 1 only");
    f.check_finite();
    const int n = f.grid.N;
    const double h = f.grid.dx();
    // g(m h) = \int |f(x - m h) - f(x)|^2 dx with zero extension outside the box.
    auto g_at = [&](int m) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const int i = j - m;
            const cplx shifted = (i >= 0 && i < n) ? f[i] : cplx(0.0);
            s += std::norm(shifted - f[j]);
        }
        // Nodes of f(x - mh) falling off the left edge of x-range.
        for (int j = n; j < n + m; ++j) {
            const int i = j - m;
            s += std::norm(f[i]);
        }
        return s * h;
    };
    double mass = 0.0;
    for (const auto& z : f.values) mass += std::norm(z);
    mass *= h;

    const int M = n;  // Y = 2L
    RVec g(M + 1, 0.0);
    for (int m = 1; m <= M; ++m) g[m] = g_at(m);

    double half = small_y_piece(g[1], g[2], h, delta);
    // Composite Simpson on [2h, Mh]; M - 2 is even since M is a power of two.
    auto integrand = [&](int m) { return g[m] * std::pow(m * h, -1.0 - 2.0 * delta); };
    double simpson = integrand(2) + integrand(M);
    for (int m = 3; m < M; ++m) simpson += (m % 2 ? 4.0 : 2.0) * integrand(m);
    half += simpson * h / 3.0;
    // Disjoint supports beyond Y: g = 2 |f|_2^2.
    const double Y = M * h;
    half += 2.0 * mass * std::pow(Y, -2.0 * delta) / (2.0 * delta);
    return 2.0 * half;
}

double smooth_step(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / s);
    const double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

double smooth_cutoff(double s) { return 1.0 - smooth_step(2.0 * std::abs(s) - 1.0); }

Field apply_window(const Field& f, double R) {
    Field w = f;
    for (int j = 0; j < f.grid.N; ++j) w[j] *= smooth_cutoff(std::abs(f.grid.x(j)) / R);
    return w;
}

WindowedNorm windowed_norm(const Field& f, double R, const NormKind& kind) {
    if (!(R > 0.0)) throw ValidationError("window radius must be positive");
    WindowedNorm out;
    if (R > f.grid.L) {
        R = f.grid.L;
        out.clamped = true;
    }
    out.value = norm(apply_window(f, R), kind);
    return out;
}

double l2_inner_real(const Field& f, const Field& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += std::real(std::conj(f[i]) * g[i]);
    return s * f.grid.dx();
}

double relative_l2_diff(const Field& a, const Field& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace selfsim
