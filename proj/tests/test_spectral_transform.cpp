#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "spectral_transform.hpp"

using namespace selfsim;

namespace {

Field sample(const Grid1D& g, const std::function<cplx(double)>& f, Geometry ge = Geometry::cartesian) {
    Field out = Field::zeros(g, ge);
    for (int j = 0; j < g.N; ++j) out[j] = f(g.x(j));
    return out;
}

double gauss(double x, double w) { return std::exp(-x * x / (2.0 * w * w)); }

}  // namespace

TEST_CASE("fractional derivative basics") {
    const Grid1D g(128, 2.0 * M_PI);
    const Field s = sample(g, [](double x) { return std::sin(3.0 * x); });
    CHECK(max_abs_diff(fractional_derivative(s, 0.0), s) == 0.0);
    const double sig = 0.37;
    const Field ds = fractional_derivative(s, sig);
    const double k = 3.0;  // box length 4 pi keeps sin(3x) periodic
    double err = 0.0;
    for (int j = 0; j < g.N; ++j) err = std::max(err, std::abs(ds[j] - std::pow(k, sig) * s[j]));
    CHECK(err < 1e-12);

    // zero-mean field: D^a D^b = D^{a+b} and D^s D^{-s} = id
    const Grid1D h(256, 20.0);
    const Field f = sample(h, [](double x) { return cplx(x * gauss(x, 1.0), std::sin(x) * gauss(x, 1.3)); });
    const Field back = fractional_derivative(fractional_derivative(f, 0.3), -0.3);
    CHECK(relative_l2_diff(back, f) < 1e-12);
    const Field ab = fractional_derivative(fractional_derivative(f, 0.25), 0.4);
    CHECK(max_abs_diff(ab, fractional_derivative(f, 0.65)) < 1e-10);

    CHECK_THROWS_AS(fractional_derivative(f, 2.5), ValidationError);
    CHECK_THROWS_AS(fractional_derivative(f, -0.6), ValidationError);
    Field bad = f;
    bad[0] = cplx(INFINITY, 0.0);
    CHECK_THROWS_AS(fractional_derivative(bad, 0.3), ValidationError);
}

TEST_CASE("Lebesgue and Sobolev norms") {
    const Grid1D g(512, 16.0);
    const Field f = sample(g, [](double x) { return gauss(x, 1.0); });
    CHECK(norm(f, NormKind::Lp(2.0)) == doctest::Approx(std::pow(M_PI, 0.25)).epsilon(1e-12));
    CHECK(std::abs(norm(f, NormKind::HomSobolev(0.0)) - norm(f, NormKind::Lp(2.0))) < 1e-12);
    CHECK(norm(f, NormKind::Lp(INFINITY)) == doctest::Approx(1.0));

    // |D^{1/2} e^{-x^2/2}|^2 = (1/2pi) \int |xi| 2 pi e^{-xi^2} dxi, by Simpson on the frequency axis.
    double q = 0.0;
    const int n = 4000;
    const double X = 10.0, h = X / n;
    for (int i = 0; i <= n; ++i) {
        const double xi = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        q += w * xi * std::exp(-xi * xi);
    }
    q *= 2.0 * h / 3.0;
    CHECK(norm(f, NormKind::HomSobolev(0.5)) == doctest::Approx(std::sqrt(q)).epsilon(1e-10));
    // the multiplier route on the periodic grid carries the O(dxi^{1+2s}) cusp error
    CHECK(lp_norm(fractional_derivative(f, 0.5), 2.0) == doctest::Approx(1.0).epsilon(1e-2));

    // weighted L2 with delta = 1: \int (1 + x^2) e^{-x^2} = 1.5 sqrt(pi)
    CHECK(norm(f, NormKind::WeightedL2(1.0)) == doctest::Approx(std::sqrt(1.5 * std::sqrt(M_PI))).epsilon(1e-12));
}

TEST_CASE("Plancherel on several grids") {
    for (int n : {64, 256, 1024}) {
        for (double L : {5.0, 13.0}) {
            const Grid1D g(n, L);
            const Field f = sample(g, [](double x) { return cplx(gauss(x - 0.3, 0.8), 0.2 * x * gauss(x, 0.6)); });
            const double a = lp_norm(f, 2.0), b = frequency_l2_norm(f);
            CHECK(std::abs(a - b) < 1e-12 * a);
        }
    }
}

TEST_CASE("radial d = 3 through u = r f") {
    const Grid1D g(512, 16.0);
    const Field u = sample(g, [](double x) { return x * gauss(x, 1.0); }, Geometry::radial_odd);
    // |f|_2^2 = pi^{3/2}, |grad f|^2 = 3 pi^{3/2} / 2
    CHECK(norm(u, NormKind::Lp(2.0)) == doctest::Approx(std::pow(M_PI, 0.75)).epsilon(1e-12));
    CHECK(norm(u, NormKind::HomSobolev(1.0)) == doctest::Approx(std::sqrt(1.5 * std::pow(M_PI, 1.5))).epsilon(1e-10));
    CHECK(frequency_l2_norm(u) == doctest::Approx(std::pow(M_PI, 0.75)).epsilon(1e-12));
    // \int e^{-2 r^2} 4 pi r^2 dr = (pi/2)^{3/2}
    CHECK(norm(u, NormKind::Lp(4.0)) == doctest::Approx(std::pow(std::pow(M_PI / 2.0, 1.5), 0.25)).epsilon(1e-10));
}

TEST_CASE("Gagliardo oracle") {
    const Grid1D g(1024, 24.0);
    CHECK(gagliardo_seminorm(sample(g, [](double) { return 0.0; }), 0.3) == 0.0);
    CHECK_THROWS_AS(gagliardo_seminorm(sample(g, [](double x) { return gauss(x, 1.0); }), 1.0), ValidationError);

    for (double delta : {0.25, 0.5, 0.7}) {
        // constant fitted once on the reference Gaussian
        const Field ref = sample(g, [](double x) { return gauss(x, 1.0); });
        const double C = gagliardo_seminorm(ref, delta) / std::pow(norm(ref, NormKind::HomSobolev(delta)), 2);
        const std::vector<std::function<cplx(double)>> family = {
            [](double x) { return gauss(x, 0.7); },
            [](double x) { return gauss(x, 1.6); },
            [](double x) { return x * gauss(x, 1.0); },
            [](double x) { return std::exp(-std::pow(x, 4) / 4.0); },
            [](double x) { return std::cos(2.0 * x) * gauss(x, 1.2) + cplx(0.0, 0.3) * gauss(x - 1.0, 0.9); },
        };
        double lo = 1e300, hi = 0.0;
        for (const auto& fn : family) {
            const Field f = sample(g, fn);
            const double r = gagliardo_seminorm(f, delta) / (C * std::pow(norm(f, NormKind::HomSobolev(delta)), 2));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(hi - lo < 0.02);
        CHECK(lo > 0.98);

        // f(x / lambda): seminorm^2 scales like lambda^{1 - 2 delta}
        const double lam = 1.7;
        const double s1 = gagliardo_seminorm(sample(g, [](double x) { return gauss(x, 1.0); }), delta);
        const double s2 = gagliardo_seminorm(sample(g, [lam](double x) { return gauss(x / lam, 1.0); }), delta);
        CHECK(s2 / s1 == doctest::Approx(std::pow(lam, 1.0 - 2.0 * delta)).epsilon(0.01));
    }
}

TEST_CASE("windowed norms") {
    CHECK(smooth_cutoff(0.3) == 1.0);
    CHECK(smooth_cutoff(1.2) == 0.0);
    CHECK(smooth_cutoff(0.75) == doctest::Approx(0.5));
    const Grid1D g(512, 32.0);
    const Field f = sample(g, [](double x) { return gauss(x, 1.0); });
    for (const auto& k : {NormKind::Lp(2.0), NormKind::Lp(5.0), NormKind::HomSobolev(0.3)}) {
        const auto w = windowed_norm(f, 25.0, k);
        CHECK(!w.clamped);
        CHECK(std::abs(w.value - norm(f, k)) < 1e-10);
    }
    CHECK(windowed_norm(f, 100.0, NormKind::Lp(2.0)).clamped);
    CHECK(windowed_norm(f, 1.0, NormKind::Lp(2.0)).value < norm(f, NormKind::Lp(2.0)));
}
