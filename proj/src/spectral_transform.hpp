#pragma once

#include <functional>

#include "core_types.hpp"

namespace selfsim {

struct NormKind {
    enum class Tag { lp, hom_sobolev, weighted_l2 };
    Tag tag = Tag::lp;
    double p = 2.0;      // Lebesgue exponent (lp, hom_sobolev)
    double sigma = 0.0;  // derivative order (hom_sobolev)
    double delta = 0.0;  // weight exponent <x>^delta (weighted_l2)

    static NormKind Lp(double p);
    static NormKind HomSobolev(double sigma, double p = 2.0);
    static NormKind WeightedL2(double delta);
};

// Continuous Fourier transform f^(xi) = \int f(x) e^{-i x xi} dx sampled at
// the grid frequencies (FFT order), midpoint quadrature.
CVec fourier(const Field& f);
Field inverse_fourier(const Grid1D& g, CVec fhat, Geometry geom = Geometry::cartesian);

// F^{-1}[m(xi) f^].
Field apply_multiplier(const Field& f, const std::function<cplx(double)>& m);

// |xi|^alpha multiplier; the zero mode is dropped for alpha < 0.
Field fractional_derivative(const Field& f, double alpha);

double lp_norm(const Field& f, double p);
// |D^sigma f|_{L^2} of the band-limited interpolant (zero outside the box):
// zero-padded trapezoid in frequency with the cusp at xi = 0 corrected.
double hom_sobolev_l2(const Field& f, double sigma);
double norm(const Field& f, const NormKind& kind);
// sqrt((1/2pi) \int |f^|^2) from the transformed samples.
double frequency_l2_norm(const Field& f);

// \int\int |f(x-y) - f(x)|^2 / |y|^{1+2 delta} dy dx (d = 1, no constant).
double gagliardo_seminorm(const Field& f, double delta);

// Smooth (C-infinity) step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s);
// Cutoff profile: 1 on [0, 1/2], 0 beyond 1.
double smooth_cutoff(double s);

Field apply_window(const Field& f, double R);

struct WindowedNorm {
    double value = 0.0;
    bool clamped = false;  // R was larger than the box and got clamped
};
WindowedNorm windowed_norm(const Field& f, double R, const NormKind& kind);

double l2_inner_real(const Field& f, const Field& g);
double relative_l2_diff(const Field& a, const Field& b);
double max_abs_diff(const Field& a, const Field& b);

}  // namespace selfsim
