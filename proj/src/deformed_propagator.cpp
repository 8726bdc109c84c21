#include "deformed_propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spectral_transform.hpp"

namespace selfsim {

namespace {

// (e^{2bt} - 1)/(2b), continuous at b = 0.
double chirp_time(double b, double t) {
    if (b == 0.0) return t;
    return std::expm1(2.0 * b * t) / (2.0 * b);
}

void check_resolved(const Field& u0, double band_fraction, double tol) {
    const CVec h = fourier(u0);
    const double cut = 0.9 * band_fraction * M_PI / u0.grid.dx();
    double total = 0.0, outer = 0.0;
    for (int k = 0; k < u0.grid.N; ++k) {
        const double e = std::norm(h[k]);
        total += e;
        if (std::abs(u0.grid.xi(k)) > cut) outer += e;
    }
    if (total > 0.0 && outer > tol * tol * total) {
        std::ostringstream os;
        os << "frequency overflow: relative spectral content " << std::sqrt(outer / total)
           << " beyond the resolved band (tolerance " << tol << ")";
        throw NumericalError(os.str());
    }
}

}  // namespace

double PropagatorPlan::time_budget(double b, int oversample) {
    if (b == 0.0) return HUGE_VAL;
    return std::log(static_cast<double>(oversample)) / std::abs(b);
}

PropagatorPlan::PropagatorPlan(const Grid1D& grid, double b, double t, int oversample, double overflow_tol)
    : grid_(grid), b_(b), t_(t), M_(oversample), overflow_tol_(overflow_tol) {
    if (oversample < 2) throw ValidationError("oversampling factor must be >= 2");
    if (!std::isfinite(b) || !std::isfinite(t)) throw ValidationError("non-finite propagation parameters");
    scale_ = std::exp(b * t);
    if (scale_ > M_ * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "propagation time " << t << " exceeds the rescale budget " << time_budget(b, M_)
           << " for oversampling " << M_;
        throw ValidationError(os.str());
    }
    const int N = grid.N;
    const int Np = M_ * N;
    const double half = 0.5 * Np;
    czt_ = std::make_unique<ChirpTransform>(N, Np, scale_ / Np, half);
    node_factor_.assign(Np, cplx(0.0));
    const double dx = grid.dx();
    const double dxi_p = M_PI / (M_ * grid.L);
    const double amp = std::exp(0.5 * b * t) * dx;
    const double ct = chirp_time(b, t);
    for (int k = 0; k < Np; ++k) {
        const double kk = k - half;
        if (std::abs(scale_ * kk) > half) continue;
        const double xi = kk * dxi_p;
        // e^{i s k' pi / M} from the x_0 = -L origin, then the quadratic chirp.
        const double ph = std::fmod(scale_ * kk / M_, 2.0) * M_PI - ct * xi * xi;
        node_factor_[k] = amp * std::polar(1.0, ph);
    }
}

Field PropagatorPlan::apply(const Field& u0) const {
    if (!(u0.grid == grid_)) throw ValidationError("field grid does not match propagator plan");
    u0.check_finite();
    if (t_ == 0.0) return u0;
    check_resolved(u0, std::min(1.0, scale_), overflow_tol_);
    const int N = grid_.N;
    const int Np = M_ * N;
    CVec spec(Np);
    czt_->apply(u0.values.data(), spec.data());
    CVec fft_order(Np);
    for (int k = 0; k < Np; ++k) {
        const int kk = k - Np / 2;
        fft_order[(kk + Np) % Np] = spec[k] * node_factor_[k];
    }
    const Grid1D padded(Np, M_ * grid_.L);
    const Field big = inverse_fourier(padded, std::move(fft_order), u0.geom);
    CVec out(N);
    const int off = (M_ - 1) * N / 2;
    for (int j = 0; j < N; ++j) out[j] = big[j + off];
    return Field(grid_, std::move(out), Space::physical, u0.geom);
}

Field propagate(const Field& u0, double t, double b, int oversample) {
    return PropagatorPlan(u0.grid, b, t, oversample).apply(u0);
}

Field free_schrodinger(const Field& u0, double t) {
    u0.check_finite();
    return apply_multiplier(u0, [t](double xi) { return std::polar(1.0, -t * xi * xi); });
}

Field sample_dilated(const Field& f, double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("dilation factor must be positive");
    const int N = f.grid.N;
    const int M = 2;
    const int Np = M * N;
    // Zero-padded spectrum in centered order.
    CVec padded(Np, cplx(0.0));
    const int off = (M - 1) * N / 2;
    for (int j = 0; j < N; ++j) padded[j + off] = f[j];
    const Grid1D pg(Np, M * f.grid.L);
    const Field pf(pg, std::move(padded), Space::physical, f.geom);
    const CVec h = fourier(pf);
    CVec centered(Np);
    for (int k = 0; k < Np; ++k) {
        const int kk = k - Np / 2;
        // f(y) = (1/2pi) sum_k f^_k e^{i xi_k y} dxi; fold in e^{-i lambda k' pi/M}.
        const double ph = -std::fmod(lambda * kk / M, 2.0) * M_PI;
        centered[k] = h[(kk + Np) % Np] * std::polar(1.0, ph);
    }
    // sum_k c_k exp(2 pi i (lambda/Np) (k - Np/2) j) = CZT with beta = -lambda/Np on input index k.
    // Output phase for the input offset: exp(-2 pi i beta' K0 j) handled by k0 in the transform
    // with the roles of indices swapped: X_j = sum_k c_k exp(-2 pi i beta k j) exp(2 pi i beta K0 j).
    const double beta = -lambda / Np;
    ChirpTransform czt(Np, N, beta, 0.0);
    CVec out(N);
    czt.apply(centered.data(), out.data());
    const double dxi = M_PI / pg.L;
    for (int j = 0; j < N; ++j) {
        const double ph = std::fmod(2.0 * beta * (0.5 * Np) * j, 2.0) * M_PI;
        out[j] *= std::polar(dxi / (2.0 * M_PI), ph);
    }
    return Field(f.grid, std::move(out), Space::physical, f.geom);
}

Field propagate_via_rescaling(const Field& u0, double tau, double b) {
    if (!(b > 0.0)) throw ValidationError("rescaling oracle needs b > 0");
    const double t = -std::expm1(-2.0 * b * tau) / (2.0 * b);
    const double lambda = std::exp(-b * tau);
    // Same budget as a 16x oversampled plan.
    if (lambda < 1.0 / 16.0) throw ValidationError("rescaling oracle: tau exceeds the grid's rescale budget");
    const Field w = free_schrodinger(u0, t);
    Field out = sample_dilated(w, lambda);
    const double amp = std::sqrt(lambda);  // lambda^{d/2}, d = 1 line form
    for (auto& z : out.values) z *= amp;
    return out;
}

double dispersive_norm_L1_Linf(double t, double b, int d) {
    if (t == 0.0) throw ValidationError("dispersive kernel is singular at t = 0");
    if (d < 1) throw ValidationError("dimension must be >= 1");
    const double bt = b * t;
    const double shape = std::abs(bt) < 1e-8 ? 1.0 + bt * bt / 6.0 : std::sinh(bt) / bt;
    const double eff = std::abs(t * shape);
    return std::pow(4.0 * M_PI * eff, -0.5 * d);
}

bool admissible(double q, double p, int d) {
    if (std::isinf(q) && p == 2.0) return true;
    if (q == 2.0 && std::isinf(p)) return false;
    if (!(q >= 2.0)) return false;
    if (!(p > 2.0)) return false;
    const double lhs = (std::isinf(q) ? 0.0 : 2.0 / q) + (std::isinf(p) ? 0.0 : d / p);
    return lhs >= 0.5 * d;
}

StrichartzSample strichartz_sample(const Field& u0, double q, double p, double b, double T, int n_t) {
    if (!(q >= 1.0) || !(p >= 2.0)) throw ValidationError("need q >= 1 and p >= 2");
    if (!(T > 0.0) || n_t < 8) throw ValidationError("need T > 0 and at least 8 samples");
    StrichartzSample out;
    const double t_min = std::min(1e-3, T * 1e-3) / std::max(1.0, std::abs(b));
    out.times.resize(n_t);
    for (int i = 0; i < n_t; ++i) out.times[i] = t_min * std::pow(T / t_min, static_cast<double>(i) / (n_t - 1));

    const int d = u0.dim();
    auto norm_at = [&](double t) {
        if (b > 0.0) {
            // |e^{it Delta_b} u0|_p = lambda^{d/2 - d/p} |e^{is Delta} u0|_p with
            // s = (1 - e^{-2bt})/(2b), lambda = e^{-bt}: the free time stays bounded.
            const double s = -std::expm1(-2.0 * b * t) / (2.0 * b);
            const double lam = std::exp(-b * t);
            const double expo = 0.5 * d - (std::isinf(p) ? 0.0 : d / p);
            return std::pow(lam, expo) * lp_norm(free_schrodinger(u0, s), p);
        }
        if (b == 0.0) return lp_norm(free_schrodinger(u0, t), p);
        return lp_norm(propagate(u0, t, b), p);
    };

    RVec vals(n_t);
    for (int i = 0; i < n_t; ++i) vals[i] = norm_at(out.times[i]);
    out.running.assign(n_t, 0.0);
    if (std::isinf(q)) {
        double m = lp_norm(u0, p);
        for (int i = 0; i < n_t; ++i) {
            m = std::max(m, vals[i]);
            out.running[i] = m;
        }
    } else {
        // [0, t_min] by the left endpoint value, then trapezoid in log t.
        double acc = std::pow(lp_norm(u0, p), q) * out.times[0];
        out.running[0] = acc;
        for (int i = 1; i < n_t; ++i) {
            const double g0 = std::pow(vals[i - 1], q) * out.times[i - 1];
            const double g1 = std::pow(vals[i], q) * out.times[i];
            acc += 0.5 * (g0 + g1) * std::log(out.times[i] / out.times[i - 1]);
            out.running[i] = acc;
        }
    }
    out.integral = out.running.back();
    // Increment over the last decade of T.
    const double t_dec = T / 10.0;
    int i_dec = 0;
    while (i_dec + 1 < n_t && out.times[i_dec + 1] <= t_dec) ++i_dec;
    const double inc = out.integral - out.running[i_dec];
    out.saturated = out.integral > 0.0 && inc < 1e-6 * out.integral;
    return out;
}

}  // namespace selfsim
