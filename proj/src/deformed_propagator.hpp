#pragma once

#include <memory>

#include "core_types.hpp"
#include "fft.hpp"

namespace selfsim {

// Exact evaluation of exp(it Delta_b) on a uniform periodic grid:
//   u^(t, xi) = e^{b t/2} u0^(e^{bt} xi) exp(-i (e^{2bt}-1)/(2b) xi^2)
// (the d = 1 formula; radial d = 3 data in the u = r f form obeys the same
// law). u0^ is evaluated at the scaled nodes by a chirp transform over the
// original samples; the output lives on an oversampled box and is cropped.
class PropagatorPlan {
public:
    PropagatorPlan(const Grid1D& grid, double b, double t, int oversample = 2,
                   double overflow_tol = 1e-10);

    Field apply(const Field& u0) const;

    double b() const { return b_; }
    double t() const { return t_; }
    const Grid1D& grid() const { return grid_; }
    int oversample() const { return M_; }
    // Largest |t| allowed for this grid and oversampling at rate b.
    static double time_budget(double b, int oversample);

private:
    Grid1D grid_;
    double b_, t_;
    int M_;
    double overflow_tol_;
    double scale_;  // e^{bt}
    std::unique_ptr<ChirpTransform> czt_;
    CVec node_factor_;  // per padded frequency: dx * phase * amplitude * chirp, zero if out of band
};

Field propagate(const Field& u0, double t, double b, int oversample = 2);
Field free_schrodinger(const Field& u0, double t);
Field propagate_via_rescaling(const Field& u0, double tau, double b);

// Samples f (band-limited interpolant from its grid values) at x_j * lambda.
Field sample_dilated(const Field& f, double lambda);

double dispersive_norm_L1_Linf(double t, double b, int d);

bool admissible(double q, double p, int d);

struct StrichartzSample {
    double integral = 0.0;
    bool saturated = false;
    RVec times;
    RVec running;  // running integral at each sample time
};

// \int_0^T |exp(it Delta_b) u0|_{L^p}^q dt over n_t log-spaced times
// (q = infinity: sup over the samples).
StrichartzSample strichartz_sample(const Field& u0, double q, double p, double b, double T, int n_t);

}  // namespace selfsim
