#pragma once

#include <functional>
#include <initializer_list>
#include <memory>

#include "core_types.hpp"

namespace selfsim {

enum class Branch { plus, minus };

struct SpectralPoint {
    cplx z;
    Branch branch = Branch::plus;
};

// Throws ValidationError outside the validity region (with a 0.05 b margin):
// plus needs Im z > -b min(d/2, 1), minus the mirrored condition.
void check_validity(const SpectralPoint& pt, double b, int d);

// Evaluates f^ at arbitrary frequencies. Zero-padded FFT samples plus
// local barycentric interpolation; exact() is the direct DTFT sum.
// For radial_odd data it returns the d = 3 radial transform at |eta|.
class SpectralSampler {
public:
    explicit SpectralSampler(const Field& f, int pad = 8, int order = 20);
    cplx operator()(double eta) const;
    cplx exact(double eta) const;
    double band() const { return M_PI / grid_.dx(); }
    // Radius outside which |f| is negligible; bounds the phase rate of f^.
    double support_extent() const { return extent_; }
    // Leading small-frequency terms A rho^gamma of f^(rho omega).
    std::vector<std::pair<cplx, double>> small_rho_terms(int omega) const;
    int dim() const { return geom_ == Geometry::cartesian ? 1 : 3; }
    // Frequency beyond which |f^| < tol * max |f^|.
    double effective_band(double tol = 1e-14) const;

private:
    cplx line_value(double eta) const;
    Grid1D grid_;
    Geometry geom_;
    CVec samples_;
    CVec data_;
    double h_;
    int order_;
    RVec bary_;
    double extent_ = 0.0;
    CVec moments_;  // \int x^n f
};

struct RayPanel {
    double lo, hi;  // in s = ln rho for log panels, rho otherwise
    bool log;
};

// Composite Gauss-Legendre node set on the frequency half-line.
struct RayGrid {
    std::vector<RayPanel> panels;
    RVec rho, w;  // nodes and weights for d rho
    double rho_min = 0.0, rho_max = 0.0;
    std::size_t size() const { return rho.size(); }
};

struct RayGridSpec {
    double b = 1.0;
    double rho_min = 1e-8;
    double rho_max = 10.0;
    double max_abs_re_z = 0.0;  // largest |Re z| the grid has to resolve
    double max_abs_im_z = 0.0;
    double x_extent = 10.0;
    double phase_per_panel = M_PI;
};

RayGrid make_ray_grid(const RayGridSpec& spec);

using PowerTerms = std::vector<std::pair<cplx, cplx>>;  // (A, gamma): sum A rho^gamma

// Samples on rays omega = +1, -1 (d = 1) or the single radial ray (d = 3).
// Below rho_min the field is the power sum `lead`; above rho_max it is
// exp(i rho^2 / (2 tail_b)) times the power sum `tail` (empty when zero).
struct RayField {
    std::shared_ptr<const RayGrid> grid;
    int dim = 1;
    std::vector<CVec> rays;
    std::vector<PowerTerms> lead;
    std::vector<PowerTerms> tail;
    double tail_b = 0.0;

    int n_rays() const { return static_cast<int>(rays.size()); }
    int omega(int r) const { return r == 0 ? 1 : -1; }
};

RayField sample_rays(const SpectralSampler& s, std::shared_ptr<const RayGrid> g);
// Transform of a physical field sampled directly on the rays (no asymptotic terms).
RayField rays_from_function(std::shared_ptr<const RayGrid> g, int dim, const std::function<cplx(double)>& fhat);

double l2_norm(const RayField& f);
RayField axpy(cplx a, const RayField& x, const RayField& y);  // a x + y
double relative_l2_diff(const RayField& a, const RayField& b);

// Frequency-side (-Delta_b - z): (rho^2 - z) g + i b (d/2 + rho d/drho) g.
RayField minus_delta_b_minus_z(const RayField& g, cplx z, double b);
// Multiply by rho^s, i.e. D^s.
RayField rho_power(const RayField& g, double s);

RayField resolvent_rays(const RayField& f, const SpectralPoint& pt, double b);
RayField resolvent_time_integral_rays(const SpectralSampler& f, std::shared_ptr<const RayGrid> g,
                                      const SpectralPoint& pt, double b, double T_max,
                                      double weight_rate = 0.0);

// Grid fitted to f and the spectral points involved.
std::shared_ptr<const RayGrid> ray_grid_for(const SpectralSampler& s, double b, std::initializer_list<cplx> zs);

// Physical-space reconstruction on the given grid (inverse transform by quadrature).
Field rays_to_field(const RayField& g, const Grid1D& grid);

Field apply_delta_b(const Field& f, double b);
Field resolvent_apply(const Field& f, const SpectralPoint& pt, double b);
Field resolvent_via_time_integral(const Field& f, const SpectralPoint& pt, double b, double T_max);

// Same-family residual |R(z)f - R(z2)f - (z - z2) R(z) R(z2) f| / |f|, both plus;
// mixed = true uses R+(z), R-(z2) and needs Im z > Im z2.
double resolvent_identity_residual(const Field& f, cplx z, cplx z2, double b, bool mixed = false);
double sigma_shift_check(const Field& f, cplx z, double b, double sigma, Branch branch = Branch::plus);
// D^s-conjugated resolvent against the time integral with weight e^{-b s t}.
double sigma_shift_time_check(const Field& f, cplx z, double b, double sigma, double T_max);
double inversion_residual(const Field& f, const SpectralPoint& pt, double b);

struct DecayScan {
    RVec lambdas;
    RVec single;      // |R+(lambda + iy) f|_p
    RVec difference;  // |(R+(lambda + iy) - R-(lambda - iy)) f|_p
    double single_slope = 0.0;
    double difference_slope = 0.0;
    double single_r2 = 0.0, difference_r2 = 0.0;
};
DecayScan lambda_decay_scan(const Field& f, double y, double b, const RVec& lambdas, double p = 2.0);

}  // namespace selfsim
