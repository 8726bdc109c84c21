#include "renormalized_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spectral_transform.hpp"

namespace selfsim {

namespace {

constexpr cplx I1(0.0, 1.0);

double field_norm2(const Field& f) {
    double s = 0.0;
    for (const cplx& z : f.values) s += std::norm(z);
    return s;
}

bool finite_positive(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void check_flow_config(const FlowConfig& cfg, const Grid1D& grid, double b) {
    if (!(cfg.dtau > 0.0)) throw ValidationError("dtau must be positive");
    if (!(cfg.tau_end >= 0.0)) throw ValidationError("tau_end must be nonnegative");
    if (cfg.cadence < 1) throw ValidationError("diagnostics cadence must be >= 1");
    if (!(cfg.interior > 0.0 && cfg.interior <= 1.0)) throw ValidationError("interior fraction must be in (0, 1]");
    if (cfg.sponge.enabled) {
        if (cfg.sponge.inner < 0.7) throw ValidationError("sponge inner radius must be >= 0.7 L");
        if (!(cfg.sponge.outer > cfg.sponge.inner && cfg.sponge.outer <= 1.0))
            throw ValidationError("sponge outer radius must lie in (inner, L]");
        if (!(cfg.sponge.rate >= 0.0)) throw ValidationError("sponge rate must be nonnegative");
    }
    if (cfg.dtau > PropagatorPlan::time_budget(b, cfg.oversample))
        throw ValidationError("dtau exceeds the propagator's rescale budget");
    (void)grid;
}

Field nonlinear_substep(const Field& v, double dtau, double p) {
    Field out = v;
    for (auto& z : out.values) z *= std::polar(1.0, dtau * std::pow(std::abs(z), p - 1.0));
    return out;
}

Field linear_substep(const Field& v, double dtau, const ModelParams& mp, int oversample) {
    if (dtau == 0.0) return v;
    Field out = PropagatorPlan(v.grid, mp.b, dtau, oversample).apply(v);
    const cplx f = std::exp(cplx(mp.b * mp.s_c * dtau, -dtau));
    for (auto& z : out.values) z *= f;
    return out;
}

RVec sponge_profile(const Grid1D& grid, const Sponge& s) {
    RVec ramp(grid.N, 0.0);
    if (!s.enabled) return ramp;
    const double a = s.inner * grid.L, w = (s.outer - s.inner) * grid.L;
    for (int j = 0; j < grid.N; ++j) ramp[j] = smooth_step((std::abs(grid.x(j)) - a) / w);
    return ramp;
}

FlowStepper::FlowStepper(const Grid1D& grid, const ModelParams& mp, const FlowConfig& cfg)
    : grid_(grid), mp_(mp), cfg_(cfg) {
    check_flow_config(cfg, grid, mp.b);
    plan_ = std::make_unique<PropagatorPlan>(grid, mp.b, cfg.dtau, cfg.oversample, cfg.overflow_tol);
    const RVec ramp = sponge_profile(grid, cfg.sponge);
    half_mask_.resize(grid.N);
    for (int j = 0; j < grid.N; ++j) half_mask_[j] = std::exp(-0.5 * cfg.sponge.rate * cfg.dtau * ramp[j]);
}

Field FlowStepper::linear(const Field& v) const {
    Field out = plan_->apply(v);
    const cplx f = std::exp(cplx(mp_.b * mp_.s_c * cfg_.dtau, -cfg_.dtau));
    for (auto& z : out.values) z *= f;
    return out;
}

Field FlowStepper::step(const Field& v) const {
    const double half = 0.5 * cfg_.dtau;
    Field w = v;
    const bool sponge = cfg_.sponge.enabled && cfg_.sponge.rate > 0.0;
    // sponge and nonlinear phase are both pointwise and commute
    for (int j = 0; j < grid_.N; ++j) {
        cplx& z = w.values[j];
        if (cfg_.nonlinear) z *= std::polar(1.0, half * std::pow(std::abs(z), mp_.p - 1.0));
        if (sponge) z *= half_mask_[j];
    }
    w = linear(w);
    for (int j = 0; j < grid_.N; ++j) {
        cplx& z = w.values[j];
        if (cfg_.nonlinear) z *= std::polar(1.0, half * std::pow(std::abs(z), mp_.p - 1.0));
        if (sponge) z *= half_mask_[j];
    }
    return w;
}

Field strang_step(const Field& v, double dtau, const ModelParams& mp, const FlowConfig& cfg) {
    FlowConfig c = cfg;
    c.dtau = dtau;
    return FlowStepper(v.grid, mp, c).step(v);
}

DiagnosticsSeries evolve(const Field& v0, const Field& reference, const FlowConfig& cfg, const ModelParams& mp) {
    if (!(reference.grid == v0.grid) || reference.geom != v0.geom)
        throw ValidationError("reference field must share the flow grid");
    v0.check_finite();
    const FlowStepper stepper(v0.grid, mp, cfg);
    const double R = cfg.interior * v0.grid.L;
    const NormKind k_sigma = NormKind::HomSobolev(mp.sigma), k_sc = NormKind::HomSobolev(mp.s_c),
                   k_pc = NormKind::Lp(mp.p_c);
    DiagnosticsSeries s;
    auto record = [&](double tau, const Field& v) {
        Field eps = v;
        for (std::size_t i = 0; i < eps.size(); ++i) eps[i] -= reference[i];
        s.taus.push_back(tau);
        s.hsigma_eps.push_back(windowed_norm(eps, R, k_sigma).value);
        s.hsc_v.push_back(windowed_norm(v, R, k_sc).value);
        s.lpc_v.push_back(windowed_norm(v, R, k_pc).value);
    };
    const long steps = std::lround(cfg.tau_end / cfg.dtau);
    Field v = v0;
    // the propagator extends by zero outside the box, so the data must fade out
    const RVec ramp = sponge_profile(v.grid, cfg.sponge);
    for (int j = 0; j < v.grid.N; ++j) v[j] *= 1.0 - ramp[j];
    record(0.0, v);
    const double base = std::max({s.hsigma_eps[0], s.hsc_v[0], 1e-300});
    const double base_mass = std::max(field_norm2(v), 1e-300);
    for (long n = 1; n <= steps; ++n) {
        try {
            v = stepper.step(v);
        } catch (const NumericalError& e) {
            s.aborted = true;
            s.note = std::string(e.what()) + " at tau = " + std::to_string(n * cfg.dtau);
            break;
        }
        const bool last = n == steps;
        const double m2 = field_norm2(v);
        if (!std::isfinite(m2) || m2 > cfg.blowup_factor * cfg.blowup_factor * base_mass) {
            s.aborted = true;
            s.note = "field norm blew up at tau = " + std::to_string(n * cfg.dtau);
            break;
        }
        if (n % cfg.cadence == 0 || last) {
            record(n * cfg.dtau, v);
            const double worst = std::max(s.hsigma_eps.back(), s.hsc_v.back());
            if (!finite_positive(worst) || worst > cfg.blowup_factor * base) {
                s.aborted = true;
                s.note = "norm exceeded the blow-up factor at tau = " + std::to_string(n * cfg.dtau);
                break;
            }
        }
    }
    s.final_state = v;
    return s;
}

Field profile_field(const Profile& prof, const Grid1D& grid) {
    const CVec Q = profile_on_line(prof, grid);
    if (prof.params.d == 1) return Field(grid, Q);
    if (prof.params.d != 3) throw ValidationError("flow supports d = 1 and radial d = 3");
    Field f(grid, Q, Space::physical, Geometry::radial_odd);
    for (int j = 0; j < grid.N; ++j) f[j] *= grid.x(j);
    return f;
}

EssentialProjection project_essential(const Field& eps0, const Profile& prof, double r_op, const EigenOptions& eo) {
    const Grid1D& g = eps0.grid;
    const double h = g.dx();
    const int c = g.N / 2;  // x_c = 0
    const int M = static_cast<int>(std::floor(r_op / h + 1e-9));
    if (M < 8 || M >= c) throw ValidationError("projection radius must cover 8 nodes and stay inside the box");
    EssentialProjection out;
    out.projected = eps0;
    double removed2 = 0.0, total2 = 0.0;
    const bool radial = eps0.geom == Geometry::radial_odd;
    for (Parity par : {Parity::even, Parity::odd}) {
        if (radial && par == Parity::even) continue;
        OperatorOptions o;
        o.h = h;
        o.r_max = M * h;
        o.parity = par;
        const OperatorDisc H = assemble_H(prof, o);
        const EigenSet e = discrete_spectrum(H, eo);
        const Projections P = riesz_projections(e, H);
        for (const cplx& z : e.tagged()) out.tagged.push_back(z);
        out.removed_modes += P.rank;
        const std::size_t n = H.n();
        const int m0 = par == Parity::odd ? 1 : 0;
        const double sgn = par == Parity::odd ? -1.0 : 1.0;
        CVec Z(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const int m = m0 + static_cast<int>(i);
            const cplx part = 0.5 * (eps0[c + m] + sgn * eps0[c - m]);
            Z[i] = part;
            Z[n + i] = std::conj(part);
        }
        CVec PZ(2 * n, 0.0);
        for (std::size_t j = 0; j < 2 * n; ++j)
            for (std::size_t i = 0; i < 2 * n; ++i) PZ[i] += P.P_disc(i, j) * Z[j];
        for (std::size_t i = 0; i < n; ++i) {
            const int m = m0 + static_cast<int>(i);
            const cplx d = PZ[i];
            removed2 += std::norm(d);
            total2 += std::norm(Z[i]);
            if (m == 0) {
                out.projected[c] -= d;
            } else {
                out.projected[c + m] -= d;
                out.projected[c - m] -= sgn * d;
            }
        }
    }
    out.removed_fraction = total2 > 0.0 ? std::sqrt(removed2 / total2) : 0.0;
    return out;
}

PerturbationResult perturbation_experiment(const Profile& prof, const Field& eps0, const FlowConfig& cfg,
                                           double sigma, std::uint64_t seed) {
    ModelParams mp = derive_params(prof.params.d, prof.params.p, prof.b_star, sigma);
    require_flow_sigma(mp);
    const Field Q = profile_field(prof, eps0.grid);
    if (eps0.geom != Q.geom) throw ValidationError("perturbation geometry does not match the profile");
    const double R = cfg.interior * eps0.grid.L;
    const double qn = windowed_norm(Q, R, NormKind::HomSobolev(sigma)).value;
    const double en = windowed_norm(eps0, R, NormKind::HomSobolev(sigma)).value;
    if (en > 1e-3 * qn * (1.0 + 1e-12))
        throw ValidationError("perturbation exceeds 1e-3 of the profile's Hdot^sigma norm");

    Field v0 = Q;
    for (std::size_t i = 0; i < v0.size(); ++i) v0[i] += eps0[i];
    PerturbationResult r;
    r.target_rate = -mp.b * (mp.sigma - mp.s_c);
    r.series = evolve(v0, Q, cfg, mp);
    const DiagnosticsSeries& s = r.series;

    const double e0 = s.hsigma_eps.front();
    if (!(e0 > 0.0)) {
        r.note = "zero perturbation: no rate fit";
        return r;
    }
    std::size_t end = s.taus.size();
    for (std::size_t i = 0; i < s.taus.size(); ++i)
        if (s.hsigma_eps[i] > 10.0 * e0) {
            r.unstable = true;
            r.departure_tau = s.taus[i];
            end = i;
            break;
        }
    if (r.unstable) {
        // still linear: between 10x and 100x the initial size
        RVec x, y;
        for (std::size_t i = end; i < s.taus.size() && s.hsigma_eps[i] <= 100.0 * e0; ++i) {
            x.push_back(s.taus[i]);
            y.push_back(std::log(s.hsigma_eps[i]));
        }
        if (x.size() >= 3) r.growth_rate = linear_fit(x, y).slope;
        r.note = "unstable-mode dominated after tau = " + std::to_string(r.departure_tau);
    }
    const std::size_t start = end / 10;
    RVec x, y;
    for (std::size_t i = start; i < end; ++i)
        if (s.hsigma_eps[i] > 0.0) {
            x.push_back(s.taus[i]);
            y.push_back(std::log(s.hsigma_eps[i]));
        }
    if (x.size() < 3) throw NumericalError("perturbation run too short for a rate fit");
    r.fit = linear_fit_bootstrap(x, y, 200, seed);
    r.fit_start = x.front();
    r.fit_end = x.back();
    return r;
}

CriticalNormFit critical_norm_track(const DiagnosticsSeries& s, const ModelParams& mp, std::uint64_t seed) {
    if (s.taus.size() < 8) throw ValidationError("critical-norm fit needs at least 8 samples");
    CriticalNormFit f;
    RVec y2(s.taus.size()), yp(s.taus.size());
    for (std::size_t i = 0; i < s.taus.size(); ++i) {
        y2[i] = s.hsc_v[i] * s.hsc_v[i];
        yp[i] = std::pow(s.lpc_v[i], mp.p_c);
    }
    f.growth = s.hsc_v.back() / s.hsc_v.front();
    f.grew_2x = f.growth >= 2.0;
    // pre-plateau: up to where the squared norm reaches 90% of its total rise
    const double y0 = y2.front(), ymax = *std::max_element(y2.begin(), y2.end());
    std::size_t end = y2.size();
    for (std::size_t i = 0; i < y2.size(); ++i)
        if (y2[i] >= y0 + 0.9 * (ymax - y0)) {
            end = i + 1;
            break;
        }
    f.plateau = end < y2.size();
    const std::size_t start = end / 10;
    if (end - start < 4) throw NumericalError("pre-plateau window too short for a fit");
    const RVec tx(s.taus.begin() + start, s.taus.begin() + end);
    f.hsc2 = linear_fit_bootstrap(tx, RVec(y2.begin() + start, y2.begin() + end), 200, seed);
    f.lpc = linear_fit_bootstrap(tx, RVec(yp.begin() + start, yp.begin() + end), 200, seed + 1);
    f.fit_start = tx.front();
    f.fit_end = tx.back();
    return f;
}

StaticSlopes static_log_slopes(const Field& Q, const ModelParams& mp, const RVec& radii) {
    if (radii.size() < 3) throw ValidationError("static slopes need at least 3 radii");
    RVec x, a, c;
    for (double R : radii) {
        const WindowedNorm h = windowed_norm(Q, R, NormKind::HomSobolev(mp.s_c));
        if (h.clamped) throw ValidationError("static slope radius exceeds the box");
        x.push_back(std::log(R));
        a.push_back(h.value * h.value);
        c.push_back(std::pow(windowed_norm(Q, R, NormKind::Lp(mp.p_c)).value, mp.p_c));
    }
    const LinearFit fa = linear_fit(x, a), fc = linear_fit(x, c);
    return {mp.b * fa.slope, mp.b * fc.slope, fa.r2, fc.r2};
}

PhysicalState physical_reconstruction(const Field& v, double tau, const ModelParams& mp) {
    if (!(tau >= 0.0)) throw ValidationError("physical reconstruction needs tau >= 0");
    if (!(mp.b > 0.0)) throw ValidationError("physical reconstruction needs b > 0");
    PhysicalState out;
    const double T = 0.5 / mp.b;
    out.t = -T * std::expm1(-2.0 * mp.b * tau);
    out.lambda = std::exp(-mp.b * tau);
    const Grid1D g(v.grid.N, v.grid.L * out.lambda);
    // the d = 3 field is stored as x f, which carries one more power of lambda
    const double power = mp.alpha() + (v.geom == Geometry::radial_odd ? -1.0 : 0.0);
    const cplx f = std::pow(out.lambda, -power) * std::exp(I1 * tau);
    CVec u(v.values);
    for (auto& z : u) z *= f;
    out.u = Field(g, std::move(u), Space::physical, v.geom);
    return out;
}

void write_series_csv(const DiagnosticsSeries& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os << "tau,hsigma_eps,hsc_v,lpc_v\n";
    char buf[128];
    for (std::size_t i = 0; i < s.taus.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10e,%.10e,%.10e\n", s.taus[i], s.hsigma_eps[i], s.hsc_v[i],
                      s.lpc_v[i]);
        os << buf;
    }
}

}  // namespace selfsim
