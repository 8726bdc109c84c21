#include "selfsim.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "deformed_propagator.hpp"
#include "fit.hpp"
#include "linearized_operator.hpp"
#include "profile_solver.hpp"
#include "renormalized_flow.hpp"
#include "resolvent.hpp"
#include "spectral_transform.hpp"

using namespace selfsim;

struct selfsim_field {
    Field f;
};
struct selfsim_profile {
    Profile p;
};
struct selfsim_spectrum {
    EigenSet e;
    selfsim_spectrum_info info{};
};
struct selfsim_series {
    DiagnosticsSeries s;
};

namespace {

thread_local std::string last_error;

template <class F>
selfsim_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return SELFSIM_OK;
    } catch (const ValidationError& e) {
        last_error = e.what();
        return SELFSIM_ERR_VALIDATION;
    } catch (const NumericalError& e) {
        last_error = e.what();
        return SELFSIM_ERR_NUMERICAL;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return SELFSIM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return SELFSIM_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) throw ValidationError(std::string("null argument: ") + what);
}

ModelParams to_params(const selfsim_params* mp) {
    need(mp, "params");
    return derive_params(mp->d, mp->p, mp->b, mp->sigma);
}

void from_params(const ModelParams& m, selfsim_params* out) {
    *out = {m.d, m.p, m.b, m.sigma, m.s_c, m.p_c, m.alpha_c};
}

selfsim_field* wrap(Field f) { return new selfsim_field{std::move(f)}; }

FlowConfig to_flow(const selfsim_flow_config* c) {
    need(c, "flow config");
    FlowConfig f;
    f.dtau = c->dtau;
    f.tau_end = c->tau_end;
    f.cadence = c->cadence;
    f.sponge.enabled = c->sponge != 0;
    f.sponge.inner = c->sponge_inner;
    f.sponge.outer = c->sponge_outer;
    f.sponge.rate = c->sponge_rate;
    f.interior = c->interior;
    f.nonlinear = c->nonlinear != 0;
    f.oversample = c->oversample;
    f.overflow_tol = c->overflow_tol;
    if (f.cadence < 1) throw ValidationError("cadence must be >= 1");
    return f;
}

void from_fit(const LinearFit& f, selfsim_fit* out) {
    *out = {f.slope, f.intercept, f.r2, f.slope_lo, f.slope_hi, static_cast<int>(f.n)};
}

}  // namespace

extern "C" {

const char* selfsim_last_error(void) { return last_error.c_str(); }
const char* selfsim_version(void) { return "1.0.0"; }

selfsim_status selfsim_derive_params(int d, double p, double b, double sigma, selfsim_params* out) {
    return guarded([&] {
        need(out, "out");
        from_params(derive_params(d, p, b, sigma), out);
    });
}

selfsim_status selfsim_check_flow_sigma(const selfsim_params* mp) {
    return guarded([&] { require_flow_sigma(to_params(mp)); });
}

selfsim_status selfsim_field_create(int n, double half_width, int radial, const double* re, const double* im,
                                    selfsim_field** out) {
    return guarded([&] {
        need(out, "out");
        const Grid1D g(n, half_width);
        CVec v(n);
        for (int j = 0; j < n; ++j) v[j] = cplx(re ? re[j] : 0.0, im ? im[j] : 0.0);
        Field f(g, std::move(v), Space::physical, radial ? Geometry::radial_odd : Geometry::cartesian);
        f.check_finite();
        *out = wrap(std::move(f));
    });
}

selfsim_status selfsim_field_copy(const selfsim_field* f, selfsim_field** out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = wrap(f->f);
    });
}

void selfsim_field_free(selfsim_field* f) { delete f; }
int selfsim_field_size(const selfsim_field* f) { return f ? f->f.grid.N : 0; }
double selfsim_field_half_width(const selfsim_field* f) { return f ? f->f.grid.L : 0.0; }
int selfsim_field_radial(const selfsim_field* f) { return f && f->f.geom == Geometry::radial_odd ? 1 : 0; }
double selfsim_field_x(const selfsim_field* f, int j) { return f ? f->f.grid.x(j) : 0.0; }

selfsim_status selfsim_field_values(const selfsim_field* f, double* re, double* im) {
    return guarded([&] {
        need(f, "field");
        for (std::size_t j = 0; j < f->f.size(); ++j) {
            if (re) re[j] = f->f[j].real();
            if (im) im[j] = f->f[j].imag();
        }
    });
}

selfsim_status selfsim_field_axpy(selfsim_field* f, double a_re, double a_im, const selfsim_field* g) {
    return guarded([&] {
        need(f, "field");
        need(g, "field");
        if (!(f->f.grid == g->f.grid) || f->f.geom != g->f.geom) throw ValidationError("field layouts differ");
        const cplx a(a_re, a_im);
        for (std::size_t j = 0; j < f->f.size(); ++j) f->f[j] += a * g->f[j];
    });
}

selfsim_status selfsim_norm(const selfsim_field* f, selfsim_norm_kind kind, double param, double radius,
                            double* out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        NormKind k;
        switch (kind) {
            case SELFSIM_NORM_LP: k = NormKind::Lp(param); break;
            case SELFSIM_NORM_HOM_SOBOLEV: k = NormKind::HomSobolev(param); break;
            case SELFSIM_NORM_WEIGHTED_L2: k = NormKind::WeightedL2(param); break;
            default: throw ValidationError("unknown norm kind");
        }
        *out = radius > 0.0 ? windowed_norm(f->f, radius, k).value : norm(f->f, k);
    });
}

selfsim_status selfsim_gagliardo(const selfsim_field* f, double delta, double* out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = gagliardo_seminorm(f->f, delta);
    });
}

selfsim_status selfsim_relative_l2_diff(const selfsim_field* a, const selfsim_field* b, double* out) {
    return guarded([&] {
        need(a, "field");
        need(b, "field");
        need(out, "out");
        *out = relative_l2_diff(a->f, b->f);
    });
}

selfsim_status selfsim_propagate(const selfsim_field* f, double t, double b, int oversample, selfsim_field** out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = wrap(propagate(f->f, t, b, oversample));
    });
}

selfsim_status selfsim_propagate_oracle(const selfsim_field* f, double t, double b, selfsim_field** out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = wrap(propagate_via_rescaling(f->f, t, b));
    });
}

selfsim_status selfsim_dispersive_norm(double t, double b, int d, double* out) {
    return guarded([&] {
        need(out, "out");
        *out = dispersive_norm_L1_Linf(t, b, d);
    });
}

int selfsim_admissible(double q, double p, int d) { return admissible(q, p, d) ? 1 : 0; }

selfsim_status selfsim_strichartz(const selfsim_field* f, double q, double p, double b, double t_max, int n_t,
                                  double* integral, int* saturated) {
    return guarded([&] {
        need(f, "field");
        const StrichartzSample s = strichartz_sample(f->f, q, p, b, t_max, n_t);
        if (integral) *integral = s.integral;
        if (saturated) *saturated = s.saturated ? 1 : 0;
    });
}

selfsim_status selfsim_inversion_residual(const selfsim_field* f, double z_re, double z_im, int branch, double b,
                                          double* out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = inversion_residual(f->f, {cplx(z_re, z_im), branch ? Branch::minus : Branch::plus}, b);
    });
}

selfsim_status selfsim_identity_residual(const selfsim_field* f, double z_re, double z_im, double z2_re,
                                         double z2_im, double b, int mixed, double* out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = resolvent_identity_residual(f->f, cplx(z_re, z_im), cplx(z2_re, z2_im), b, mixed != 0);
    });
}

selfsim_status selfsim_sigma_shift(const selfsim_field* f, double z_re, double z_im, double b, double sigma,
                                   double* out) {
    return guarded([&] {
        need(f, "field");
        need(out, "out");
        *out = sigma_shift_check(f->f, cplx(z_re, z_im), b, sigma);
    });
}

selfsim_status selfsim_decay_scan(const selfsim_field* f, double y, double b, const double* lambdas, int n,
                                  double* single, double* difference, double* single_slope,
                                  double* difference_slope) {
    return guarded([&] {
        need(f, "field");
        need(lambdas, "lambdas");
        const DecayScan sc = lambda_decay_scan(f->f, y, b, RVec(lambdas, lambdas + n));
        for (int i = 0; i < n; ++i) {
            if (single) single[i] = sc.single[i];
            if (difference) difference[i] = sc.difference[i];
        }
        if (single_slope) *single_slope = sc.single_slope;
        if (difference_slope) *difference_slope = sc.difference_slope;
    });
}

selfsim_status selfsim_profile_find(int d, double p, double q0_lo, double q0_hi, double b_lo, double b_hi,
                                    selfsim_profile** out) {
    return guarded([&] {
        need(out, "out");
        // sigma plays no role in the profile equation; take the middle of its range
        const ModelParams probe = derive_params_unchecked(d, p, 1.0, 0.0);
        const double cap = std::min(1.0, 0.5 * d);
        const ModelParams mp = derive_params(d, p, 0.5 * (b_lo + b_hi), 0.5 * (probe.s_c + cap));
        ProfileBracket br;
        br.Q0 = {q0_lo, q0_hi};
        br.b = {b_lo, b_hi};
        *out = new selfsim_profile{find_profile(mp, br)};
    });
}

selfsim_status selfsim_profile_load(const char* path, selfsim_profile** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new selfsim_profile{load_profile(path)};
    });
}

selfsim_status selfsim_profile_save(const selfsim_profile* pr, const char* path) {
    return guarded([&] {
        need(pr, "profile");
        need(path, "path");
        save_profile(pr->p, path);
    });
}

void selfsim_profile_free(selfsim_profile* pr) { delete pr; }

selfsim_status selfsim_profile_info_get(const selfsim_profile* pr, selfsim_profile_info* out) {
    return guarded([&] {
        need(pr, "profile");
        need(out, "out");
        const Profile& p = pr->p;
        double sup = 0.0;
        for (const cplx& q : p.Q) sup = std::max(sup, std::abs(q));
        out->b_star = p.b_star;
        out->Q0 = p.Q0;
        out->c_p = p.c_p;
        out->flatness = p.flatness;
        out->far_slope = p.far_slope;
        out->min_abs = p.min_abs;
        out->objective = p.objective;
        out->residual = profile_residual(p) / sup;
        out->r_max = p.grid.r_max();
        out->h = p.grid.size() > 1 ? p.grid.r[1] - p.grid.r[0] : 0.0;
        out->d = p.params.d;
        out->p = p.params.p;
        out->iterations = p.newton_iterations;
    });
}

selfsim_status selfsim_profile_check(const selfsim_profile* pr) {
    return guarded([&] {
        need(pr, "profile");
        check_profile_invariants(pr->p);
    });
}

selfsim_status selfsim_profile_field(const selfsim_profile* pr, int n, double half_width, selfsim_field** out) {
    return guarded([&] {
        need(pr, "profile");
        need(out, "out");
        *out = wrap(profile_field(pr->p, Grid1D(n, half_width)));
    });
}

void selfsim_spectrum_options_default(selfsim_spectrum_options* o) {
    if (!o) return;
    const OperatorOptions oo;
    const EigenOptions eo;
    *o = {oo.r_max,
          oo.h,
          oo.parity == Parity::even ? 1 : 0,
          oo.stencil_order,
          oo.sigma,
          eo.window.re_min,
          eo.window.re_max,
          eo.window.im_min,
          eo.window.im_max,
          eo.loc_threshold,
          eo.outer_fraction,
          eo.line_gap};
}

selfsim_status selfsim_spectrum_compute(const selfsim_profile* pr, const selfsim_spectrum_options* o,
                                        selfsim_spectrum** out) {
    return guarded([&] {
        need(pr, "profile");
        need(o, "options");
        need(out, "out");
        OperatorOptions oo;
        oo.r_max = o->r_max;
        oo.h = o->h;
        oo.parity = o->parity_even ? Parity::even : Parity::odd;
        oo.stencil_order = o->stencil_order;
        oo.sigma = o->sigma;
        EigenOptions eo;
        eo.window = {o->re_min, o->re_max, o->im_min, o->im_max};
        eo.loc_threshold = o->loc_threshold;
        eo.outer_fraction = o->outer_fraction;
        eo.line_gap = o->line_gap;
        const OperatorDisc H = assemble_H(pr->p, oo);
        auto s = std::make_unique<selfsim_spectrum>();
        s->e = discrete_spectrum(H, eo);
        const Projections P = riesz_projections(s->e, H);
        selfsim_spectrum_info& in = s->info;
        in.dim = static_cast<int>(H.dim());
        in.n_values = static_cast<int>(s->e.values.size());
        in.n_tagged = static_cast<int>(s->e.tagged().size());
        const bool res_ok = oo.sigma == 0.0 && (pr->p.params.d == 3 || oo.parity == Parity::even);
        in.resonance_residual = res_ok ? resonance_residual(H, pr->p) : -1.0;
        in.j_symmetry = j_symmetry_check(s->e) / s->e.window_size;
        in.idempotence = P.idempotence;
        in.commutation = P.commutation;
        in.rank = P.rank;
        in.schur_fallback = P.schur_fallback ? 1 : 0;
        in.coarse = H.coarse ? 1 : 0;
        in.biorth_residual = s->e.biorth_residual;
        *out = s.release();
    });
}

void selfsim_spectrum_free(selfsim_spectrum* s) { delete s; }

selfsim_status selfsim_spectrum_info_get(const selfsim_spectrum* s, selfsim_spectrum_info* out) {
    return guarded([&] {
        need(s, "spectrum");
        need(out, "out");
        *out = s->info;
    });
}

selfsim_status selfsim_spectrum_value(const selfsim_spectrum* s, int i, double* re, double* im, double* localization,
                                      int* tagged) {
    return guarded([&] {
        need(s, "spectrum");
        if (i < 0 || i >= static_cast<int>(s->e.values.size())) throw ValidationError("eigenvalue index out of range");
        if (re) *re = s->e.values[i].real();
        if (im) *im = s->e.values[i].imag();
        if (localization) *localization = s->e.localization[i];
        if (tagged) *tagged = s->e.discrete[i] ? 1 : 0;
    });
}

selfsim_status selfsim_spectrum_write(const selfsim_spectrum* s, const char* path) {
    return guarded([&] {
        need(s, "spectrum");
        need(path, "path");
        std::ofstream os(path);
        if (!os) throw ValidationError(std::string("cannot open for writing: ") + path);
        write_eigen_table(s->e, os);
        if (!os) throw ValidationError(std::string("failed writing: ") + path);
    });
}

void selfsim_flow_config_default(selfsim_flow_config* c) {
    if (!c) return;
    const FlowConfig f;
    *c = {f.dtau,         f.tau_end,      f.cadence,   f.sponge.enabled ? 1 : 0, f.sponge.inner, f.sponge.outer,
          f.sponge.rate,  f.interior,     f.nonlinear ? 1 : 0, f.oversample,   f.overflow_tol};
}

selfsim_status selfsim_evolve(const selfsim_field* v0, const selfsim_field* reference, const selfsim_params* mp,
                              const selfsim_flow_config* cfg, selfsim_series** out) {
    return guarded([&] {
        need(v0, "field");
        need(out, "out");
        const Field ref = reference ? reference->f : Field::zeros(v0->f.grid, v0->f.geom);
        *out = new selfsim_series{evolve(v0->f, ref, to_flow(cfg), to_params(mp))};
    });
}

void selfsim_series_free(selfsim_series* s) { delete s; }
int selfsim_series_size(const selfsim_series* s) { return s ? static_cast<int>(s->s.taus.size()) : 0; }

selfsim_status selfsim_series_row(const selfsim_series* s, int i, double* tau, double* hsigma_eps, double* hsc_v,
                                  double* lpc_v) {
    return guarded([&] {
        need(s, "series");
        if (i < 0 || i >= selfsim_series_size(s)) throw ValidationError("series row out of range");
        if (tau) *tau = s->s.taus[i];
        if (hsigma_eps) *hsigma_eps = s->s.hsigma_eps[i];
        if (hsc_v) *hsc_v = s->s.hsc_v[i];
        if (lpc_v) *lpc_v = s->s.lpc_v[i];
    });
}

int selfsim_series_aborted(const selfsim_series* s) { return s && s->s.aborted ? 1 : 0; }
const char* selfsim_series_note(const selfsim_series* s) { return s ? s->s.note.c_str() : ""; }

selfsim_status selfsim_series_final(const selfsim_series* s, selfsim_field** out) {
    return guarded([&] {
        need(s, "series");
        need(out, "out");
        *out = wrap(s->s.final_state);
    });
}

selfsim_status selfsim_series_write_csv(const selfsim_series* s, const char* path) {
    return guarded([&] {
        need(s, "series");
        need(path, "path");
        write_series_csv(s->s, path);
    });
}

selfsim_status selfsim_linear_fit(const double* x, const double* y, int n, int resamples, uint64_t seed,
                                  selfsim_fit* out) {
    return guarded([&] {
        need(x, "x");
        need(y, "y");
        need(out, "out");
        const RVec xs(x, x + n), ys(y, y + n);
        from_fit(resamples > 0 ? linear_fit_bootstrap(xs, ys, resamples, seed) : linear_fit(xs, ys), out);
    });
}

selfsim_status selfsim_perturb(const selfsim_profile* pr, const selfsim_field* eps0, const selfsim_flow_config* cfg,
                               double sigma, int project, double r_op, uint64_t seed, selfsim_perturb_result* res,
                               selfsim_series** series) {
    return guarded([&] {
        need(pr, "profile");
        need(eps0, "field");
        need(res, "result");
        Field e = eps0->f;
        *res = {};
        if (project) {
            EigenOptions eo;
            const double b = pr->p.b_star;
            eo.window = {-5.0, 5.0, -3.0 * b, 3.0 * b};
            const EssentialProjection ep = project_essential(e, pr->p, r_op, eo);
            e = ep.projected;
            res->removed_modes = ep.removed_modes;
            res->removed_fraction = ep.removed_fraction;
        }
        PerturbationResult r = perturbation_experiment(pr->p, e, to_flow(cfg), sigma, seed);
        from_fit(r.fit, &res->fit);
        res->fit_start = r.fit_start;
        res->fit_end = r.fit_end;
        res->target_rate = r.target_rate;
        res->unstable = r.unstable ? 1 : 0;
        res->departure_tau = r.departure_tau;
        res->growth_rate = r.growth_rate;
        if (series) *series = new selfsim_series{std::move(r.series)};
    });
}

selfsim_status selfsim_critnorm(const selfsim_series* s, const selfsim_params* mp, const selfsim_field* q_ref,
                                uint64_t seed, selfsim_critnorm_result* out) {
    return guarded([&] {
        need(s, "series");
        need(out, "out");
        const ModelParams m = to_params(mp);
        const CriticalNormFit f = critical_norm_track(s->s, m, seed);
        *out = {};
        from_fit(f.hsc2, &out->hsc2);
        from_fit(f.lpc, &out->lpc);
        out->fit_start = f.fit_start;
        out->fit_end = f.fit_end;
        out->growth = f.growth;
        out->plateau = f.plateau ? 1 : 0;
        out->grew_2x = f.grew_2x ? 1 : 0;
        if (q_ref) {
            RVec radii;
            const double R_max = 0.6 * q_ref->f.grid.L;
            for (double R = 4.0; R <= R_max + 1e-9; R *= 1.25) radii.push_back(R);
            const StaticSlopes st = static_log_slopes(q_ref->f, m, radii);
            out->static_hsc2 = st.hsc2;
            out->static_lpc = st.lpc;
        }
    });
}

}  // extern "C"
