// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "deformed_propagator.hpp"
#include "linearized_operator.hpp"
#include "profile_solver.hpp"
#include "renormalized_flow.hpp"
#include "resolvent.hpp"
#include "spectral_transform.hpp"

using namespace selfsim;

namespace {

const cplx I1(0.0, 1.0);
int failures = 0;

void report(int k, bool pass, const std::string& what, const std::string& detail, double seconds) {
    std::printf("C%-2d %s  %s | %s [%.1f s]\n", k, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

// Runs one criterion; exceptions count as failures.
void criterion(int k, const std::string& what, const std::function<bool(std::ostringstream&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream os;
    os.precision(4);
    bool pass = false;
    try {
        pass = body(os);
    } catch (const std::exception& e) {
        os << "exception: " << e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(k, pass, what, os.str(), s);
}

Field sample(const Grid1D& g, const std::function<cplx(double)>& f, Geometry ge = Geometry::cartesian) {
    Field out = Field::zeros(g, ge);
    for (int j = 0; j < g.N; ++j) out[j] = f(g.x(j));
    return out;
}

const Profile& profile_d1p7() {
    static const Profile pr = find_profile(derive_params(1, 7.0, 1.0, 0.2), ProfileBracket{});
    return pr;
}

OperatorOptions op_opts(double r_max, double h, Parity par) {
    OperatorOptions o;
    o.r_max = r_max;
    o.h = h;
    o.parity = par;
    return o;
}

EigenOptions window_for(double b) {
    EigenOptions eo;
    eo.window = {-5.0, 5.0, -3.0 * b, 3.0 * b};
    return eo;
}

}  // namespace

int main() {
    criterion(1, "propagator exactness", [](std::ostringstream& os) {
        const Grid1D g(512, 24.0);
        const Field u0 = sample(g, [](double x) { return std::exp(-x * x / 2.0); });
        double oracle = 0.0, unit = 0.0, contr = 0.0;
        for (double t : {0.1, 0.5, 1.0}) {
            const Field u = propagate(u0, t, 1.0, 4);
            oracle = std::max(oracle, relative_l2_diff(u, propagate_via_rescaling(u0, t, 1.0)));
            unit = std::max(unit, std::abs(lp_norm(u, 2.0) / lp_norm(u0, 2.0) - 1.0));
            for (double s : {0.2, 0.5, 0.9}) {
                const double want = std::exp(-s * t) * norm(u0, NormKind::HomSobolev(s));
                contr = std::max(contr, std::abs(norm(u, NormKind::HomSobolev(s)) / want - 1.0));
            }
        }
        os << "oracle " << oracle << ", unitarity " << unit << ", contraction " << contr;
        return oracle < 1e-8 && unit < 1e-10 && contr < 1e-9;
    });

    criterion(2, "enhanced dispersion two-regime law", [](std::ostringstream& os) {
        bool pass = true;
        for (int d : {1, 2, 3}) {
            const double b = 1.0;
            RVec x, y;
            for (int i = 0; i <= 40; ++i) {
                const double t = (3.0 + 7.0 * i / 40.0) / b;
                x.push_back(t);
                y.push_back(std::log(dispersive_norm_L1_Linf(t, b, d)));
            }
            const double slope = linear_fit(x, y).slope;
            const double t0 = 0.01 / b;
            const double ratio = dispersive_norm_L1_Linf(t0, b, d) * std::pow(4.0 * M_PI * t0, 0.5 * d);
            os << "d=" << d << " slope " << slope << " (want " << -0.5 * d * b << "), small-t " << ratio << "; ";
            pass = pass && std::abs(slope / (-0.5 * d * b) - 1.0) < 0.02 && std::abs(ratio - 1.0) < 0.01;
        }
        // measured sup|u| / |u0|_1 for a narrow Gaussian, within the propagator budget
        const Grid1D g(4096, 40.0);
        const double w = 0.05;
        const Field u0 = sample(g, [w](double x) { return std::exp(-x * x / (2 * w * w)); });
        double worst = 0.0;
        for (double t : {0.3, 0.6}) {
            const double m = lp_norm(propagate(u0, t, 1.0, 2), INFINITY) / lp_norm(u0, 1.0);
            worst = std::max(worst, std::abs(m / dispersive_norm_L1_Linf(t, 1.0, 1) - 1.0));
        }
        os << "measured kernel mismatch " << worst;
        return pass && worst < 0.01;
    });

    criterion(3, "Strichartz admissibility map and saturation", [](std::ostringstream& os) {
        // level set of the predicate against the line 1/q = d/4 - (d/2)(1/p), clipped to 1/q <= 1/2
        double edge = 0.0;
        for (int d = 1; d <= 3; ++d)
            for (int i = 1; i < 200; ++i) {
                const double x = 0.5 * i / 200.0;
                const double line = 0.25 * d - 0.5 * d * x;
                if (line > 0.5) {
                    if (admissible(2.0, 1.0 / x, d)) edge = 1.0;
                    continue;
                }
                double lo = 0.0, hi = 0.5;
                for (int k = 0; k < 60; ++k) {
                    const double mid = 0.5 * (lo + hi);
                    (admissible(mid > 0 ? 1.0 / mid : INFINITY, 1.0 / x, d) ? hi : lo) = mid;
                }
                edge = std::max(edge, std::abs(hi - std::max(line, 0.0)));
            }
        const bool corners = admissible(INFINITY, 2.0, 1) && admissible(INFINITY, 2.0, 3) &&
                             !admissible(2.0, INFINITY, 1) && !admissible(2.0, INFINITY, 2) &&
                             !admissible(2.0, INFINITY, 3);
        const Grid1D g(512, 32.0);
        const Field u0 = sample(g, [](double x) { return std::exp(-x * x / 2.0); });
        const std::vector<std::pair<double, double>> pairs = {{INFINITY, 2.0}, {4.0, INFINITY}, {8.0, 4.0},
                                                              {4.0, 4.0},      {2.0, 4.0},      {6.0, 6.0},
                                                              {3.0, 8.0},      {2.0, 10.0},     {5.0, 3.0},
                                                              {10.0, 2.5},     {4.0, 3.0},      {2.5, 6.0}};
        int sat = 0, tried = 0;
        for (const auto& [q, p] : pairs) {
            if (!admissible(q, p, 1)) continue;
            ++tried;
            sat += strichartz_sample(u0, q, p, 1.0, 400.0, 400).saturated ? 1 : 0;
        }
        const Grid1D wide(4096, 400.0);
        const Field w0 = sample(wide, [](double x) { return std::exp(-x * x / 2.0); });
        const bool control = strichartz_sample(w0, 2.0, 4.0, 0.0, 50.0, 400).saturated;
        os << "boundary deviation " << edge << ", endpoint rules " << (corners ? "ok" : "wrong") << ", saturated "
           << sat << "/" << tried << ", b=0 control saturated " << (control ? "yes" : "no");
        return edge < 1e-12 && corners && sat >= 10 && !control;
    });

    const Grid1D rg(512, 24.0);
    const std::vector<Field> suite = {
        sample(rg, [](double x) { return std::exp(-x * x / 2.0); }),
        sample(rg, [](double x) { return std::exp(-(x - 1.0) * (x - 1.0)); }),
        sample(rg, [](double x) { return x * std::exp(-x * x / 2.0); }),
        sample(rg, [](double x) { return std::exp(-x * x / 2.0 + I1 * x); }),
        sample(rg, [](double x) { return std::exp(-(0.7 + 0.3 * I1) * x * x); }),
        sample(rg, [](double x) { return x * std::exp(-x * x / 2.0); }, Geometry::radial_odd),
    };

    criterion(4, "resolvent suite", [&](std::ostringstream& os) {
        double inv = 0.0, same = 0.0, mixed = 0.0, sig = 0.0;
        for (const Field& f : suite) {
            inv = std::max({inv, inversion_residual(f, {cplx(0.3, 0.2), Branch::plus}, 1.0),
                            inversion_residual(f, {cplx(-0.5, -0.25), Branch::minus}, 1.0)});
            same = std::max(same, resolvent_identity_residual(f, cplx(0.5, 0.3), cplx(-0.2, 0.6), 1.0));
            mixed = std::max(mixed, resolvent_identity_residual(f, cplx(0.5, 0.3), cplx(-0.2, -0.1), 1.0, true));
            sig = std::max(sig, sigma_shift_check(f, cplx(0.4, 0.1), 1.0, 0.25));
        }
        os << suite.size() << " inputs: inversion " << inv << ", same-family " << same << ", mixed " << mixed
           << ", sigma shift " << sig;
        return inv < 1e-6 && same < 1e-5 && mixed < 1e-5 && sig < 1e-5;
    });

    criterion(5, "resolvent lambda-decay", [&](std::ostringstream& os) {
        RVec lambdas;
        for (int k = 0; k <= 8; ++k) lambdas.push_back(10.0 * std::pow(30.0, k / 8.0));
        const DecayScan sc = lambda_decay_scan(suite[0], 1.0, 1.0, lambdas);
        os << "single " << sc.single_slope << ", difference " << sc.difference_slope << " over lambda in [10, 300]";
        return std::abs(sc.single_slope + 1.0) <= 0.3 && std::abs(sc.difference_slope + 2.0) <= 0.4;
    });

    criterion(6, "profile validity (d = 1, p = 7)", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        double sup = 0.0;
        for (const cplx& q : pr.Q) sup = std::max(sup, std::abs(q));
        const double res = profile_residual(pr) / sup;
        const double alpha = pr.params.alpha();
        const double slope_err = std::abs(pr.far_slope / -alpha - 1.0);
        os << "b* " << pr.b_star << ", Q0 " << pr.Q0 << ", residual/sup " << res << ", min|Q| " << pr.min_abs
           << ", far slope " << pr.far_slope << ", flatness " << pr.flatness;
        return res < 1e-6 && pr.min_abs > 0.0 && slope_err < 0.02 && pr.flatness < 0.01;
    });

    criterion(7, "embedded resonance", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        const double r1 = resonance_residual(assemble_H(pr, op_opts(20.0, 0.1, Parity::even)), pr);
        const double r2 = resonance_residual(assemble_H(pr, op_opts(20.0, 0.05, Parity::even)), pr);
        const double order = std::log2(r1 / r2);
        os << "residual " << r1 << " (h=0.1), " << r2 << " (h=0.05), observed order " << order << " (scheme 4)";
        return r2 < 1e-4 && std::abs(order - 4.0) < 0.8;
    });

    criterion(8, "J-symmetry and Riesz projections", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        bool pass = true;
        for (Parity par : {Parity::even, Parity::odd}) {
            const OperatorDisc H = assemble_H(pr, op_opts(20.0, 0.05, par));
            const EigenSet e = discrete_spectrum(H, window_for(pr.b_star));
            const Projections P = riesz_projections(e, H);
            const double j = j_symmetry_check(e) / e.window_size;
            os << (par == Parity::even ? "even" : "odd") << ": tagged";
            for (const cplx& z : e.tagged()) os << " " << z.imag() << "i";
            os << ", J " << j << ", idempotence " << P.idempotence << ", commutation " << P.commutation << "; ";
            pass = pass && !e.tagged().empty() && j < 0.01 && P.idempotence < 1e-6 && P.commutation < 1e-4;
        }
        return pass;
    });

    criterion(9, "fixed point and Strang order", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        const ModelParams mp = derive_params(1, 7.0, pr.b_star, 0.3);
        const Grid1D g(2048, 64.0);
        const Field Q = profile_field(pr, g);
        const double qn = windowed_norm(Q, 0.6 * g.L, NormKind::HomSobolev(mp.sigma)).value;
        FlowConfig cfg;
        cfg.dtau = 1e-4;
        cfg.tau_end = 5.0 / mp.b;
        cfg.cadence = 500;
        const DiagnosticsSeries s = evolve(Q, Q, cfg, mp);
        double drift = 0.0;
        for (double e : s.hsigma_eps) drift = std::max(drift, e / qn);

        const Grid1D g2(1024, 32.0);
        Field v0 = profile_field(pr, g2);
        for (int j = 0; j < g2.N; ++j) {
            const double x = g2.x(j) - 1.0;
            v0[j] += 0.05 * std::exp(-x * x) * std::polar(1.0, 0.3 * x);
        }
        FlowConfig c2;
        c2.tau_end = 0.4;
        c2.cadence = 1000000;
        std::vector<Field> out;
        for (double dt : {0.01, 0.005, 0.0025}) {
            c2.dtau = dt;
            out.push_back(evolve(v0, Field::zeros(g2), c2, mp).final_state);
        }
        auto diff = [&](const Field& a, const Field& c) {
            double acc = 0.0;
            for (int j = 0; j < g2.N; ++j)
                if (std::abs(g2.x(j)) <= 0.6 * g2.L) acc += std::norm(a[j] - c[j]);
            return std::sqrt(acc);
        };
        const double order = std::log2(diff(out[0], out[1]) / diff(out[1], out[2]));
        os << "max relative Hdot^sigma drift " << drift << " over tau in [0, " << cfg.tau_end << "] (dtau 1e-4)"
           << (s.aborted ? " ABORTED" : "") << ", Strang exponent " << order;
        return !s.aborted && drift < 1e-3 && std::abs(order - 2.0) <= 0.2;
    });

    criterion(10, "projected perturbation decays at -b(sigma - s_c)", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        const double sigma = 0.35;
        const ModelParams mp = derive_params(1, 7.0, pr.b_star, sigma);
        const double window = 3.0 / (mp.b * (mp.sigma - mp.s_c));
        const Grid1D g(2048, 64.0);
        const Field Q = profile_field(pr, g);
        const double R = 0.6 * g.L;
        Field e = sample(g, [](double x) {
            return std::exp(-(x - 0.7) * (x - 0.7) / 1.2) * std::polar(1.0, 0.4 * x) + 0.5 * std::exp(-(x + 1.5) * (x + 1.5));
        });
        EssentialProjection p = project_essential(e, pr, 20.0, window_for(pr.b_star));
        const double scale = 5e-4 * windowed_norm(Q, R, NormKind::HomSobolev(sigma)).value /
                             windowed_norm(p.projected, R, NormKind::HomSobolev(sigma)).value;
        for (auto& z : p.projected.values) z *= scale;
        FlowConfig cfg;
        cfg.dtau = 1e-3;
        cfg.tau_end = 1.25 * window;
        cfg.cadence = 50;
        const PerturbationResult r = perturbation_experiment(pr, p.projected, cfg, sigma);
        const double span = r.fit_end - r.fit_start;
        os << "removed " << p.removed_modes << " modes, fit rate " << r.fit.slope << " vs target " << r.target_rate
           << " over tau in [" << r.fit_start << ", " << r.fit_end << "] (need span >= " << window << ")";
        if (r.unstable) os << ", unstable growth " << r.growth_rate << " from tau " << r.departure_tau;
        return span >= window && r.fit.n > 0 && std::abs(r.fit.slope / r.target_rate - 1.0) <= 0.25;
    });

    criterion(11, "critical-norm log law", [](std::ostringstream& os) {
        const Profile& pr = profile_d1p7();
        const ModelParams mp = derive_params(1, 7.0, pr.b_star, 0.3);
        const Grid1D g(2048, 64.0);
        const Field Q = profile_field(pr, g);
        Field v0 = Q;
        for (int j = 0; j < g.N; ++j) v0[j] *= 0.5 * std::erfc(std::abs(g.x(j)) - 4.0);
        FlowConfig cfg;
        cfg.dtau = 2e-3;
        cfg.tau_end = 2.5;
        cfg.cadence = 25;
        const DiagnosticsSeries s = evolve(v0, Field::zeros(g), cfg, mp);
        const CriticalNormFit f = critical_norm_track(s, mp);
        RVec radii;
        for (double R = 4.0; R <= 0.6 * g.L + 1e-9; R *= 1.25) radii.push_back(R);
        const StaticSlopes st = static_log_slopes(Q, mp, radii);
        os << "dynamic slopes " << f.hsc2.slope << " / " << f.lpc.slope << " (R2 " << f.hsc2.r2 << " / " << f.lpc.r2
           << "), static " << st.hsc2 << " / " << st.lpc << ", norm growth " << f.growth << "x"
           << (f.grew_2x ? "" : " (below 2x)");
        return !s.aborted && f.hsc2.r2 > 0.95 && f.lpc.r2 > 0.95 && std::abs(f.hsc2.slope / st.hsc2 - 1.0) < 0.3 &&
               std::abs(f.lpc.slope / st.lpc - 1.0) < 0.3;
    });

    criterion(12, "Gagliardo / multiplier norm proportionality", [](std::ostringstream& os) {
        const Grid1D g(1024, 24.0);
        auto gs = [](double x, double w) { return std::exp(-x * x / (2.0 * w * w)); };
        const std::vector<std::function<cplx(double)>> family = {
            [&](double x) { return gs(x, 1.0); },
            [&](double x) { return gs(x, 0.7); },
            [&](double x) { return x * gs(x, 1.0); },
            [](double x) { return std::exp(-std::pow(x, 4) / 4.0); },
            [&](double x) { return std::cos(2.0 * x) * gs(x, 1.2) + cplx(0.0, 0.3) * gs(x - 1.0, 0.9); },
        };
        bool pass = true;
        for (double delta : {0.25, 0.5, 0.7}) {
            double lo = 1e300, hi = 0.0;
            for (const auto& fn : family) {
                const Field f = sample(g, fn);
                const double c = gagliardo_seminorm(f, delta) / std::pow(norm(f, NormKind::HomSobolev(delta)), 2);
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
            const double spread = (hi - lo) / lo;
            os << "delta " << delta << ": C " << lo << ", spread " << spread << "; ";
            pass = pass && spread < 0.02;
        }
        return pass;
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures;
}
