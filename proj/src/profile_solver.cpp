#include "profile_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "fit.hpp"

namespace selfsim {

namespace {

constexpr cplx I1(0.0, 1.0);
using State = std::array<double, 4>;  // Re Q, Im Q, Re Q', Im Q'

cplx q_of(const State& s) { return {s[0], s[1]}; }
cplx qp_of(const State& s) { return {s[2], s[3]}; }

double monitor(cplx Q, cplx Qp, double p) {
    const double a = std::abs(Q);
    return 0.5 * std::norm(Qp) - 0.5 * a * a + std::pow(a, p + 1.0) / (p + 1.0);
}

// Distance from the origin to the chord between two consecutive values.
double chord_distance(cplx a, cplx c) {
    const cplx d = c - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(a);
    const double t = std::clamp(-(std::conj(d) * a).real() / len2, 0.0, 1.0);
    return std::abs(a + t * d);
}

}  // namespace

cplx profile_rhs(double r, cplx Q, cplx Qp, const ModelParams& mp) {
    const double alpha = mp.alpha();
    const cplx nl = Q * std::pow(std::abs(Q), mp.p - 1.0);
    if (r == 0.0) return (Q - I1 * mp.b * alpha * Q - nl) / static_cast<double>(mp.d);
    return -(mp.d - 1.0) / r * Qp + Q - I1 * mp.b * (alpha * Q + r * Qp) - nl;
}

Trajectory integrate_profile(double Q0, double b, const ModelParams& mp_in, const RVec& nodes,
                             const IntegrateOptions& opt) {
    namespace ode = boost::numeric::odeint;
    if (!(Q0 > 0.0)) throw ValidationError("profile amplitude Q0 must be > 0");
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] < 0.0 || (i > 0 && !(nodes[i] > nodes[i - 1])))
            throw ValidationError("profile output nodes must be increasing and nonnegative");
    ModelParams mp = mp_in;
    mp.b = b;
    const double p = mp.p;
    const cplx q2 = 0.5 * profile_rhs(0.0, Q0, 0.0, mp);  // Q = Q0 + q2 r^2 + O(r^4)
    auto series = [&](double r, cplx& Q, cplx& Qp) {
        Q = Q0 + q2 * r * r;
        Qp = 2.0 * q2 * r;
    };
    auto sys = [&mp](const State& x, State& dx, double r) {
        const cplx Q = q_of(x), Qp = qp_of(x);
        const cplx Qpp = profile_rhs(r, Q, Qp, mp);
        dx = {Qp.real(), Qp.imag(), Qpp.real(), Qpp.imag()};
    };
    auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_fehlberg78<State>());

    Trajectory tr;
    double r = opt.r_start;
    cplx Q, Qp;
    series(r, Q, Qp);
    State x{Q.real(), Q.imag(), Qp.real(), Qp.imag()};
    double dt = 1e-3;
    tr.monitor_max = std::abs(monitor(Q, Qp, p));
    for (const double node : nodes) {
        if (node <= opt.r_start) {
            cplx a, c;
            series(node, a, c);
            tr.r.push_back(node);
            tr.Q.push_back(a);
            tr.Qp.push_back(c);
            continue;
        }
        while (r < node) {
            const cplx prev = q_of(x);
            const bool last = dt >= node - r;
            double step = last ? node - r : dt;
            const auto res = stepper.try_step(sys, x, r, step);
            if (res == ode::fail) {
                dt = step;
                if (dt < 1e-13 * std::max(1.0, r)) throw NumericalError("profile integrator step-size collapse");
                continue;
            }
            ++tr.steps;
            if (std::abs(r - node) < 1e-12 * std::max(1.0, node)) r = node;
            dt = last ? std::max(dt, step) : step;
            const cplx q = q_of(x), qp = qp_of(x);
            tr.monitor_max = std::max(tr.monitor_max, std::abs(monitor(q, qp, p)));
            if (!std::isfinite(std::abs(q)) || std::abs(q) > 1e6) {
                tr.event = ProfileEvent::overflow;
                tr.event_r = r;
                return tr;
            }
            if (chord_distance(prev, q) < 1e-6 * Q0) {
                tr.event = ProfileEvent::zero_crossing;
                tr.event_r = r;
                return tr;
            }
        }
        tr.r.push_back(node);
        tr.Q.push_back(q_of(x));
        tr.Qp.push_back(qp_of(x));
    }
    return tr;
}

Trajectory integrate_profile(double Q0, double b, const ModelParams& mp, double r_max, double h,
                             const IntegrateOptions& opt) {
    if (!(h > 0.0 && r_max > 0.0)) throw ValidationError("profile grid needs h > 0 and r_max > 0");
    const auto n = static_cast<std::size_t>(std::llround(r_max / h));
    RVec nodes(n + 1);
    for (std::size_t i = 0; i <= n; ++i) nodes[i] = i * h;
    return integrate_profile(Q0, b, mp, nodes, opt);
}

cplx shooting_objective(double Q0, double b, const ModelParams& mp, double R1, double R2,
                        const IntegrateOptions& opt) {
    if (!(b > 0.0)) throw ValidationError("shooting objective needs b > 0");
    if (!(R2 > R1 && R1 > 0.0)) throw ValidationError("bad shooting window");
    if (0.5 * b * (R2 * R2 - R1 * R1) < 10.0 * M_PI)
        throw ValidationError("shooting window shorter than 5 chirp periods");
    const double h = std::min(0.01, 0.2 / (b * R2));
    const auto n = static_cast<std::size_t>(std::ceil((R2 - R1) / h));
    const double hh = (R2 - R1) / n;
    RVec nodes(n + 1);
    for (std::size_t i = 0; i <= n; ++i) nodes[i] = R1 + i * hh;
    const Trajectory tr = integrate_profile(Q0, b, mp, nodes, opt);
    if (tr.event != ProfileEvent::none) {
        std::ostringstream os;
        os << "shooting trajectory stopped at r = " << tr.event_r
           << (tr.event == ProfileEvent::overflow ? " (overflow)" : " (zero of Q)");
        throw NumericalError(os.str());
    }
    const double alpha = mp.alpha();
    const cplx slow = alpha + I1 / b;  // slow branch: r Q' = -(alpha + i/b) Q
    const cplx fast_exp = alpha - mp.d + 1.0 + I1 / b;
    cplx acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double r = nodes[i];
        const cplx g = (tr.Qp[i] + slow * tr.Q[i] / r) * std::exp(I1 * (0.5 * b * r * r)) /
                       (-I1 * b * std::exp(fast_exp * std::log(r)));
        acc += (i == 0 || i == n ? 0.5 : 1.0) * g;
    }
    return acc * hh / (R2 - R1);
}

Profile make_profile(const ModelParams& mp, double Q0, double b, double r_store, double h,
                     const IntegrateOptions& ode) {
    const Trajectory tr = integrate_profile(Q0, b, mp, r_store, h, ode);
    if (tr.event != ProfileEvent::none) {
        std::ostringstream os;
        os << "profile rejected: " << (tr.event == ProfileEvent::overflow ? "overflow" : "Q vanishes") << " at r = "
           << tr.event_r;
        throw NumericalError(os.str());
    }
    Profile pr;
    pr.params = mp;
    pr.params.b = b;
    pr.b_star = b;
    pr.Q0 = Q0;
    pr.grid = RadialGrid(tr.r);
    pr.Q = tr.Q;
    pr.Qprime = tr.Qp;
    pr.min_abs = 1e300;
    for (const auto& q : pr.Q) pr.min_abs = std::min(pr.min_abs, std::abs(q));
    if (!(pr.min_abs > 0.0)) throw NumericalError("profile vanishes on the grid");
    const double alpha = mp.alpha();
    const double r_lo = 0.1 * pr.grid.r_max();
    RVec lr, lq, scaled;
    for (std::size_t i = 0; i < pr.grid.size(); ++i) {
        const double r = pr.grid.r[i];
        if (r < r_lo) continue;
        scaled.push_back(std::pow(r, alpha) * std::abs(pr.Q[i]));
        lr.push_back(std::log(r));
        lq.push_back(std::log(std::abs(pr.Q[i])));
        pr.decay_derivative = std::max(pr.decay_derivative, std::pow(r, (mp.p + 1.0) / (mp.p - 1.0)) * std::abs(pr.Qprime[i]));
    }
    double s = 0.0;
    for (double v : scaled) s += v;
    pr.c_p = s / scaled.size();
    const auto [mn, mx] = std::minmax_element(scaled.begin(), scaled.end());
    pr.flatness = (*mx - *mn) / pr.c_p;
    pr.far_slope = linear_fit(lr, lq).slope;
    return pr;
}

Profile find_profile(const ModelParams& mp, const ProfileBracket& br, const ProfileOptions& opt) {
    const double R2 = opt.r_shoot, R1 = 0.8 * opt.r_shoot;
    const double lo[2] = {br.Q0[0], br.b[0]}, hi[2] = {br.Q0[1], br.b[1]};
    if (!(lo[0] > 0.0 && hi[0] > lo[0] && lo[1] > 0.0 && hi[1] > lo[1])) throw ValidationError("bad profile bracket");
    auto F = [&](const double* x) { return shooting_objective(x[0], x[1], mp, R1, R2, opt.ode); };
    auto inside = [&](const double* x) {
        return x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1];
    };
    auto landscape = [&]() {
        std::ostringstream os;
        os << "profile Newton did not converge; |objective| landscape over the bracket:\n";
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 5; ++j) {
                const double x[2] = {lo[0] + (hi[0] - lo[0]) * i / 4.0, lo[1] + (hi[1] - lo[1]) * j / 4.0};
                double v;
                try {
                    v = std::abs(F(x));
                } catch (const NumericalError&) {
                    v = NAN;
                }
                char buf[96];
                std::snprintf(buf, sizeof buf, "  Q0=%.5f b=%.5f |obj|=%.3e\n", x[0], x[1], v);
                os << buf;
            }
        }
        return os.str();
    };
    double x[2] = {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
    cplx f;
    try {
        f = F(x);
    } catch (const NumericalError&) {
        throw NumericalError(landscape());
    }
    int it = 0;
    for (; it < opt.max_iter && std::abs(f) >= opt.tol; ++it) {
        double J[2][2];
        for (int k = 0; k < 2; ++k) {
            double xp[2] = {x[0], x[1]};
            const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
            xp[k] += h;
            const cplx fp = F(xp);
            J[0][k] = (fp.real() - f.real()) / h;
            J[1][k] = (fp.imag() - f.imag()) / h;
        }
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        if (det == 0.0) throw NumericalError(landscape());
        const double d0 = -(J[1][1] * f.real() - J[0][1] * f.imag()) / det;
        const double d1 = -(-J[1][0] * f.real() + J[0][0] * f.imag()) / det;
        double lam = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, lam *= 0.5) {
            const double xn[2] = {x[0] + lam * d0, x[1] + lam * d1};
            if (!inside(xn)) continue;
            cplx fn;
            try {
                fn = F(xn);
            } catch (const NumericalError&) {
                continue;
            }
            if (std::abs(fn) < (1.0 - 1e-4 * lam) * std::abs(f)) {
                x[0] = xn[0];
                x[1] = xn[1];
                f = fn;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    if (!(std::abs(f) < opt.tol)) throw NumericalError(landscape());
    Profile pr = make_profile(mp, x[0], x[1], opt.r_store, opt.h_store, opt.ode);
    pr.objective = std::abs(f);
    pr.newton_iterations = it;
    return pr;
}

void check_profile_invariants(const Profile& prof) {
    if (prof.Q.empty() || prof.Q.size() != prof.grid.size()) throw ValidationError("profile has no samples");
    for (const auto& q : prof.Q)
        if (!(std::abs(q) > 0.0)) throw ValidationError("profile vanishes on the grid");
    if (!(prof.flatness < 0.01)) throw ValidationError("profile far field is not self-similar (flatness >= 1%)");
    if (prof.Q.front().imag() != 0.0 || !(prof.Q.front().real() > 0.0))
        throw ValidationError("profile gauge requires Q(0) real and positive");
}

double profile_residual(const Profile& prof) {
    const auto& r = prof.grid.r;
    const std::size_t n = r.size();
    if (n < 8) throw ValidationError("profile grid too short for the residual stencil");
    const double h = r[1] - r[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(r[i] - r[i - 1] - h) > 1e-9 * h) throw ValidationError("profile residual needs a uniform grid");
    if (r[0] != 0.0) throw ValidationError("profile residual needs the grid to start at r = 0");
    const ModelParams& mp = prof.params;
    const double alpha = mp.alpha(), b = prof.b_star;
    // even extension across r = 0
    auto q = [&](long i) { return prof.Q[static_cast<std::size_t>(std::abs(i))]; };
    double sup = 0.0;
    for (long i = 1; i + 3 < static_cast<long>(n); ++i) {
        const cplx d1 = (-q(i - 3) + 9.0 * q(i - 2) - 45.0 * q(i - 1) + 45.0 * q(i + 1) - 9.0 * q(i + 2) + q(i + 3)) / (60.0 * h);
        const cplx d2 = (2.0 * q(i - 3) - 27.0 * q(i - 2) + 270.0 * q(i - 1) - 490.0 * q(i) + 270.0 * q(i + 1) -
                         27.0 * q(i + 2) + 2.0 * q(i + 3)) /
                        (180.0 * h * h);
        const double ri = r[i];
        const cplx Q = q(i);
        const cplx res = d2 + (mp.d - 1.0) / ri * d1 - Q + I1 * b * (alpha * Q + ri * d1) +
                         Q * std::pow(std::abs(Q), mp.p - 1.0);
        sup = std::max(sup, std::abs(res));
    }
    return sup;
}

CVec profile_at(const Profile& prof, const RVec& radii, const IntegrateOptions& ode) {
    const Trajectory tr = integrate_profile(prof.Q0, prof.b_star, prof.params, radii, ode);
    if (tr.event != ProfileEvent::none || tr.Q.size() != radii.size())
        throw NumericalError("profile re-integration stopped before the last node");
    return tr.Q;
}

CVec profile_on_line(const Profile& prof, const Grid1D& grid, const IntegrateOptions& ode) {
    // |x_j| = |k| dx for the symmetric grid x_j = -L + j dx
    const int half = grid.N / 2;
    RVec nodes(half + 1);
    for (int k = 0; k <= half; ++k) nodes[k] = k * grid.dx();
    const CVec Q = profile_at(prof, nodes, ode);
    CVec out(grid.N);
    for (int j = 0; j < grid.N; ++j) out[j] = Q[std::abs(j - half)];
    return out;
}

Potentials potentials_from_profile(const Profile& prof, const Grid1D& grid, const IntegrateOptions& ode) {
    const CVec Q = profile_on_line(prof, grid, ode);
    const double p = prof.params.p;
    Potentials out{Field::zeros(grid), Field::zeros(grid)};
    for (int j = 0; j < grid.N; ++j) {
        const double a = std::abs(Q[j]);
        if (!(a > 0.0)) throw NumericalError("potential needs a non-vanishing profile");
        out.W1[j] = 0.5 * (p + 1.0) * std::pow(a, p - 1.0);
        out.W2[j] = 0.5 * (p - 1.0) * Q[j] * Q[j] * std::pow(a, p - 3.0);
        const double r = std::abs(grid.x(j));
        if (r >= 0.1 * grid.L) {
            out.decay_W1 = std::max(out.decay_W1, r * r * std::abs(out.W1[j]));
            out.decay_W2 = std::max(out.decay_W2, r * r * std::abs(out.W2[j]));
        }
    }
    return out;
}

void save_profile(const Profile& prof, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ValidationError("cannot open profile file for writing: " + path);
    const ModelParams& mp = prof.params;
    std::fprintf(f, "# selfsim-profile 1\n");
    std::fprintf(f, "# d %d\n# p %.17g\n# sigma %.17g\n", mp.d, mp.p, mp.sigma);
    std::fprintf(f, "# b_star %.17g\n# Q0 %.17g\n# c_p %.17g\n# flatness %.17g\n", prof.b_star, prof.Q0, prof.c_p,
                 prof.flatness);
    std::fprintf(f, "# decay_derivative %.17g\n# far_slope %.17g\n# min_abs %.17g\n# objective %.17g\n",
                 prof.decay_derivative, prof.far_slope, prof.min_abs, prof.objective);
    std::fprintf(f, "# columns r re_Q im_Q re_Qp im_Qp\n");
    for (std::size_t i = 0; i < prof.grid.size(); ++i)
        std::fprintf(f, "%.17g %.17g %.17g %.17g %.17g\n", prof.grid.r[i], prof.Q[i].real(), prof.Q[i].imag(),
                     prof.Qprime[i].real(), prof.Qprime[i].imag());
    if (std::fclose(f) != 0) throw ValidationError("failed writing profile file: " + path);
}

Profile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile file: " + path);
    std::string line;
    int d = 0;
    double p = 0.0, sigma = 0.0;
    Profile prof;
    RVec r;
    bool magic = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key, val;
            ls >> hash >> key >> val;
            auto num = [&] { return std::strtod(val.c_str(), nullptr); };
            if (key == "selfsim-profile") magic = true;
            else if (key == "d") d = std::atoi(val.c_str());
            else if (key == "p") p = num();
            else if (key == "sigma") sigma = num();
            else if (key == "b_star") prof.b_star = num();
            else if (key == "Q0") prof.Q0 = num();
            else if (key == "c_p") prof.c_p = num();
            else if (key == "flatness") prof.flatness = num();
            else if (key == "decay_derivative") prof.decay_derivative = num();
            else if (key == "far_slope") prof.far_slope = num();
            else if (key == "min_abs") prof.min_abs = num();
            else if (key == "objective") prof.objective = num();
            continue;
        }
        std::string tok[5];
        for (auto& t : tok)
            if (!(ls >> t)) throw ValidationError("malformed profile row: " + line);
        double v[5];
        for (int k = 0; k < 5; ++k) v[k] = std::strtod(tok[k].c_str(), nullptr);
        r.push_back(v[0]);
        prof.Q.emplace_back(v[1], v[2]);
        prof.Qprime.emplace_back(v[3], v[4]);
    }
    if (!magic || d < 1) throw ValidationError("not a profile file: " + path);
    prof.params = derive_params_unchecked(d, p, prof.b_star, sigma);
    prof.grid = RadialGrid(std::move(r));
    return prof;
}

}  // namespace selfsim
