#include "resolvent.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "fit.hpp"
#include "panel_quadrature.hpp"
#include "spectral_transform.hpp"

namespace selfsim {

namespace {

constexpr cplx I1(0.0, 1.0);

cplx cpow(double rho, cplx e) { return std::exp(e * std::log(rho)); }

void add_term(PowerTerms& t, cplx A, cplx gamma) {
    for (auto& [a, g] : t)
        if (std::abs(g - gamma) < 1e-12) {
            a += A;
            return;
        }
    t.emplace_back(A, gamma);
}

cplx eval_terms(const PowerTerms& t, double rho) {
    cplx s = 0.0;
    for (const auto& [a, g] : t) s += a * cpow(rho, g);
    return s;
}

// \int |sum A rho^gamma|^2 rho^{d-1} d rho over [lo, hi] in log variable.
double log_l2(const PowerTerms& t, int d, double s_lo, double s_hi) {
    if (t.empty()) return 0.0;
    const auto& pr = panel_rule();
    double acc = 0.0;
    const int panels = static_cast<int>(std::ceil(s_hi - s_lo));
    const double hw = 0.5 * (s_hi - s_lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = s_lo + (2 * p + 1) * hw;
        for (int i = 0; i < PanelRule::n; ++i) {
            const double rho = std::exp(mid + hw * pr.x[i]);
            acc += hw * pr.w[i] * std::norm(eval_terms(t, rho)) * std::pow(rho, d);
        }
    }
    return acc;
}

double l2_measure(int d) {
    // |g|_2^2 = c_d sum_rays \int |g^|^2 rho^{d-1} d rho
    return d == 1 ? 1.0 / (2.0 * M_PI) : 4.0 * M_PI / std::pow(2.0 * M_PI, 3);
}

void require_same_grid(const RayField& a, const RayField& b) {
    if (a.grid != b.grid || a.dim != b.dim) throw ValidationError("ray fields live on different grids");
}

RayField like(const RayField& g) {
    RayField o;
    o.grid = g.grid;
    o.dim = g.dim;
    o.rays.assign(g.rays.size(), CVec(g.grid->size()));
    o.lead.assign(g.rays.size(), {});
    o.tail.assign(g.rays.size(), {});
    o.tail_b = g.tail_b;
    return o;
}

}  // namespace

void check_validity(const SpectralPoint& pt, double b, int d) {
    if (!(b != 0.0) || !std::isfinite(b)) throw ValidationError("resolvent needs b != 0");
    const double edge = 0.95 * std::abs(b) * std::min(0.5 * d, 1.0);
    if (pt.branch == Branch::plus && !(pt.z.imag() > -edge))
        throw ValidationError("spectral point outside the plus validity region");
    if (pt.branch == Branch::minus && !(pt.z.imag() < edge))
        throw ValidationError("spectral point outside the minus validity region");
}

SpectralSampler::SpectralSampler(const Field& f, int pad, int order)
    : grid_(f.grid), geom_(f.geom), data_(f.values), order_(order) {
    if (f.space != Space::physical) throw ValidationError("sampler expects a physical field");
    f.check_finite();
    const int n = grid_.N;
    const int np = n * pad;
    const double dx = grid_.dx();
    h_ = 2.0 * M_PI / (np * dx);
    samples_.assign(np, 0.0);
    std::copy(data_.begin(), data_.end(), samples_.begin());
    dft_forward(samples_.data(), np);
    for (int k = 0; k < np; ++k) {
        const double eta = (k < np / 2 ? k : k - np) * h_;
        samples_[k] *= dx * std::exp(I1 * (eta * grid_.L));
    }
    bary_.resize(order_);
    double c = 1.0;
    for (int j = 0; j < order_; ++j) {
        bary_[j] = (j % 2 ? -c : c);
        c = c * (order_ - 1 - j) / (j + 1);
    }
    double mx = 0.0;
    for (const auto& v : data_) mx = std::max(mx, std::abs(v));
    for (int j = 0; j < n; ++j)
        if (std::abs(data_[j]) > 1e-16 * mx) extent_ = std::max(extent_, std::abs(grid_.x(j)));
    moments_.assign(6, 0.0);
    for (int j = 0; j < n; ++j) {
        double xp = dx;
        for (int m = 0; m < 6; ++m) {
            moments_[m] += xp * data_[j];
            xp *= grid_.x(j);
        }
    }
}

cplx SpectralSampler::line_value(double eta) const {
    if (std::abs(eta) >= band()) return 0.0;
    const int np = static_cast<int>(samples_.size());
    const double t = eta / h_;
    const long k0 = static_cast<long>(std::floor(t)) - order_ / 2 + 1;
    cplx num = 0.0;
    double den = 0.0;
    for (int j = 0; j < order_; ++j) {
        const long k = k0 + j;
        const long idx = ((k % np) + np) % np;
        const double diff = t - static_cast<double>(k);
        if (diff == 0.0) return samples_[idx];
        const double wgt = bary_[j] / diff;
        num += wgt * samples_[idx];
        den += wgt;
    }
    return num / den;
}

cplx SpectralSampler::operator()(double eta) const {
    if (geom_ == Geometry::cartesian) return line_value(eta);
    const double k = std::abs(eta);
    if (k < 1e-3) {
        const double k2 = k * k;
        return 2.0 * M_PI * (moments_[1] - k2 * moments_[3] / 6.0 + k2 * k2 * moments_[5] / 120.0);
    }
    return 2.0 * M_PI * I1 / k * line_value(k);
}

cplx SpectralSampler::exact(double eta) const {
    const double k = geom_ == Geometry::cartesian ? eta : std::abs(eta);
    cplx s = 0.0;
    for (int j = 0; j < grid_.N; ++j) s += data_[j] * std::exp(-I1 * (k * grid_.x(j)));
    s *= grid_.dx();
    if (geom_ == Geometry::cartesian) return s;
    if (k == 0.0) return 2.0 * M_PI * moments_[1];
    return 2.0 * M_PI * I1 / k * s;
}

std::vector<std::pair<cplx, double>> SpectralSampler::small_rho_terms(int omega) const {
    std::vector<std::pair<cplx, double>> t;
    if (geom_ == Geometry::cartesian) {
        // f^(rho omega) = sum (-i omega rho)^n M_n / n!
        cplx c = 1.0;
        double fact = 1.0;
        for (int m = 0; m < 4; ++m) {
            if (m > 0) fact *= m;
            const cplx a = c * moments_[m] / fact;
            if (std::abs(a) > 0.0) t.emplace_back(a, m);
            c *= -I1 * static_cast<double>(omega);
        }
    } else {
        t.emplace_back(2.0 * M_PI * moments_[1], 0.0);
        t.emplace_back(-2.0 * M_PI * moments_[3] / 6.0, 2.0);
        t.emplace_back(2.0 * M_PI * moments_[5] / 120.0, 4.0);
    }
    return t;
}

double SpectralSampler::effective_band(double tol) const {
    const int np = static_cast<int>(samples_.size());
    double mx = 0.0;
    for (const auto& v : samples_) mx = std::max(mx, std::abs(v));
    double top = 0.0;
    for (int k = 0; k < np; ++k)
        if (std::abs(samples_[k]) > tol * mx) top = std::max(top, std::abs((k < np / 2 ? k : k - np) * h_));
    return std::min(top + 2.0 * h_, band());
}

RayGrid make_ray_grid(const RayGridSpec& sp) {
    if (!(sp.rho_min > 0.0 && sp.rho_max > sp.rho_min)) throw ValidationError("bad ray grid range");
    const double b = std::abs(sp.b);
    const double re = sp.max_abs_re_z, im = sp.max_abs_im_z, X = sp.x_extent;
    // phase rate per unit rho
    auto rate_lin = [&](double rho) { return rho / b + re / (b * rho) + X + (im / b + 2.0) / rho + 1.0; };
    // per unit s = ln rho
    auto rate_log = [&](double rho) { return rho * rho / b + re / b + X * rho + im / b + 2.0; };
    RayGrid g;
    g.rho_min = sp.rho_min;
    g.rho_max = sp.rho_max;
    const double split = std::min(1.0, 0.5 * sp.rho_max);
    const double phi = sp.phase_per_panel;
    double s = std::log(sp.rho_min);
    const double s_end = std::log(std::max(split, sp.rho_min * 2));
    while (s < s_end - 1e-14) {
        double ds = std::min(1.0, phi / rate_log(std::exp(s)));
        ds = std::min(ds, phi / rate_log(std::exp(std::min(s + ds, s_end))));
        const double hi = std::min(s + ds, s_end);
        g.panels.push_back({s, hi, true});
        s = hi;
    }
    double r = std::exp(s_end);
    while (r < sp.rho_max - 1e-14) {
        double dr = std::min(0.5, phi / std::max(rate_lin(r), rate_lin(std::min(r + 0.5, sp.rho_max))));
        dr = std::min(dr, phi / rate_lin(std::min(r + dr, sp.rho_max)));
        const double hi = std::min(r + dr, sp.rho_max);
        g.panels.push_back({r, hi, false});
        r = hi;
    }
    const auto& pr = panel_rule();
    for (const auto& p : g.panels) {
        const double mid = 0.5 * (p.lo + p.hi), hw = 0.5 * (p.hi - p.lo);
        for (int i = 0; i < PanelRule::n; ++i) {
            const double v = mid + hw * pr.x[i];
            const double rho = p.log ? std::exp(v) : v;
            g.rho.push_back(rho);
            g.w.push_back(hw * pr.w[i] * (p.log ? rho : 1.0));
        }
    }
    return g;
}

std::shared_ptr<const RayGrid> ray_grid_for(const SpectralSampler& s, double b, std::initializer_list<cplx> zs) {
    RayGridSpec sp;
    sp.b = b;
    // deep enough that the rho^{-a} singularity below it is negligible in L^2
    sp.rho_min = 1e-30;
    sp.rho_max = s.effective_band();
    sp.x_extent = s.support_extent();
    for (const auto& z : zs) {
        sp.max_abs_re_z = std::max(sp.max_abs_re_z, std::abs(z.real()));
        sp.max_abs_im_z = std::max(sp.max_abs_im_z, std::abs(z.imag()));
    }
    return std::make_shared<const RayGrid>(make_ray_grid(sp));
}

RayField sample_rays(const SpectralSampler& s, std::shared_ptr<const RayGrid> g) {
    RayField f;
    f.grid = g;
    f.dim = s.dim();
    const int nr = f.dim == 1 ? 2 : 1;
    for (int r = 0; r < nr; ++r) {
        const int om = f.omega(r);
        CVec v(g->size());
        for (std::size_t n = 0; n < g->size(); ++n) v[n] = s(om * g->rho[n]);
        f.rays.push_back(std::move(v));
        PowerTerms lead;
        for (const auto& [a, gam] : s.small_rho_terms(om)) lead.emplace_back(a, gam);
        f.lead.push_back(std::move(lead));
        f.tail.emplace_back();
    }
    return f;
}

RayField rays_from_function(std::shared_ptr<const RayGrid> g, int dim, const std::function<cplx(double)>& fhat) {
    RayField f;
    f.grid = g;
    f.dim = dim;
    const int nr = dim == 1 ? 2 : 1;
    for (int r = 0; r < nr; ++r) {
        CVec v(g->size());
        for (std::size_t n = 0; n < g->size(); ++n) v[n] = fhat(f.omega(r) * g->rho[n]);
        f.rays.push_back(std::move(v));
        f.lead.emplace_back();
        f.tail.emplace_back();
    }
    return f;
}

double l2_norm(const RayField& f) {
    const auto& g = *f.grid;
    double acc = 0.0;
    for (int r = 0; r < f.n_rays(); ++r) {
        for (std::size_t n = 0; n < g.size(); ++n)
            acc += g.w[n] * std::norm(f.rays[r][n]) * std::pow(g.rho[n], f.dim - 1);
        const double smin = std::log(g.rho_min), smax = std::log(g.rho_max);
        acc += log_l2(f.lead[r], f.dim, smin - 40.0, smin);
        acc += log_l2(f.tail[r], f.dim, smax, smax + 40.0);
    }
    return std::sqrt(l2_measure(f.dim) * acc);
}

RayField axpy(cplx a, const RayField& x, const RayField& y) {
    require_same_grid(x, y);
    const bool xt = std::any_of(x.tail.begin(), x.tail.end(), [](const auto& t) { return !t.empty(); });
    const bool yt = std::any_of(y.tail.begin(), y.tail.end(), [](const auto& t) { return !t.empty(); });
    if (xt && yt && x.tail_b != y.tail_b) throw ValidationError("tails with different chirps");
    RayField o = y;
    if (xt) o.tail_b = x.tail_b;
    for (int r = 0; r < x.n_rays(); ++r) {
        for (std::size_t n = 0; n < o.rays[r].size(); ++n) o.rays[r][n] += a * x.rays[r][n];
        for (const auto& [A, gam] : x.lead[r]) add_term(o.lead[r], a * A, gam);
        for (const auto& [A, gam] : x.tail[r]) add_term(o.tail[r], a * A, gam);
    }
    return o;
}

double relative_l2_diff(const RayField& a, const RayField& b) {
    const double nb = l2_norm(b);
    const double nd = l2_norm(axpy(-1.0, b, a));
    return nb > 0.0 ? nd / nb : nd;
}

RayField minus_delta_b_minus_z(const RayField& g, cplx z, double b) {
    const auto& grid = *g.grid;
    const auto& pr = panel_rule();
    constexpr int m = PanelRule::n;
    RayField o = like(g);
    const double hd = 0.5 * g.dim;
    for (int r = 0; r < g.n_rays(); ++r) {
        const CVec& v = g.rays[r];
        for (std::size_t p = 0; p < grid.panels.size(); ++p) {
            const auto& pan = grid.panels[p];
            const double hw = 0.5 * (pan.hi - pan.lo);
            for (int i = 0; i < m; ++i) {
                const std::size_t n = p * m + i;
                cplx dv = 0.0;
                for (int j = 0; j < m; ++j) dv += pr.diff[i * m + j] * v[p * m + j];
                dv /= hw;
                const double rho = grid.rho[n];
                const cplx rdr = pan.log ? dv : rho * dv;
                o.rays[r][n] = (rho * rho - z) * v[n] + I1 * b * (hd * v[n] + rdr);
            }
        }
        // A rho^gamma -> A (i b (d/2 + gamma) - z) rho^gamma, dropping rho^{gamma+2}
        for (const auto& [A, gam] : g.lead[r]) add_term(o.lead[r], A * (I1 * b * (hd + gam) - z), gam);
        // chirped tail: the rho^2 parts cancel when the chirp matches b
        if (!g.tail[r].empty() && g.tail_b != b) throw ValidationError("tail chirp does not match b");
        for (const auto& [A, kap] : g.tail[r]) add_term(o.tail[r], A * (I1 * b * (hd + kap) - z), kap);
    }
    return o;
}

RayField rho_power(const RayField& g, double s) {
    RayField o = g;
    for (int r = 0; r < g.n_rays(); ++r) {
        for (std::size_t n = 0; n < g.grid->size(); ++n) o.rays[r][n] *= std::pow(g.grid->rho[n], s);
        for (auto& t : o.lead[r]) t.second += s;
        for (auto& t : o.tail[r]) t.second += s;
    }
    return o;
}

RayField resolvent_rays(const RayField& f, const SpectralPoint& pt, double b) {
    check_validity(pt, b, f.dim);
    const auto& grid = *f.grid;
    const auto& pr = panel_rule();
    constexpr int m = PanelRule::n;
    const cplx ex = 0.5 * f.dim - pt.z.imag() / b + I1 * (pt.z.real() / b);  // a + i c
    // The Laplace integral runs the dilation e^{bt} outwards (integral over
    // [rho, inf)) for plus with b > 0 and minus with b < 0, inwards otherwise.
    const bool plus = (pt.branch == Branch::plus) == (b > 0.0);
    const cplx pref = (plus ? 1.0 : -1.0) * I1 / b;
    RayField o = like(f);
    o.tail_b = b;
    const double rmin = grid.rho_min, rmax = grid.rho_max;
    const std::size_t np = grid.panels.size();
    for (int r = 0; r < f.n_rays(); ++r) {
        CVec h(grid.size());
        for (std::size_t n = 0; n < grid.size(); ++n) {
            const double rho = grid.rho[n];
            h[n] = std::exp((ex - 1.0) * std::log(rho) - I1 * (rho * rho / (2.0 * b))) * f.rays[r][n];
        }
        CVec cum(grid.size());
        auto panel_factor = [&](std::size_t p, int j) {
            const auto& pan = grid.panels[p];
            return 0.5 * (pan.hi - pan.lo) * (pan.log ? grid.rho[p * m + j] : 1.0);
        };
        if (plus) {
            if (!f.tail[r].empty() && f.tail_b != b) throw ValidationError("tail chirp does not match b");
            cplx acc = 0.0;
            for (const auto& [T, kap] : f.tail[r]) {
                const cplx beta = ex + kap;
                if (!(beta.real() < 0.0)) throw NumericalError("resolvent tail integral diverges");
                acc -= T * std::exp(beta * std::log(rmax)) / beta;
                add_term(o.tail[r], -pref * T / beta, kap);
            }
            for (std::size_t p = np; p-- > 0;) {
                for (int i = 0; i < m; ++i) {
                    cplx s = 0.0;
                    for (int j = 0; j < m; ++j) s += pr.tail[i * m + j] * panel_factor(p, j) * h[p * m + j];
                    cum[p * m + i] = acc + s;
                }
                cplx tot = 0.0;
                for (int j = 0; j < m; ++j) tot += pr.w[j] * panel_factor(p, j) * h[p * m + j];
                acc += tot;
            }
            cplx C = acc;
            for (const auto& [A, gam] : f.lead[r]) {
                const cplx beta = ex + gam;
                if (std::abs(beta) < 1e-12) throw NumericalError("logarithmic resonance in resolvent lead term");
                C += A * std::exp(beta * std::log(rmin)) / beta;
                add_term(o.lead[r], -pref * A / beta, gam);
            }
            add_term(o.lead[r], pref * C, -ex);
        } else {
            if (!f.tail[r].empty()) throw ValidationError("minus resolvent of a field with a chirped tail");
            cplx acc = 0.0;
            for (const auto& [A, gam] : f.lead[r]) {
                const cplx beta = ex + gam;
                if (!(beta.real() > 0.0)) throw NumericalError("minus resolvent integral diverges at the origin");
                acc += A * std::exp(beta * std::log(rmin)) / beta;
                add_term(o.lead[r], pref * A / beta, gam);
            }
            for (std::size_t p = 0; p < np; ++p) {
                for (int i = 0; i < m; ++i) {
                    cplx s = 0.0;
                    for (int j = 0; j < m; ++j) s += pr.head[i * m + j] * panel_factor(p, j) * h[p * m + j];
                    cum[p * m + i] = acc + s;
                }
                cplx tot = 0.0;
                for (int j = 0; j < m; ++j) tot += pr.w[j] * panel_factor(p, j) * h[p * m + j];
                acc += tot;
            }
            add_term(o.tail[r], pref * acc, -ex);
        }
        for (std::size_t n = 0; n < grid.size(); ++n) {
            const double rho = grid.rho[n];
            o.rays[r][n] = pref * std::exp(-ex * std::log(rho) + I1 * (rho * rho / (2.0 * b))) * cum[n];
        }
    }
    return o;
}

RayField resolvent_time_integral_rays(const SpectralSampler& f, std::shared_ptr<const RayGrid> g,
                                      const SpectralPoint& pt, double b, double T_max, double weight_rate) {
    const int d = f.dim();
    check_validity(pt, b, d);
    if (!(b > 0.0)) throw ValidationError("time-integral oracle needs b > 0");
    const bool plus = pt.branch == Branch::plus;
    // L^2 tail of the Laplace integral
    const double decay = plus ? pt.z.imag() + weight_rate : weight_rate - pt.z.imag();
    if (!(decay > 0.0) || std::exp(-decay * T_max) >= 1e-8)
        throw ValidationError("time horizon too short for the tail bound");
    const double sgn = plus ? 1.0 : -1.0;
    const cplx zeff = pt.z + I1 * (sgn * weight_rate);
    const double cut = f.effective_band();
    const double X = f.support_extent();
    const auto& pr = panel_rule();
    RayField o;
    o.grid = g;
    o.dim = d;
    const int nr = d == 1 ? 2 : 1;
    for (int r = 0; r < nr; ++r) {
        const int om = o.omega(r);
        CVec v(g->size());
        for (std::size_t n = 0; n < g->size(); ++n) {
            const double rho = g->rho[n];
            double t_end = T_max;
            if (plus) t_end = rho >= cut ? 0.0 : std::min(T_max, std::log(cut / rho) / b);
            auto rate = [&](double t) {
                const double sc = std::exp(sgn * b * t);
                return std::abs(zeff.real()) + std::abs(zeff.imag()) + sc * sc * rho * rho + b * sc * rho * X +
                       b * d + 1.0;
            };
            cplx acc = 0.0;
            double t = 0.0;
            while (t < t_end) {
                double dt = std::min(1.0, M_PI / rate(t));
                dt = std::min(dt, M_PI / rate(std::min(t + dt, t_end)));
                const double hi = std::min(t + dt, t_end);
                const double mid = 0.5 * (t + hi), hw = 0.5 * (hi - t);
                for (int i = 0; i < PanelRule::n; ++i) {
                    const double tt = mid + hw * pr.x[i];
                    const double sc = std::exp(sgn * b * tt);
                    const cplx ph = sgn * I1 * tt * zeff + sgn * 0.5 * b * d * tt -
                                    I1 * (std::expm1(2.0 * sgn * b * tt) * rho * rho / (2.0 * b));
                    acc += hw * pr.w[i] * std::exp(ph) * f(om * sc * rho);
                }
                t = hi;
            }
            v[n] = sgn * I1 * acc;
        }
        o.lead.emplace_back();
        o.tail.emplace_back();
        if (!plus) {
            // Beyond the band the Laplace integral only sees f^ after the dilation has
            // carried rho inside it, so the output is the outgoing homogeneous wave
            // matched to the last node.
            const double rl = g->rho.back();
            const cplx ex = 0.5 * d - pt.z.imag() / b + I1 * (pt.z.real() / b);
            o.tail.back().emplace_back(v.back() * std::exp(ex * std::log(rl) - I1 * (rl * rl / (2.0 * b))), -ex);
            o.tail_b = b;
        }
        o.rays.push_back(std::move(v));
    }
    return o;
}

Field rays_to_field(const RayField& g, const Grid1D& grid) {
    const auto& rg = *g.grid;
    Field out = Field::zeros(grid, g.dim == 1 ? Geometry::cartesian : Geometry::radial_odd);
    for (int j = 0; j < grid.N; ++j) {
        const double x = grid.x(j);
        cplx s = 0.0;
        if (g.dim == 1) {
            for (int r = 0; r < g.n_rays(); ++r) {
                const double om = g.omega(r);
                for (std::size_t n = 0; n < rg.size(); ++n)
                    s += rg.w[n] * g.rays[r][n] * std::exp(I1 * (om * rg.rho[n] * x));
                for (const auto& [A, gam] : g.lead[r]) s += A * std::exp((gam + 1.0) * std::log(rg.rho_min)) / (gam + 1.0);
            }
            out.values[j] = s / (2.0 * M_PI);
        } else {
            // u(x) = x f(|x|) = (1 / 2 pi^2) \int k f^(k) sin(k x) dk
            for (std::size_t n = 0; n < rg.size(); ++n)
                s += rg.w[n] * rg.rho[n] * g.rays[0][n] * std::sin(rg.rho[n] * x);
            out.values[j] = s / (2.0 * M_PI * M_PI);
        }
    }
    return out;
}

Field apply_delta_b(const Field& f, double b) {
    if (f.space != Space::physical) throw ValidationError("apply_delta_b expects a physical field");
    // In the odd radial form u = r f the operator acts as in one dimension.
    const Field lap = apply_multiplier(f, [](double xi) { return cplx(-xi * xi); });
    const Field der = apply_multiplier(f, [](double xi) { return I1 * xi; });
    Field out = lap;
    for (int j = 0; j < f.grid.N; ++j)
        out.values[j] += I1 * b * (0.5 * f.values[j] + f.grid.x(j) * der.values[j]);
    return out;
}

Field resolvent_apply(const Field& f, const SpectralPoint& pt, double b) {
    const SpectralSampler s(f);
    check_validity(pt, b, s.dim());
    const auto g = ray_grid_for(s, b, {pt.z});
    return rays_to_field(resolvent_rays(sample_rays(s, g), pt, b), f.grid);
}

Field resolvent_via_time_integral(const Field& f, const SpectralPoint& pt, double b, double T_max) {
    const SpectralSampler s(f);
    const auto g = ray_grid_for(s, b, {pt.z});
    return rays_to_field(resolvent_time_integral_rays(s, g, pt, b, T_max), f.grid);
}

double resolvent_identity_residual(const Field& f, cplx z, cplx z2, double b, bool mixed) {
    const SpectralSampler s(f);
    const int d = s.dim();
    const SpectralPoint p1{z, Branch::plus};
    const SpectralPoint p2{z2, mixed ? Branch::minus : Branch::plus};
    check_validity(p1, b, d);
    check_validity(p2, b, d);
    if (mixed && !(z.imag() > z2.imag())) throw ValidationError("mixed identity needs Im z > Im w");
    const auto g = ray_grid_for(s, b, {z, z2});
    const RayField F = sample_rays(s, g);
    const double nf = l2_norm(F);
    const RayField A = resolvent_rays(F, p1, b);
    const RayField B = resolvent_rays(F, p2, b);
    const RayField diff = axpy(-1.0, B, A);
    if (z == z2 && !mixed) return l2_norm(diff) / nf;
    const RayField C1 = resolvent_rays(B, p1, b);
    double res = l2_norm(axpy(-(z - z2), C1, diff)) / nf;
    if (mixed) {
        const RayField C2 = resolvent_rays(A, p2, b);
        res = std::max(res, l2_norm(axpy(-(z - z2), C2, diff)) / nf);
    }
    return res;
}

double sigma_shift_check(const Field& f, cplx z, double b, double sigma, Branch branch) {
    const SpectralSampler s(f);
    const int d = s.dim();
    const SpectralPoint p0{z, branch};
    const SpectralPoint p1{z + I1 * (b * sigma), branch};
    check_validity(p0, b, d);
    check_validity(p1, b, d);
    const auto g = ray_grid_for(s, b, {p0.z, p1.z});
    const RayField F = sample_rays(s, g);
    const RayField lhs = rho_power(resolvent_rays(rho_power(F, -sigma), p0, b), sigma);
    const RayField rhs = resolvent_rays(F, p1, b);
    return relative_l2_diff(lhs, rhs);
}

double sigma_shift_time_check(const Field& f, cplx z, double b, double sigma, double T_max) {
    const SpectralSampler s(f);
    const SpectralPoint p0{z, Branch::plus};
    const SpectralPoint p1{z + I1 * (b * sigma), Branch::plus};
    check_validity(p1, b, s.dim());
    const auto g = ray_grid_for(s, b, {p0.z, p1.z});
    const RayField lhs = resolvent_time_integral_rays(s, g, p0, b, T_max, b * sigma);
    const RayField rhs = resolvent_rays(sample_rays(s, g), p1, b);
    return relative_l2_diff(lhs, rhs);
}

double inversion_residual(const Field& f, const SpectralPoint& pt, double b) {
    const SpectralSampler s(f);
    check_validity(pt, b, s.dim());
    const auto g = ray_grid_for(s, b, {pt.z});
    const RayField F = sample_rays(s, g);
    const RayField G = resolvent_rays(F, pt, b);
    return relative_l2_diff(minus_delta_b_minus_z(G, pt.z, b), F);
}

DecayScan lambda_decay_scan(const Field& f, double y, double b, const RVec& lambdas, double p) {
    const SpectralSampler s(f);
    const int d = s.dim();
    if (!(p >= 2.0)) throw ValidationError("decay scan needs p >= 2");
    if (!(y > -b * (0.5 * d - d / p))) throw ValidationError("decay scan needs y > -b (d/2 - d/p)");
    DecayScan out;
    out.lambdas = lambdas;
    RVec lx, ls, ld;
    for (const double lam : lambdas) {
        const SpectralPoint pp{cplx(lam, y), Branch::plus};
        const SpectralPoint pm{cplx(lam, -y), Branch::minus};
        const auto g = ray_grid_for(s, b, {pp.z, pm.z});
        const RayField F = sample_rays(s, g);
        const RayField A = resolvent_rays(F, pp, b);
        const RayField D = axpy(-1.0, resolvent_rays(F, pm, b), A);
        double ns, nd;
        if (p == 2.0) {
            ns = l2_norm(A);
            nd = l2_norm(D);
        } else {
            ns = lp_norm(rays_to_field(A, f.grid), p);
            nd = lp_norm(rays_to_field(D, f.grid), p);
        }
        if (!std::isfinite(ns) || !std::isfinite(nd)) throw NumericalError("non-finite resolvent norm in decay scan");
        out.single.push_back(ns);
        out.difference.push_back(nd);
        if (lam >= 10.0) {
            lx.push_back(std::log(lam));
            ls.push_back(std::log(ns));
            ld.push_back(std::log(nd));
        }
    }
    if (lx.size() >= 2) {
        const LinearFit fs = linear_fit(lx, ls), fd = linear_fit(lx, ld);
        out.single_slope = fs.slope;
        out.single_r2 = fs.r2;
        out.difference_slope = fd.slope;
        out.difference_r2 = fd.r2;
    }
    return out;
}

}  // namespace selfsim
