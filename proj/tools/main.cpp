#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "selfsim.h"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace selfsim_cli;

namespace {

// Carries the exit code of a failed library call.
struct Failure : std::runtime_error {
    int code;
    Failure(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

void ok(selfsim_status s, const char* what) {
    if (s == SELFSIM_OK) return;
    const int code = s == SELFSIM_ERR_VALIDATION || s == SELFSIM_ERR_IO ? 1 : 2;
    throw Failure(code, std::string(what) + ": " + selfsim_last_error());
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
    ~Handle() { Free(p); }
    T** out() { return &p; }
    operator T*() const { return p; }
};
using FieldH = Handle<selfsim_field, selfsim_field_free>;
using ProfileH = Handle<selfsim_profile, selfsim_profile_free>;
using SpectrumH = Handle<selfsim_spectrum, selfsim_spectrum_free>;
using SeriesH = Handle<selfsim_series, selfsim_series_free>;

std::string fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Failure(1, "cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Global {
    std::string out_dir;
    std::uint64_t seed = 1;
    int n = 2048;
    double L = 64.0;
    double overflow_tol = 1e-7;
};

// Output bookkeeping for one run.
struct Run {
    Global g;
    std::string name;
    std::vector<std::string> outputs;
    json summary = json::object();
    int status = 0;  // 2 when a flow aborted; outputs are still written

    std::string path(const std::string& file) const { return (fs::path(g.out_dir) / file).string(); }
    void text(const std::string& file, const std::string& body) {
        write_text(path(file), body);
        outputs.push_back(file);
    }
    void track(const std::string& file) { outputs.push_back(file); }
    void plot(const std::string& file, const std::vector<Panel>& panels) { text(file, render_svg(panels)); }
};

// ---- fields ---------------------------------------------------------------

FieldH make_field(int n, double L, bool radial, const std::vector<double>& re, const std::vector<double>& im) {
    FieldH f;
    ok(selfsim_field_create(n, L, radial ? 1 : 0, re.data(), im.data(), f.out()), "field");
    return f;
}

template <class Fn>
FieldH sample(int n, double L, bool radial, Fn fn) {
    std::vector<double> re(n), im(n);
    for (int j = 0; j < n; ++j) {
        const std::complex<double> v = fn(-L + 2.0 * L * j / n);
        re[j] = v.real();
        im[j] = v.imag();
    }
    return make_field(n, L, radial, re, im);
}

void field_values(const selfsim_field* f, std::vector<double>& re, std::vector<double>& im) {
    re.resize(selfsim_field_size(f));
    im.resize(re.size());
    ok(selfsim_field_values(f, re.data(), im.data()), "field values");
}

std::string field_text(const selfsim_field* f) {
    std::vector<double> re, im;
    field_values(f, re, im);
    std::ostringstream os;
    os << "# selfsim-field 1\n# n " << re.size() << "\n# half_width " << fmt(selfsim_field_half_width(f))
       << "\n# radial " << selfsim_field_radial(f) << "\n# columns x re im\n";
    for (std::size_t j = 0; j < re.size(); ++j)
        os << fmt(selfsim_field_x(f, static_cast<int>(j))) << ' ' << fmt(re[j]) << ' ' << fmt(im[j]) << '\n';
    return os.str();
}

FieldH load_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure(1, "cannot read field file " + path);
    int n = -1, radial = 0;
    double L = 0.0;
    bool magic = false;
    std::vector<double> re, im;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "selfsim-field") magic = true;
            else if (key == "n") ls >> n;
            else if (key == "half_width") ls >> L;
            else if (key == "radial") ls >> radial;
            continue;
        }
        double x, a, b;
        if (!(ls >> x >> a >> b)) throw Failure(1, "malformed field row in " + path);
        re.push_back(a);
        im.push_back(b);
    }
    if (!magic || n <= 0 || static_cast<int>(re.size()) != n) throw Failure(1, "not a field file: " + path);
    return make_field(n, L, radial != 0, re, im);
}

// ---- shared flow plumbing -------------------------------------------------

struct FlowOpts {
    double dtau = 1e-3, tau_end = 1.0;
    int cadence = 10;
    double sponge_rate = 300.0, sponge_inner = 0.7, interior = 0.6;
    bool no_sponge = false;
};

void add_flow_options(CLI::App* sc, FlowOpts& f) {
    sc->add_option("--dtau", f.dtau, "renormalized time step")->capture_default_str();
    sc->add_option("--tau-end", f.tau_end, "final renormalized time")->capture_default_str();
    sc->add_option("--cadence", f.cadence, "steps between diagnostics")->capture_default_str();
    sc->add_option("--sponge-rate", f.sponge_rate, "absorption rate")->capture_default_str();
    sc->add_option("--sponge-inner", f.sponge_inner, "sponge start as a fraction of L")->capture_default_str();
    sc->add_option("--interior", f.interior, "norm window as a fraction of L")->capture_default_str();
    sc->add_flag("--no-sponge", f.no_sponge, "disable the absorbing layer");
}

selfsim_flow_config flow_config(const FlowOpts& f, const Global& g) {
    selfsim_flow_config c;
    selfsim_flow_config_default(&c);
    c.dtau = f.dtau;
    c.tau_end = f.tau_end;
    c.cadence = f.cadence;
    c.sponge = f.no_sponge ? 0 : 1;
    c.sponge_rate = f.sponge_rate;
    c.sponge_inner = f.sponge_inner;
    c.interior = f.interior;
    c.overflow_tol = g.overflow_tol;
    return c;
}

struct SeriesData {
    std::vector<double> tau, eps, hsc, lpc;
};

SeriesData series_data(const selfsim_series* s) {
    SeriesData d;
    const int n = selfsim_series_size(s);
    for (int i = 0; i < n; ++i) {
        double t, e, h, l;
        ok(selfsim_series_row(s, i, &t, &e, &h, &l), "series");
        d.tau.push_back(t);
        d.eps.push_back(e);
        d.hsc.push_back(h);
        d.lpc.push_back(l);
    }
    return d;
}

json fit_json(const selfsim_fit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2},
            {"slope_ci", {f.slope_lo, f.slope_hi}}, {"n", f.n}};
}

ProfileH open_profile(const std::string& path) {
    ProfileH p;
    ok(selfsim_profile_load(path.c_str(), p.out()), "profile");
    return p;
}

selfsim_profile_info profile_info(const selfsim_profile* p) {
    selfsim_profile_info in;
    ok(selfsim_profile_info_get(p, &in), "profile info");
    return in;
}

json provenance(const std::string& profile_path, const Global& g) {
    return {{"profile_file", profile_path},
            {"profile_fnv1a64", fnv1a64(read_file(profile_path))},
            {"grid", {{"n", g.n}, {"half_width", g.L}}},
            {"seed", g.seed}};
}

void write_series(Run& run, const selfsim_series* s, const std::string& stem) {
    if (selfsim_series_aborted(s)) {
        run.status = 2;
        std::cerr << "flow aborted: " << selfsim_series_note(s) << "\n";
    }
    const std::string csv = stem + ".csv";
    ok(selfsim_series_write_csv(s, run.path(csv).c_str()), "series csv");
    run.track(csv);
}

// ---- subcommands ----------------------------------------------------------

struct PropagateOpts {
    std::string input, output = "propagated.txt";
    double t = 0.5, b = 1.0, width = 1.0;
    int oversample = 2;
    bool radial = false;
};

void cmd_propagate(Run& run, const PropagateOpts& o) {
    FieldH src = o.input.empty()
                     ? sample(run.g.n, run.g.L, o.radial,
                              [&](double x) {
                                  return std::complex<double>((o.radial ? x : 1.0) * std::exp(-x * x / (2 * o.width * o.width)));
                              })
                     : load_field(o.input);
    FieldH out;
    ok(selfsim_propagate(src, o.t, o.b, o.oversample, out.out()), "propagate");
    run.text(o.output, field_text(out));
    double n0, n1;
    ok(selfsim_norm(src, SELFSIM_NORM_LP, 2.0, 0.0, &n0), "norm");
    ok(selfsim_norm(out, SELFSIM_NORM_LP, 2.0, 0.0, &n1), "norm");
    run.summary["t"] = o.t;
    run.summary["b"] = o.b;
    run.summary["l2_in"] = n0;
    run.summary["l2_out"] = n1;
    if (o.t != 0.0 && o.b != 0.0) {
        FieldH ref;
        if (selfsim_propagate_oracle(src, o.t, o.b, ref.out()) == SELFSIM_OK) {
            double e;
            ok(selfsim_relative_l2_diff(out, ref, &e), "oracle");
            run.summary["oracle_rel_l2"] = e;
        }
    }
    std::vector<double> x, a0, a1, re, im;
    field_values(src, re, im);
    for (std::size_t j = 0; j < re.size(); ++j) {
        x.push_back(selfsim_field_x(src, static_cast<int>(j)));
        a0.push_back(std::hypot(re[j], im[j]));
    }
    field_values(out, re, im);
    for (std::size_t j = 0; j < re.size(); ++j) a1.push_back(std::hypot(re[j], im[j]));
    Panel p{"propagation", "x", "|u|"};
    p.curves = {{"t = 0", x, a0, "#1f77b4"}, {"t = " + fmt(o.t), x, a1, "#d62728"}};
    run.plot("propagate.svg", {p});
}

struct DispersiveOpts {
    int d = 1;
    double b = 1.0, tmax = 10.0;
    int samples = 200;
};

void cmd_dispersive(Run& run, const DispersiveOpts& o) {
    if (!(o.b > 0.0)) throw Failure(1, "dispersive-bench needs b > 0");
    const double tmin = 0.01 / o.b;
    if (!(o.tmax > tmin) || o.samples < 8) throw Failure(1, "need tmax > 0.01/b and at least 8 samples");
    std::vector<double> t, K, Kfree, fx, fy;
    std::ostringstream csv;
    csv << "t,K,K_free\n";
    for (int i = 0; i < o.samples; ++i) {
        const double ti = tmin * std::pow(o.tmax / tmin, static_cast<double>(i) / (o.samples - 1));
        double k;
        ok(selfsim_dispersive_norm(ti, o.b, o.d, &k), "dispersive norm");
        const double kf = std::pow(4.0 * M_PI * ti, -0.5 * o.d);
        t.push_back(ti);
        K.push_back(k);
        Kfree.push_back(kf);
        csv << fmt(ti) << ',' << fmt(k) << ',' << fmt(kf) << '\n';
        if (ti >= 3.0 / o.b && ti <= 10.0 / o.b) {
            fx.push_back(ti);
            fy.push_back(std::log(k));
        }
    }
    run.text("dispersive_bench.csv", csv.str());
    const double want = -0.5 * o.d * o.b;
    run.summary["expected_slope"] = want;
    if (fx.size() >= 3) {
        selfsim_fit f;
        ok(selfsim_linear_fit(fx.data(), fy.data(), static_cast<int>(fx.size()), 0, run.g.seed, &f), "fit");
        run.summary["fit_window"] = {3.0 / o.b, 10.0 / o.b};
        run.summary["slope"] = f.slope;
        run.summary["slope_check"] = std::abs(f.slope / want - 1.0) < 0.02;
    } else {
        run.summary["slope_check"] = nullptr;
    }
    double k0;
    ok(selfsim_dispersive_norm(tmin, o.b, o.d, &k0), "dispersive norm");
    const double ratio = k0 * std::pow(4.0 * M_PI * tmin, 0.5 * o.d);
    run.summary["small_t_ratio"] = ratio;
    run.summary["small_t_check"] = std::abs(ratio - 1.0) < 0.01;
    Panel p{"dispersive kernel norm", "t", "K(t)"};
    p.logy = true;
    p.curves = {{"K", t, K, "#1f77b4"}, {"free", t, Kfree, "#7f7f7f"}};
    run.plot("dispersive_bench.svg", {p});
}

struct StrichartzOpts {
    double b = 1.0, T = 400.0;
    int nt = 400, cells = 100;
};

// Lower edge of the admissible region in (1/p, 1/q), by bisection on the predicate.
bool boundary_at(double inv_p, int d, double& inv_q) {
    auto adm = [&](double y) {
        const double q = y > 0.0 ? 1.0 / y : INFINITY;
        const double p = inv_p > 0.0 ? 1.0 / inv_p : INFINITY;
        return selfsim_admissible(q, p, d) == 1;
    };
    if (!adm(0.5 - 1e-12) && !adm(0.5)) return false;
    double lo = 0.0, hi = 0.5;
    if (adm(lo)) {
        inv_q = 0.0;
        return true;
    }
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (adm(mid) ? hi : lo) = mid;
    }
    inv_q = hi;
    return true;
}

void cmd_strichartz(Run& run, const StrichartzOpts& o) {
    std::vector<Panel> panels;
    std::ostringstream bcsv;
    bcsv << "d,inv_p,inv_q\n";
    json region = json::object();
    for (int d = 1; d <= 3; ++d) {
        Panel p{"d = " + std::to_string(d), "1/p", "1/q"};
        p.xlo = 0.0, p.xhi = 0.5, p.ylo = 0.0, p.yhi = 0.5;
        const double c = 0.5 / o.cells;
        int count = 0;
        for (int i = 0; i < o.cells; ++i)
            for (int j = 0; j < o.cells; ++j) {
                const double x = (i + 0.5) * c, y = (j + 0.5) * c;
                if (selfsim_admissible(1.0 / y, 1.0 / x, d)) {
                    p.cells.push_back({i * c, j * c, (i + 1) * c, (j + 1) * c, "#c6dbef"});
                    ++count;
                }
            }
        Curve edge{"boundary", {}, {}, "#08306b"};
        for (int i = 0; i <= 200; ++i) {
            const double x = 0.5 * i / 200.0;
            double y;
            if (!boundary_at(x, d, y)) continue;
            edge.x.push_back(x);
            edge.y.push_back(y);
            bcsv << d << ',' << fmt(x) << ',' << fmt(y) << '\n';
        }
        p.curves.push_back(edge);
        // (q, p) = (inf, 2) is admissible; (2, inf) is not
        p.curves.push_back({"", {0.5}, {0.0}, "#08306b", true});
        p.curves.push_back({"", {0.0}, {0.5}, "#d62728", true});
        region[std::to_string(d)] = {{"admissible_cells", count}, {"boundary_points", edge.x.size()}};
        panels.push_back(p);
    }
    run.text("strichartz_boundary.csv", bcsv.str());
    run.plot("strichartz_map.svg", panels);
    run.summary["region"] = region;

    FieldH u0 = sample(512, 32.0, false, [](double x) { return std::complex<double>(std::exp(-x * x / 2.0)); });
    const std::vector<std::pair<double, double>> pairs = {{INFINITY, 2.0}, {4.0, INFINITY}, {8.0, 4.0}, {4.0, 4.0},
                                                          {2.0, 4.0},      {6.0, 6.0},      {3.0, 8.0}, {2.0, 10.0},
                                                          {5.0, 3.0},      {10.0, 2.5},     {4.0, 3.0}, {2.5, 6.0}};
    std::ostringstream csv;
    csv << "q,p,b,integral,saturated\n";
    int saturated = 0, tried = 0;
    for (const auto& [q, p] : pairs) {
        if (!selfsim_admissible(q, p, 1)) continue;
        double I;
        int sat;
        ok(selfsim_strichartz(u0, q, p, o.b, o.T, o.nt, &I, &sat), "strichartz");
        csv << fmt(q) << ',' << fmt(p) << ',' << fmt(o.b) << ',' << fmt(I) << ',' << sat << '\n';
        saturated += sat;
        ++tried;
    }
    // b = 0 control inside the enlarged region but off the free scaling line
    FieldH wide = sample(4096, 400.0, false, [](double x) { return std::complex<double>(std::exp(-x * x / 2.0)); });
    double Ic;
    int satc;
    ok(selfsim_strichartz(wide, 2.0, 4.0, 0.0, 50.0, o.nt, &Ic, &satc), "strichartz control");
    csv << "2,4,0," << fmt(Ic) << ',' << satc << '\n';
    run.text("strichartz_samples.csv", csv.str());
    run.summary["pairs_tried"] = tried;
    run.summary["pairs_saturated"] = saturated;
    run.summary["control_saturated"] = satc == 1;
}

struct ResolventOpts {
    double b = 1.0, sigma = 0.25;
};

void cmd_resolvent(Run& run, const ResolventOpts& o) {
    using C = std::complex<double>;
    const int n = 512;
    const double L = 24.0;
    const C I1(0.0, 1.0);
    std::vector<std::pair<std::string, FieldH>> suite;
    suite.emplace_back("gaussian", sample(n, L, false, [](double x) { return C(std::exp(-x * x / 2.0)); }));
    suite.emplace_back("shifted", sample(n, L, false, [](double x) { return C(std::exp(-(x - 1.0) * (x - 1.0))); }));
    suite.emplace_back("odd", sample(n, L, false, [](double x) { return C(x * std::exp(-x * x / 2.0)); }));
    suite.emplace_back("modulated", sample(n, L, false, [&](double x) { return std::exp(-x * x / 2.0 + I1 * x); }));
    suite.emplace_back("chirped", sample(n, L, false, [&](double x) { return std::exp(-(0.7 + 0.3 * I1) * x * x); }));
    std::ostringstream csv;
    csv << "input,inversion_plus,inversion_minus,identity_same,identity_mixed,sigma_shift\n";
    double worst_inv = 0.0, worst_id = 0.0, worst_sig = 0.0;
    for (const auto& [name, f] : suite) {
        double ip, im, same, mixed, sig;
        ok(selfsim_inversion_residual(f, 0.3, 0.2, 0, o.b, &ip), "inversion");
        ok(selfsim_inversion_residual(f, -0.5, -0.25, 1, o.b, &im), "inversion");
        ok(selfsim_identity_residual(f, 0.5, 0.3, -0.2, 0.6, o.b, 0, &same), "identity");
        ok(selfsim_identity_residual(f, 0.5, 0.3, -0.2, -0.1, o.b, 1, &mixed), "identity");
        ok(selfsim_sigma_shift(f, 0.4, 0.1, o.b, o.sigma, &sig), "sigma shift");
        csv << name << ',' << fmt(ip) << ',' << fmt(im) << ',' << fmt(same) << ',' << fmt(mixed) << ',' << fmt(sig)
            << '\n';
        worst_inv = std::max({worst_inv, ip, im});
        worst_id = std::max({worst_id, same, mixed});
        worst_sig = std::max(worst_sig, sig);
    }
    run.text("resolvent_check.csv", csv.str());
    std::vector<double> lam;
    for (int k = 0; k <= 8; ++k) lam.push_back(10.0 * std::pow(30.0, k / 8.0));
    std::vector<double> single(lam.size()), diff(lam.size());
    double ss, ds;
    ok(selfsim_decay_scan(suite[0].second, 1.0, o.b, lam.data(), static_cast<int>(lam.size()), single.data(),
                          diff.data(), &ss, &ds),
       "decay scan");
    std::ostringstream dcsv;
    dcsv << "lambda,single,difference\n";
    for (std::size_t i = 0; i < lam.size(); ++i) dcsv << fmt(lam[i]) << ',' << fmt(single[i]) << ',' << fmt(diff[i]) << '\n';
    run.text("resolvent_decay.csv", dcsv.str());
    run.summary["max_inversion"] = worst_inv;
    run.summary["max_identity"] = worst_id;
    run.summary["max_sigma_shift"] = worst_sig;
    run.summary["single_slope"] = ss;
    run.summary["difference_slope"] = ds;
    Panel p{"resolvent decay in lambda", "lambda", "norm"};
    p.logx = p.logy = true;
    p.curves = {{"single", lam, single, "#1f77b4", true}, {"difference", lam, diff, "#d62728", true}};
    run.plot("resolvent_decay.svg", {p});
}

struct ProfileOpts {
    int d = 1;
    double p = 7.0;
    std::vector<double> q0{1.1, 1.2}, b{1.3, 1.45};
    std::string output = "profile.txt";
};

void cmd_profile(Run& run, const ProfileOpts& o) {
    if (o.q0.size() != 2 || o.b.size() != 2) throw Failure(1, "brackets take two values");
    ProfileH pr;
    ok(selfsim_profile_find(o.d, o.p, o.q0[0], o.q0[1], o.b[0], o.b[1], pr.out()), "profile");
    ok(selfsim_profile_save(pr, run.path(o.output).c_str()), "profile save");
    run.track(o.output);
    const selfsim_profile_info in = profile_info(pr);
    const bool valid = selfsim_profile_check(pr) == SELFSIM_OK;
    run.summary = {{"d", in.d},         {"p", in.p},           {"b_star", in.b_star},       {"Q0", in.Q0},
                   {"c_p", in.c_p},     {"flatness", in.flatness}, {"far_slope", in.far_slope},
                   {"expected_far_slope", -2.0 / (in.p - 1.0)},   {"min_abs", in.min_abs},
                   {"objective", in.objective}, {"relative_residual", in.residual},
                   {"newton_iterations", in.iterations}, {"invariants_hold", valid}};
    // |Q| and r^{2/(p-1)} |Q| on a log grid, read back from the stored file
    std::ifstream f(run.path(o.output));
    std::string line;
    std::vector<double> r, a, s;
    const double alpha = 2.0 / (in.p - 1.0);
    double next = 0.05;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double ri, qr, qi;
        ls >> ri >> qr >> qi;
        if (ri < next) continue;
        next = ri * 1.02;
        r.push_back(ri);
        a.push_back(std::hypot(qr, qi));
        s.push_back(std::pow(ri, alpha) * std::hypot(qr, qi));
    }
    Panel p{"profile modulus", "r", "|Q|"};
    p.logx = p.logy = true;
    p.curves = {{"|Q|", r, a, "#1f77b4"}, {"r^alpha |Q|", r, s, "#2ca02c"}};
    run.plot("profile.svg", {p});
}

struct SpectrumOpts {
    std::string profile;
    double r_max = 20.0, h = 0.1, sigma = 0.0, line_gap = 0.0;
    std::string parity = "even";
    int order = 4;
};

void cmd_spectrum(Run& run, const SpectrumOpts& o) {
    ProfileH pr = open_profile(o.profile);
    const selfsim_profile_info in = profile_info(pr);
    selfsim_spectrum_options so;
    selfsim_spectrum_options_default(&so);
    so.r_max = o.r_max;
    so.h = o.h;
    so.parity_even = o.parity == "even" ? 1 : 0;
    so.stencil_order = o.order;
    so.sigma = o.sigma;
    so.line_gap = o.line_gap;
    so.im_min = -3.0 * in.b_star;
    so.im_max = 3.0 * in.b_star;
    SpectrumH sp;
    ok(selfsim_spectrum_compute(pr, &so, sp.out()), "spectrum");
    ok(selfsim_spectrum_write(sp, run.path("spectrum.txt").c_str()), "spectrum table");
    run.track("spectrum.txt");
    selfsim_spectrum_info si;
    ok(selfsim_spectrum_info_get(sp, &si), "spectrum info");
    Curve cont{"continuum", {}, {}, "#7f7f7f", true}, tag{"tagged", {}, {}, "#d62728", true};
    json tagged = json::array();
    for (int i = 0; i < si.n_values; ++i) {
        double re, im, loc;
        int t;
        ok(selfsim_spectrum_value(sp, i, &re, &im, &loc, &t), "eigenvalue");
        if (re < so.re_min || re > so.re_max || im < so.im_min || im > so.im_max) continue;
        (t ? tag : cont).x.push_back(re);
        (t ? tag : cont).y.push_back(im);
        if (t) tagged.push_back({re, im});
    }
    run.summary = {{"dim", si.dim},
                   {"tagged", tagged},
                   {"resonance_residual", si.resonance_residual < 0 ? json(nullptr) : json(si.resonance_residual)},
                   {"j_symmetry_relative", si.j_symmetry},
                   {"idempotence", si.idempotence},
                   {"commutation", si.commutation},
                   {"rank", si.rank},
                   {"schur_fallback", si.schur_fallback == 1},
                   {"coarse_grid", si.coarse == 1},
                   {"essential_line", in.b_star * (o.sigma - (0.5 * in.d - 2.0 / (in.p - 1.0)))}};
    Panel p{"spectrum", "Re z", "Im z"};
    const double line = run.summary["essential_line"];
    p.curves = {cont, tag, {"essential line", {so.re_min, so.re_max}, {line, line}, "#1f77b4"}};
    run.plot("spectrum.svg", {p});
}

struct EvolveOpts {
    std::string profile;
    double sigma = 0.3, cutoff = 0.0;
    FlowOpts flow;
};

selfsim_params flow_params(const selfsim_profile* pr, double sigma) {
    const selfsim_profile_info in = profile_info(pr);
    selfsim_params mp;
    ok(selfsim_derive_params(in.d, in.p, in.b_star, sigma, &mp), "params");
    ok(selfsim_check_flow_sigma(&mp), "params");
    return mp;
}

FieldH cutoff_profile(const selfsim_field* Q, double R) {
    FieldH v;
    ok(selfsim_field_copy(Q, v.out()), "copy");
    std::vector<double> re, im;
    field_values(Q, re, im);
    for (std::size_t j = 0; j < re.size(); ++j) {
        const double w = 0.5 * std::erfc(std::abs(selfsim_field_x(Q, static_cast<int>(j))) - R);
        re[j] *= w;
        im[j] *= w;
    }
    return make_field(selfsim_field_size(Q), selfsim_field_half_width(Q), selfsim_field_radial(Q), re, im);
}

void series_plot(Run& run, const SeriesData& d, const std::string& file, const std::string& title) {
    Panel a{title, "tau", "norm"};
    a.logy = true;
    a.curves = {{"Hsigma eps", d.tau, d.eps, "#d62728"}};
    Panel b{title, "tau", "critical norms"};
    b.curves = {{"Hsc v", d.tau, d.hsc, "#1f77b4"}, {"Lpc v", d.tau, d.lpc, "#2ca02c"}};
    run.plot(file, {a, b});
}

void cmd_evolve(Run& run, const EvolveOpts& o) {
    ProfileH pr = open_profile(o.profile);
    const selfsim_params mp = flow_params(pr, o.sigma);
    FieldH Q;
    ok(selfsim_profile_field(pr, run.g.n, run.g.L, Q.out()), "profile field");
    const selfsim_flow_config cfg = flow_config(o.flow, run.g);
    SeriesH s;
    if (o.cutoff > 0.0) {
        FieldH v0 = cutoff_profile(Q, o.cutoff);
        ok(selfsim_evolve(v0, nullptr, &mp, &cfg, s.out()), "evolve");
    } else {
        ok(selfsim_evolve(Q, Q, &mp, &cfg, s.out()), "evolve");
    }
    write_series(run, s, "evolve");
    const SeriesData d = series_data(s);
    double qn;
    ok(selfsim_norm(Q, SELFSIM_NORM_HOM_SOBOLEV, o.sigma, cfg.interior * run.g.L, &qn), "norm");
    double drift = 0.0;
    for (double e : d.eps) drift = std::max(drift, e / qn);
    run.summary = {{"mode", o.cutoff > 0.0 ? "truncated" : "fixed_point"},
                   {"aborted", selfsim_series_aborted(s) == 1},
                   {"note", selfsim_series_note(s)},
                   {"samples", d.tau.size()},
                   {"max_relative_hsigma", drift},
                   {"provenance", provenance(o.profile, run.g)}};
    series_plot(run, d, "evolve.svg", "renormalized flow");
}

struct PerturbOpts {
    std::string profile;
    double sigma = 0.35, amp = 5e-4, r_op = 20.0;
    bool project = false;
    FlowOpts flow;
};

// Seeded sum of three complex Gaussian bumps.
FieldH random_perturbation(const Global& g, bool radial, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(-3.0, 3.0), width(0.7, 1.5), phase(0.0, 2.0 * M_PI), mag(0.5, 1.0);
    struct Bump {
        double c, w;
        std::complex<double> a;
    };
    std::vector<Bump> bumps;
    for (int k = 0; k < 3; ++k) {
        const double c = centre(rng), w = width(rng), ph = phase(rng), m = mag(rng);
        bumps.push_back({c, w, std::polar(m, ph)});
    }
    return sample(g.n, g.L, radial, [&](double x) {
        std::complex<double> v = 0.0;
        for (const auto& b : bumps) v += b.a * std::exp(-(x - b.c) * (x - b.c) / (b.w * b.w));
        return radial ? x * v : v;
    });
}

void cmd_perturb(Run& run, const PerturbOpts& o) {
    ProfileH pr = open_profile(o.profile);
    const selfsim_params mp = flow_params(pr, o.sigma);
    (void)mp;
    FieldH Q;
    ok(selfsim_profile_field(pr, run.g.n, run.g.L, Q.out()), "profile field");
    const bool radial = selfsim_field_radial(Q) == 1;
    FieldH raw = random_perturbation(run.g, radial, run.g.seed);
    const double R = o.flow.interior * run.g.L;
    double qn, en;
    ok(selfsim_norm(Q, SELFSIM_NORM_HOM_SOBOLEV, o.sigma, R, &qn), "norm");
    ok(selfsim_norm(raw, SELFSIM_NORM_HOM_SOBOLEV, o.sigma, R, &en), "norm");
    FieldH eps;
    ok(selfsim_field_create(run.g.n, run.g.L, radial, nullptr, nullptr, eps.out()), "field");
    ok(selfsim_field_axpy(eps, o.amp * qn / en, 0.0, raw), "scale");
    const selfsim_flow_config cfg = flow_config(o.flow, run.g);
    selfsim_perturb_result r;
    SeriesH s;
    ok(selfsim_perturb(pr, eps, &cfg, o.sigma, o.project ? 1 : 0, o.r_op, run.g.seed, &r, s.out()), "perturb");
    write_series(run, s, "perturb");
    run.summary = {{"projected", o.project},
                   {"removed_modes", r.removed_modes},
                   {"removed_fraction", r.removed_fraction},
                   {"fit", fit_json(r.fit)},
                   {"fit_window", {r.fit_start, r.fit_end}},
                   {"target_rate", r.target_rate},
                   {"rate_within_25pct", r.fit.n > 0 && std::abs(r.fit.slope / r.target_rate - 1.0) <= 0.25},
                   {"unstable", r.unstable == 1},
                   {"departure_tau", r.departure_tau},
                   {"growth_rate", r.growth_rate},
                   {"aborted", selfsim_series_aborted(s) == 1},
                   {"provenance", provenance(o.profile, run.g)}};
    series_plot(run, series_data(s), "perturb.svg", "perturbation");
}

struct CritOpts {
    std::string profile;
    double sigma = 0.3, cutoff = 4.0;
    FlowOpts flow;
};

void cmd_critnorm(Run& run, const CritOpts& o) {
    ProfileH pr = open_profile(o.profile);
    const selfsim_params mp = flow_params(pr, o.sigma);
    FieldH Q;
    ok(selfsim_profile_field(pr, run.g.n, run.g.L, Q.out()), "profile field");
    FieldH v0 = cutoff_profile(Q, o.cutoff);
    const selfsim_flow_config cfg = flow_config(o.flow, run.g);
    SeriesH s;
    ok(selfsim_evolve(v0, nullptr, &mp, &cfg, s.out()), "evolve");
    write_series(run, s, "critnorm");
    selfsim_critnorm_result c;
    ok(selfsim_critnorm(s, &mp, Q, run.g.seed, &c), "critical-norm fit");
    run.summary = {{"hsc2", fit_json(c.hsc2)},
                   {"lpc", fit_json(c.lpc)},
                   {"fit_window", {c.fit_start, c.fit_end}},
                   {"static_hsc2", c.static_hsc2},
                   {"static_lpc", c.static_lpc},
                   {"hsc2_within_30pct", std::abs(c.hsc2.slope / c.static_hsc2 - 1.0) < 0.3},
                   {"lpc_within_30pct", std::abs(c.lpc.slope / c.static_lpc - 1.0) < 0.3},
                   {"growth", c.growth},
                   {"plateau", c.plateau == 1},
                   {"grew_2x", c.grew_2x == 1},
                   {"aborted", selfsim_series_aborted(s) == 1},
                   {"provenance", provenance(o.profile, run.g)}};
    series_plot(run, series_data(s), "critnorm.svg", "critical norms");
}

void write_manifest(Run& run, const CLI::App& app, const std::vector<std::string>& argv) {
    const std::string sidecar = run.name + ".json";
    json side = {{"subcommand", run.name}, {"results", run.summary}};
    run.text(sidecar, side.dump(2) + "\n");
    const std::string config = app.config_to_str(true, false);
    write_text(run.path(run.name + "_config.ini"), config);
    json outs = json::array();
    for (const auto& f : run.outputs) {
        const std::string bytes = read_file(run.path(f));
        outs.push_back({{"file", f}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64(bytes)}});
    }
    json m = {{"tool", "selfsim"},
              {"library_version", selfsim_version()},
              {"subcommand", run.name},
              {"argv", argv},
              {"config_file", run.name + "_config.ini"},
              {"config", config},
              {"config_fnv1a64", fnv1a64(config)},
              {"seed", run.g.seed},
              {"outputs", outs}};
    write_text(run.path(run.name + "_manifest.json"), m.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar NLS blowup numerics"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "INI file; command-line flags take precedence");
    Global g;
    const char* env = std::getenv("SELFSIM_OUTPUT_DIR");
    g.out_dir = env && *env ? env : "selfsim_out";
    app.add_option("--out", g.out_dir, "output directory (default $SELFSIM_OUTPUT_DIR)")->capture_default_str();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--n", g.n, "grid points")->capture_default_str();
    app.add_option("--L", g.L, "box half width")->capture_default_str();
    app.add_option("--overflow-tol", g.overflow_tol, "propagator band tolerance in flows")->capture_default_str();

    PropagateOpts po;
    auto* sp = app.add_subcommand("propagate", "apply exp(i t Delta_b) to a field file or a Gaussian");
    sp->add_option("--input", po.input, "field file (default: Gaussian on the global grid)");
    sp->add_option("--output", po.output, "output field file name")->capture_default_str();
    sp->add_option("--t", po.t, "time")->capture_default_str();
    sp->add_option("--b", po.b, "rescaling rate")->capture_default_str();
    sp->add_option("--oversample", po.oversample, "box oversampling")->capture_default_str();
    sp->add_option("--width", po.width, "Gaussian width")->capture_default_str();
    sp->add_flag("--radial", po.radial, "d = 3 radial Gaussian");

    DispersiveOpts dop;
    auto* sd = app.add_subcommand("dispersive-bench", "tabulate the L1 -> Linf kernel norm");
    sd->add_option("--d", dop.d, "dimension")->capture_default_str();
    sd->add_option("--b", dop.b, "rescaling rate")->capture_default_str();
    sd->add_option("--tmax", dop.tmax, "largest time")->capture_default_str();
    sd->add_option("--samples", dop.samples, "log-spaced samples")->capture_default_str();

    StrichartzOpts so;
    auto* ss = app.add_subcommand("strichartz-map", "admissible region map and saturation samples");
    ss->add_option("--b", so.b, "rescaling rate")->capture_default_str();
    ss->add_option("--T", so.T, "time horizon")->capture_default_str();
    ss->add_option("--nt", so.nt, "time samples")->capture_default_str();
    ss->add_option("--cells", so.cells, "raster cells per axis")->capture_default_str();

    ResolventOpts ro;
    auto* sr = app.add_subcommand("resolvent-check", "resolvent identities on a Schwartz suite");
    sr->add_option("--b", ro.b, "rescaling rate")->capture_default_str();
    sr->add_option("--sigma", ro.sigma, "conjugation order")->capture_default_str();

    ProfileOpts pro;
    auto* spr = app.add_subcommand("profile", "shoot for the self-similar profile");
    spr->add_option("--d", pro.d, "dimension (1 or 3)")->capture_default_str();
    spr->add_option("--p", pro.p, "nonlinearity exponent")->capture_default_str();
    spr->add_option("--bracket-q0", pro.q0, "Q(0) bracket")->expected(2)->capture_default_str();
    spr->add_option("--bracket-b", pro.b, "b bracket")->expected(2)->capture_default_str();
    spr->add_option("--output", pro.output, "profile file name")->capture_default_str();

    SpectrumOpts sop;
    auto* ssp = app.add_subcommand("spectrum", "eigenvalues of the linearized operator");
    ssp->add_option("--profile", sop.profile, "profile file")->required();
    ssp->add_option("--r-max", sop.r_max, "half-line extent")->capture_default_str();
    ssp->add_option("--spacing", sop.h, "node spacing")->capture_default_str();
    ssp->add_option("--parity", sop.parity, "even or odd sector")->check(CLI::IsMember({"even", "odd"}))->capture_default_str();
    ssp->add_option("--order", sop.order, "stencil order (2 or 4)")->capture_default_str();
    ssp->add_option("--sigma", sop.sigma, "conjugation order")->capture_default_str();
    ssp->add_option("--line-gap", sop.line_gap, "exclusion band around the essential line")->capture_default_str();

    EvolveOpts eo;
    auto* se = app.add_subcommand("evolve", "renormalized flow from Q_b or a truncated Q_b");
    se->add_option("--profile", eo.profile, "profile file")->required();
    se->add_option("--sigma", eo.sigma, "regularity of the error norm")->capture_default_str();
    se->add_option("--cutoff", eo.cutoff, "erfc truncation radius (0: start at Q_b)")->capture_default_str();
    add_flow_options(se, eo.flow);

    PerturbOpts pe;
    auto* spe = app.add_subcommand("perturb", "seeded perturbation of Q_b and its decay rate");
    spe->add_option("--profile", pe.profile, "profile file")->required();
    spe->add_option("--sigma", pe.sigma, "regularity of the error norm")->capture_default_str();
    spe->add_option("--amp", pe.amp, "Hdot^sigma size relative to Q_b")->capture_default_str();
    spe->add_flag("--project", pe.project, "remove the tagged discrete modes first");
    spe->add_option("--r-op", pe.r_op, "operator extent for the projection")->capture_default_str();
    add_flow_options(spe, pe.flow);

    CritOpts co;
    auto* sc = app.add_subcommand("critnorm", "critical-norm growth from a truncated profile");
    sc->add_option("--profile", co.profile, "profile file")->required();
    sc->add_option("--sigma", co.sigma, "regularity of the error norm")->capture_default_str();
    sc->add_option("--cutoff", co.cutoff, "erfc truncation radius")->capture_default_str();
    add_flow_options(sc, co.flow);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    std::vector<std::string> args(argv, argv + argc);
    Run run;
    run.g = g;
    run.name = app.get_subcommands().front()->get_name();
    try {
        fs::create_directories(g.out_dir);
        if (*sp) cmd_propagate(run, po);
        else if (*sd) cmd_dispersive(run, dop);
        else if (*ss) cmd_strichartz(run, so);
        else if (*sr) cmd_resolvent(run, ro);
        else if (*spr) cmd_profile(run, pro);
        else if (*ssp) cmd_spectrum(run, sop);
        else if (*se) cmd_evolve(run, eo);
        else if (*spe) cmd_perturb(run, pe);
        else if (*sc) cmd_critnorm(run, co);
        write_manifest(run, app, args);
    } catch (const Failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << run.summary.dump(2) << "\n";
    return run.status;
}
