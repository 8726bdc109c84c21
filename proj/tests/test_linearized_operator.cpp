#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "linearized_operator.hpp"

using namespace selfsim;

namespace {

const cplx I1(0.0, 1.0);

const Profile& profile_d1p7() {
    static const Profile pr = find_profile(derive_params(1, 7.0, 1.0, 0.2), ProfileBracket{});
    return pr;
}

const Profile& profile_d3p3() {
    static const Profile pr = [] {
        ProfileBracket br;
        br.Q0 = {1.8, 2.0};
        br.b = {0.85, 1.0};
        return find_profile(derive_params(3, 3.0, 1.0, 0.6), br);
    }();
    return pr;
}

OperatorOptions opts(double r_max, double h, Parity par) {
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

OperatorDisc free_operator(const ModelParams& mp, const OperatorOptions& o) {
    const std::size_t n = operator_nodes(o).size();
    return assemble_H(mp, CVec(n, 0.0), CVec(n, 0.0), o);
}

CVec sorted_eigs(const OperatorDisc& H) {
    EigenSet e = discrete_spectrum(H);
    CVec v = e.values;
    std::sort(v.begin(), v.end(), [](cplx a, cplx c) { return a.real() != c.real() ? a.real() < c.real() : a.imag() < c.imag(); });
    return v;
}

struct TaggedRun {
    CVec tagged;
    double resonance = 0.0;
};

TaggedRun tagged_d1(double r_max, double h, Parity par) {
    const Profile& pr = profile_d1p7();
    const OperatorDisc H = assemble_H(pr, opts(r_max, h, par));
    TaggedRun out;
    out.tagged = discrete_spectrum(H, window_for(pr.b_star)).tagged();
    if (par == Parity::even) out.resonance = resonance_residual(H, pr);
    return out;
}

double nearest(const CVec& set, cplx z) {
    double best = INFINITY;
    for (const cplx& y : set) best = std::min(best, std::abs(y - z));
    return best;
}

}  // namespace

TEST_CASE("b = 0 free blocks match the finite-difference Laplacian eigenvalues") {
    const ModelParams mp = derive_params_unchecked(1, 3.0, 0.0, 0.0);
    for (int order : {2, 4})
        for (Parity par : {Parity::odd, Parity::even}) {
            OperatorOptions o = opts(5.0, 0.1, par);
            o.stencil_order = order;
            const OperatorDisc H = free_operator(mp, o);
            const int M = 50;
            RVec expected;
            for (int k = (par == Parity::odd ? 1 : 0); k <= M; ++k) {
                // sine modes (odd) or shifted cosine modes (even), odd about r_max + h
                const double theta = (par == Parity::odd ? k : k + 0.5) * M_PI / (M + 1);
                const double lam = order == 2 ? (2.0 * std::cos(theta) - 2.0) / (o.h * o.h)
                                              : (-2.0 * std::cos(2.0 * theta) + 32.0 * std::cos(theta) - 30.0) /
                                                    (12.0 * o.h * o.h);
                CHECK(lam <= 0.0);
                expected.push_back(lam - 1.0);
                expected.push_back(-lam + 1.0);
            }
            std::sort(expected.begin(), expected.end());
            const CVec got = sorted_eigs(H);
            REQUIRE(got.size() == expected.size());
            double err = 0.0;
            for (std::size_t k = 0; k < got.size(); ++k)
                err = std::max(err, std::abs(got[k] - expected[k]) / (1.0 + std::abs(expected[k])));
            CHECK(err < 1e-10);
        }
}

TEST_CASE("potential block pattern and linearity") {
    const ModelParams mp = derive_params(1, 7.0, 1.2, 0.2);
    const OperatorOptions o = opts(4.0, 0.1, Parity::even);
    const std::size_t n = operator_nodes(o).size();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    CVec W1(n), W2(n);
    for (std::size_t i = 0; i < n; ++i) {
        W1[i] = std::abs(g(rng));
        W2[i] = cplx(g(rng), g(rng));
    }
    const OperatorDisc H0 = free_operator(mp, o);
    const OperatorDisc H = assemble_H(mp, W1, W2, o);
    double err = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i)
        for (std::size_t j = 0; j < 2 * n; ++j) {
            cplx want = 0.0;
            const std::size_t a = i % n, c = j % n;
            if (a == c) {
                if (i < n && j < n) want = W1[a];
                if (i < n && j >= n) want = W2[a];
                if (i >= n && j < n) want = -std::conj(W2[a]);
                if (i >= n && j >= n) want = -W1[a];
            }
            err = std::max(err, std::abs(H.matrix(i, j) - H0.matrix(i, j) - want));
        }
    // off-diagonal blocks are exact; the diagonal add rounds once
    CHECK(err < 1e-12);

    // diagonal blocks of the free operator: D_b - 1 - i b s_c and -(D_{-b}) + 1 - i b s_c
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx top = H0.matrix(i, j) + (i == j ? 1.0 + I1 * mp.b * mp.s_c : 0.0);
            const cplx bot = H0.matrix(n + i, n + j) - (i == j ? 1.0 - I1 * mp.b * mp.s_c : 0.0);
            CHECK(std::abs(top + std::conj(bot)) < 1e-12 * (1.0 + std::abs(top)));
        }
}

TEST_CASE("conjugated assembly is a rigid i b sigma shift") {
    const ModelParams mp = derive_params(1, 7.0, 1.0, 0.2);
    OperatorOptions o = opts(6.0, 0.1, Parity::odd);
    const OperatorDisc H0 = free_operator(mp, o);
    o.sigma = 0.4;
    const OperatorDisc Hs = free_operator(mp, o);
    for (std::size_t i = 0; i < H0.dim(); ++i)
        for (std::size_t j = 0; j < H0.dim(); ++j)
            CHECK(Hs.matrix(i, j) - H0.matrix(i, j) == (i == j ? I1 * mp.b * 0.4 : cplx(0.0)));
    const CVec a = sorted_eigs(H0), c = sorted_eigs(Hs);
    double err = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) err = std::max(err, std::abs(c[k] - a[k] - I1 * mp.b * 0.4));
    CHECK(err < 1e-8);
}

TEST_CASE("free conjugated case: nothing tagged, continuum on the shifted line") {
    const ModelParams mp = derive_params(1, 7.0, 1.0, 0.2);
    for (Parity par : {Parity::odd, Parity::even}) {
        OperatorOptions o = opts(20.0, 0.05, par);
        o.sigma = 0.4;
        const OperatorDisc H = free_operator(mp, o);
        const EigenSet e = discrete_spectrum(H, window_for(mp.b));
        const double line = mp.b * (0.4 - mp.s_c);
        CHECK(e.essential_line == doctest::Approx(line));
        CHECK(e.tagged().empty());
        RVec dev;
        for (const cplx& z : e.values) dev.push_back(std::abs(z.imag() - line));
        std::nth_element(dev.begin(), dev.begin() + dev.size() / 2, dev.end());
        CHECK(dev[dev.size() / 2] < 0.2 * line);
        CHECK(j_symmetry_check(e) < 1e-6 * std::abs(e.values.front()));
        const Projections P = riesz_projections(e, H);
        CHECK(P.rank == 0);
        CHECK(frobenius(P.P_disc) == 0.0);
    }
}

TEST_CASE("embedded resonance converges at fourth order") {
    const Profile& pr = profile_d1p7();
    RVec hs{0.2, 0.1, 0.05}, res;
    for (double h : hs) {
        const OperatorDisc H = assemble_H(pr, opts(20.0, h, Parity::even));
        CHECK_FALSE(H.coarse);
        res.push_back(resonance_residual(H, pr));
    }
    MESSAGE("resonance residuals " << res[0] << " " << res[1] << " " << res[2]);
    CHECK(res[2] < 1e-4);
    const double order = std::log(res[1] / res[2]) / std::log(2.0);
    CHECK(std::abs(order - 4.0) < 0.2 * 4.0);
    CHECK(res[0] > res[1]);
}

TEST_CASE("d = 3 resonance on u = r Q") {
    const Profile& pr = profile_d3p3();
    const OperatorDisc H1 = assemble_H(pr, opts(20.0, 0.1, Parity::odd));
    const OperatorDisc H2 = assemble_H(pr, opts(20.0, 0.05, Parity::odd));
    const double r1 = resonance_residual(H1, pr), r2 = resonance_residual(H2, pr);
    MESSAGE("d = 3 residuals " << r1 << " " << r2);
    CHECK(r2 < 1e-4);
    CHECK(std::abs(std::log2(r1 / r2) - 4.0) < 0.8);
    CHECK_THROWS_AS(assemble_H(pr, opts(20.0, 0.1, Parity::even)), ValidationError);
}

TEST_CASE("resonance residual input checks and sensitivity") {
    const Profile& pr = profile_d1p7();
    const OperatorDisc H = assemble_H(pr, opts(20.0, 0.05, Parity::even));
    CVec Q = profile_on_nodes(pr, H);
    CHECK_THROWS_AS(resonance_residual(H, CVec(Q.size(), 0.0)), ValidationError);
    const double base = resonance_residual(H, Q);
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const double r = H.grid.r[i];
        Q[i] *= 1.0 + 0.01 * std::exp(-(r - 2.0) * (r - 2.0));
    }
    CHECK(resonance_residual(H, Q) > 10.0 * base);
    const OperatorDisc Hodd = assemble_H(pr, opts(20.0, 0.05, Parity::odd));
    CHECK_THROWS_AS(resonance_residual(Hodd, pr), ValidationError);
    OperatorOptions o = opts(20.0, 0.05, Parity::even);
    o.sigma = 0.3;
    CHECK_THROWS_AS(resonance_residual(assemble_H(pr, o), pr), ValidationError);
}

TEST_CASE("tagged modes: symmetry eigenvalues, refinement stability, J-symmetry") {
    const double b = profile_d1p7().b_star;
    for (Parity par : {Parity::even, Parity::odd}) {
        const TaggedRun coarse = tagged_d1(20.0, 0.1, par);
        const TaggedRun fine = tagged_d1(20.0, 0.05, par);
        REQUIRE(!fine.tagged.empty());
        CHECK(coarse.tagged.size() == fine.tagged.size());
        for (const cplx& z : fine.tagged) {
            MESSAGE(std::string(par == Parity::even ? "even " : "odd ") << z.real() << " " << z.imag());
            CHECK(nearest(coarse.tagged, z) < 0.01 * std::abs(z));
        }
        // blowup-time mode -2ib (even), translation mode -ib (odd)
        const cplx sym = par == Parity::even ? -2.0 * I1 * b : -I1 * b;
        CHECK(nearest(fine.tagged, sym) < 0.01 * std::abs(sym));
    }
    const Profile& pr = profile_d1p7();
    const OperatorDisc H = assemble_H(pr, opts(20.0, 0.05, Parity::even));
    const EigenSet e = discrete_spectrum(H, window_for(pr.b_star));
    CHECK(j_symmetry_check(e) < 0.01 * e.window_size);
    CHECK(e.biorth_residual < 1e-8);
}

TEST_CASE("continuum artifacts move under refinement") {
    const Profile& pr = profile_d1p7();
    const EigenOptions eo = window_for(pr.b_star);
    const EigenSet a = discrete_spectrum(assemble_H(pr, opts(20.0, 0.1, Parity::even)), eo);
    const EigenSet c = discrete_spectrum(assemble_H(pr, opts(20.0, 0.05, Parity::even)), eo);
    CVec cont_c;
    for (std::size_t k = 0; k < c.values.size(); ++k)
        if (!c.discrete[k] && eo.window.contains(c.values[k])) cont_c.push_back(c.values[k]);
    int moved = 0, total = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (a.discrete[k] || !eo.window.contains(a.values[k])) continue;
        ++total;
        if (nearest(cont_c, a.values[k]) > 0.01 * std::abs(a.values[k])) ++moved;
    }
    MESSAGE(moved << " of " << total << " continuum eigenvalues moved by more than 1%");
    CHECK(total > 0);
    CHECK(moved > total / 2);
}

TEST_CASE("J-symmetry distance on hand-built sets") {
    EigenSet e;
    e.values = {cplx(0.0, 1.0), cplx(2.0, -1.0), cplx(-2.0, -1.0), cplx(0.0, -3.0)};
    e.discrete.assign(4, true);
    CHECK(j_symmetry_check(e) == 0.0);
    e.values = {cplx(0.0, 1.0), cplx(0.0, -2.5)};
    e.discrete.assign(2, true);
    CHECK(j_symmetry_check(e) == 0.0);
    e.values = {cplx(1.0, 1.0)};
    e.discrete.assign(1, true);
    CHECK(j_symmetry_check(e) == doctest::Approx(2.0));
    e.discrete.assign(1, false);
    CHECK(j_symmetry_check(e) == 0.0);
}

TEST_CASE("Riesz projection: idempotent, commuting, rank") {
    const Profile& pr = profile_d1p7();
    for (Parity par : {Parity::even, Parity::odd}) {
        const OperatorDisc H = assemble_H(pr, opts(20.0, 0.05, par));
        const EigenSet e = discrete_spectrum(H, window_for(pr.b_star));
        const Projections P = riesz_projections(e, H);
        MESSAGE("idempotence " << P.idempotence << ", commutation " << P.commutation);
        CHECK_FALSE(P.schur_fallback);
        CHECK(P.idempotence < 1e-6);
        CHECK(P.commutation < 1e-4);
        CHECK(P.rank == static_cast<int>(e.tagged().size()));
        double sum_err = 0.0;
        for (std::size_t i = 0; i < H.dim(); ++i)
            for (std::size_t j = 0; j < H.dim(); ++j)
                sum_err = std::max(sum_err, std::abs(P.P_disc(i, j) + P.P_ess(i, j) - (i == j ? 1.0 : 0.0)));
        CHECK(sum_err < 1e-12);
    }
}

TEST_CASE("Jordan cluster falls back to the Schur projector") {
    const ModelParams mp = derive_params(1, 7.0, 1.0, 0.2);
    OperatorDisc H = free_operator(mp, opts(4.0, 0.1, Parity::odd));
    const std::size_t N = H.dim();
    const cplx lam(0.5, -1.5);
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t j : {std::size_t{0}, std::size_t{1}}) {
            H.matrix(j, k) = 0.0;
            H.matrix(k, j) = 0.0;
        }
    H.matrix(0, 0) = lam;
    H.matrix(1, 1) = lam;
    H.matrix(0, 1) = 1.0;
    const EigenSet e = discrete_spectrum(H, window_for(mp.b));
    REQUIRE(e.tagged().size() == 2);
    const Projections P = riesz_projections(e, H);
    CHECK(P.schur_fallback);
    CHECK(P.rank == 2);
    CHECK(P.idempotence < 1e-6);
    CHECK(P.commutation < 1e-4);
    CHECK(std::abs(P.P_disc(0, 0) - 1.0) < 1e-6);
    CHECK(std::abs(P.P_disc(1, 1) - 1.0) < 1e-6);
}

TEST_CASE("grid validation and table output") {
    const ModelParams mp = derive_params(1, 7.0, 1.0, 0.2);
    CHECK_THROWS_AS(operator_nodes(opts(4.0, 0.0, Parity::odd)), ValidationError);
    CHECK_THROWS_AS(operator_nodes(opts(4.05, 0.1, Parity::odd)), ValidationError);
    CHECK_THROWS_AS(operator_nodes(opts(400.0, 0.1, Parity::odd)), ValidationError);
    OperatorOptions o = opts(2.0, 0.1, Parity::odd);
    o.stencil_order = 3;
    CHECK_THROWS_AS(operator_nodes(o), ValidationError);
    const OperatorDisc H = free_operator(mp, opts(2.0, 0.1, Parity::odd));
    const EigenSet e = discrete_spectrum(H);
    std::ostringstream os;
    write_eigen_table(e, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line[0] == '#');
    int rows = 0;
    while (std::getline(is, line)) {
        double re = 0, im = 0, loc = 0;
        char tag[32];
        CHECK(std::sscanf(line.c_str(), "%lf %lf %lf %31s", &re, &im, &loc, tag) == 4);
        ++rows;
    }
    CHECK(rows == static_cast<int>(H.dim()));
}
