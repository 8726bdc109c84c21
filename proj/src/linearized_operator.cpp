#include "linearized_operator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <cblas.h>
#include <lapacke.h>

namespace selfsim {

namespace {

constexpr cplx I1(0.0, 1.0);

struct Stencil {
    int half;
    RVec d2, d1;  // offsets -half..half, unscaled
    double s2, s1;
};

Stencil stencil(int order) {
    if (order == 2) return {1, {1, -2, 1}, {-1, 0, 1}, 1.0, 0.5};
    return {2, {-1, 16, -30, 16, -1}, {1, -8, 0, 8, -1}, 1.0 / 12.0, 1.0 / 12.0};
}

int first_node(Parity p) { return p == Parity::odd ? 1 : 0; }

double node_weight(const OperatorDisc& H, std::size_t i) {
    return (H.opts.parity == Parity::even && i == 0) ? 0.5 : 1.0;
}

// Eigenvalues of the selected diagonal entries of the Schur form of a are
// moved to the top; returns the leading Schur vectors.
DenseMatrix invariant_subspace(DenseMatrix a, const CVec& targets, double tol, std::size_t& m) {
    const lapack_int n = static_cast<lapack_int>(a.n);
    DenseMatrix z(a.n);
    CVec w(a.n);
    lapack_int sdim = 0;
    lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, a.a.data(), n, &sdim, w.data(),
                                    z.a.data(), n);
    if (info != 0) throw NumericalError("Schur decomposition failed");
    std::vector<lapack_logical> sel(a.n, 0);
    for (std::size_t i = 0; i < a.n; ++i)
        for (const cplx& t : targets)
            if (std::abs(w[i] - t) < tol) sel[i] = 1;
    lapack_int mm = 0;
    double s = 0.0, sep = 0.0;
    info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), n, a.a.data(), n, z.a.data(), n, w.data(), &mm,
                          &s, &sep);
    if (info != 0) throw NumericalError("Schur reordering failed");
    m = static_cast<std::size_t>(mm);
    return z;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.n != y.n) throw ValidationError("matmul size mismatch");
    DenseMatrix out(x.n);
    const cplx one(1.0), zero(0.0);
    const int n = static_cast<int>(x.n);
    cblas_zgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, n, n, n, &one, x.a.data(), n, y.a.data(), n, &zero,
                out.a.data(), n);
    return out;
}

double frobenius(const DenseMatrix& x) {
    double s = 0.0;
    for (const cplx& v : x.a) s += std::norm(v);
    return std::sqrt(s);
}

RadialGrid operator_nodes(const OperatorOptions& o) {
    if (!(o.h > 0.0) || !(o.r_max > 0.0)) throw ValidationError("operator grid needs h > 0 and r_max > 0");
    if (o.stencil_order != 2 && o.stencil_order != 4) throw ValidationError("stencil order must be 2 or 4");
    const int M = static_cast<int>(std::lround(o.r_max / o.h));
    if (std::abs(M * o.h - o.r_max) > 1e-9 * o.r_max) throw ValidationError("r_max must be a multiple of h");
    if (M < 8) throw ValidationError("operator grid needs at least 8 nodes");
    RVec r;
    for (int m = first_node(o.parity); m <= M; ++m) r.push_back(m * o.h);
    if (2 * r.size() > 4096) throw ValidationError("operator dimension exceeds 4096");
    return RadialGrid(std::move(r));
}

OperatorDisc assemble_H(const ModelParams& mp, const CVec& W1, const CVec& W2, const OperatorOptions& o) {
    if (mp.d == 3 && o.parity != Parity::odd) throw ValidationError("d = 3 radial fields live in the odd sector");
    if (mp.d != 1 && mp.d != 3) throw ValidationError("operator supports d = 1 and radial d = 3");
    OperatorDisc H;
    H.params = mp;
    H.opts = o;
    H.grid = operator_nodes(o);
    const std::size_t n = H.grid.size();
    if (W1.size() != n || W2.size() != n) throw ValidationError("potential length does not match the grid");
    H.W1 = W1;
    H.W2 = W2;
    H.closure = o.parity == Parity::odd ? "origin: odd reflection" : "origin: even reflection";
    H.closure += "; edge: odd ghost about r_max + h for D2, truncation for the dilation";
    H.matrix = DenseMatrix(2 * n);

    const Stencil st = stencil(o.stencil_order);
    const int M = static_cast<int>(std::lround(o.r_max / o.h));
    const int m0 = first_node(o.parity);
    const double h = o.h, b = mp.b;
    const double psign = o.parity == Parity::odd ? -1.0 : 1.0;
    DenseMatrix D2(n), K(n);
    for (int m = m0; m <= M; ++m) {
        const std::size_t row = m - m0;
        for (int off = -st.half; off <= st.half; ++off) {
            const int k = m + off;
            const double c2 = st.d2[off + st.half] * st.s2 / (h * h);
            const double ck = 0.5 * (m + k) * h * st.d1[off + st.half] * st.s1 / h;
            if (k > M) {
                const int kr = 2 * (M + 1) - k;
                if (kr <= M && kr >= m0) D2(row, kr - m0) -= c2;
                continue;
            }
            int col = k;
            double sgn = 1.0;
            if (k < 0) {
                col = -k;
                sgn = psign;
            }
            if (col < m0) continue;  // u(0) = 0 in the odd sector
            D2(row, col - m0) += sgn * c2;
            K(row, col - m0) += sgn * ck;
        }
    }

    const cplx shift = -I1 * b * mp.s_c + I1 * b * o.sigma;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            H.matrix(i, j) = D2(i, j) + I1 * b * K(i, j);
            H.matrix(n + i, n + j) = -(D2(i, j) - I1 * b * K(i, j));
        }
        H.matrix(i, i) += -1.0 + shift + W1[i];
        H.matrix(n + i, n + i) += 1.0 + shift - W1[i];
        H.matrix(i, n + i) = W2[i];
        H.matrix(n + i, i) = -std::conj(W2[i]);
    }
    for (const cplx& v : H.matrix.a)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("non-finite operator entry");
    return H;
}

CVec profile_on_nodes(const Profile& prof, const OperatorDisc& H) {
    CVec Q = profile_at(prof, H.grid.r);
    if (prof.params.d == 3)
        for (std::size_t i = 0; i < Q.size(); ++i) Q[i] *= H.grid.r[i];
    return Q;
}

OperatorDisc assemble_H(const Profile& prof, const OperatorOptions& o) {
    ModelParams mp = prof.params;
    mp.b = prof.b_star;
    const RadialGrid nodes = operator_nodes(o);
    const CVec Q = profile_at(prof, nodes.r);
    const double p = mp.p;
    CVec W1(Q.size()), W2(Q.size());
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const double a = std::abs(Q[i]);
        if (!(a > 0.0)) throw NumericalError("potential needs a non-vanishing profile");
        W1[i] = 0.5 * (p + 1.0) * std::pow(a, p - 1.0);
        W2[i] = 0.5 * (p - 1.0) * Q[i] * Q[i] * std::pow(a, p - 3.0);
    }
    OperatorDisc H = assemble_H(mp, W1, W2, o);
    double max_phase_step = 0.0;
    for (std::size_t i = 1; i < Q.size(); ++i)
        max_phase_step = std::max(max_phase_step, std::abs(std::arg(Q[i] / Q[i - 1])));
    H.coarse = max_phase_step > 2.0 * M_PI / 8.0;
    return H;
}

double resonance_residual(const OperatorDisc& H, const CVec& Q, double interior) {
    const std::size_t n = H.n();
    if (Q.size() != n) throw ValidationError("profile length does not match the operator grid");
    if (H.opts.sigma != 0.0) throw ValidationError("resonance check needs the unconjugated operator");
    if (H.params.d == 1 && H.opts.parity != Parity::even)
        throw ValidationError("the d = 1 resonance lives in the even sector");
    CVec Z(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        Z[i] = I1 * Q[i];
        Z[n + i] = -I1 * std::conj(Q[i]);
    }
    double zn = 0.0;
    for (const cplx& v : Z) zn += std::norm(v);
    if (!(zn > 0.0)) throw ValidationError("resonance vector is zero");
    const double r_cut = interior * H.opts.r_max;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (H.grid.r[i] > r_cut) continue;
        const double w = node_weight(H, i);
        for (std::size_t c = 0; c < 2; ++c) {
            const std::size_t row = c * n + i;
            cplx acc = 0.0;
            for (std::size_t j = 0; j < 2 * n; ++j) acc += H.matrix(row, j) * Z[j];
            num += w * std::norm(acc);
            den += w * std::norm(Z[row]);
        }
    }
    if (!(den > 0.0)) throw ValidationError("resonance vector vanishes on the interior window");
    return std::sqrt(num / den);
}

double resonance_residual(const OperatorDisc& H, const Profile& prof, double interior) {
    return resonance_residual(H, profile_on_nodes(prof, H), interior);
}

CVec EigenSet::tagged() const {
    CVec out;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (discrete[k]) out.push_back(values[k]);
    return out;
}

EigenSet discrete_spectrum(const OperatorDisc& H, const EigenOptions& o) {
    const std::size_t N = H.dim(), n = H.n();
    EigenSet e;
    e.dim = N;
    e.values.resize(N);
    e.right = DenseMatrix(N);
    e.left = DenseMatrix(N);
    DenseMatrix a = H.matrix;
    const lapack_int ln = static_cast<lapack_int>(N);
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'V', 'V', ln, a.a.data(), ln, e.values.data(),
                                          e.left.a.data(), ln, e.right.a.data(), ln);
    if (info != 0) throw NumericalError("dense eigensolve failed (zgeev info " + std::to_string(info) + ")");

    e.essential_line = H.params.b * (H.opts.sigma - H.params.s_c);
    e.window_size = o.window.size();
    const double r_outer = (1.0 - o.outer_fraction) * H.opts.r_max;
    e.localization.resize(N);
    e.discrete.assign(N, false);
    for (std::size_t k = 0; k < N; ++k) {
        double outer = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = node_weight(H, i);
            const double v = w * (std::norm(e.right(i, k)) + std::norm(e.right(n + i, k)));
            total += v;
            if (H.grid.r[i] > r_outer) outer += v;
        }
        e.localization[k] = std::sqrt(outer / total);
        const bool off_line = std::abs(e.values[k].imag() - e.essential_line) >= o.line_gap;
        e.discrete[k] = e.localization[k] < o.loc_threshold && o.window.contains(e.values[k]) && off_line;
    }

    // w_k^H v_k = 1
    for (std::size_t k = 0; k < N; ++k) {
        cplx s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += std::conj(e.left(i, k)) * e.right(i, k);
        if (std::abs(s) == 0.0) continue;
        const cplx f = 1.0 / std::conj(s);
        for (std::size_t i = 0; i < N; ++i) e.left(i, k) *= f;
    }
    std::vector<std::size_t> tag;
    for (std::size_t k = 0; k < N; ++k)
        if (e.discrete[k]) tag.push_back(k);
    for (std::size_t j : tag)
        for (std::size_t k : tag) {
            cplx s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += std::conj(e.left(i, j)) * e.right(i, k);
            e.biorth_residual = std::max(e.biorth_residual, std::abs(s - (j == k ? 1.0 : 0.0)));
        }
    return e;
}

double j_symmetry_check(const EigenSet& e) {
    const CVec t = e.tagged();
    if (t.empty()) return 0.0;
    double haus = 0.0;
    // the reflected set has the same size, so the directed distances coincide
    for (const cplx& z : t) {
        const cplx m = -std::conj(z);
        double best = INFINITY;
        for (const cplx& y : t) best = std::min(best, std::abs(m - y));
        haus = std::max(haus, best);
    }
    return haus;
}

Projections riesz_projections(const EigenSet& e, const OperatorDisc& H) {
    const std::size_t N = e.dim;
    if (H.dim() != N) throw ValidationError("eigen set and operator sizes differ");
    Projections out;
    out.P_disc = DenseMatrix(N);
    std::vector<std::size_t> tag;
    for (std::size_t k = 0; k < N; ++k)
        if (e.discrete[k]) tag.push_back(k);

    // Near-parallel right vectors or a blown-up biorthogonality signal a
    // Jordan cluster, where the eigenvector sum is unreliable.
    bool cluster = e.biorth_residual > 1e-8;
    for (std::size_t a = 0; a < tag.size() && !cluster; ++a)
        for (std::size_t c = a + 1; c < tag.size(); ++c) {
            cplx s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += std::conj(e.right(i, tag[a])) * e.right(i, tag[c]);
            if (std::abs(s) > 1.0 - 1e-6) cluster = true;
        }

    if (!cluster) {
        for (std::size_t k : tag)
            for (std::size_t j = 0; j < N; ++j) {
                const cplx wj = std::conj(e.left(j, k));
                for (std::size_t i = 0; i < N; ++i) out.P_disc(i, j) += e.right(i, k) * wj;
            }
    } else if (!tag.empty()) {
        out.schur_fallback = true;
        CVec targets, ctargets;
        for (std::size_t k : tag) {
            targets.push_back(e.values[k]);
            ctargets.push_back(std::conj(e.values[k]));
        }
        const double tol = 1e-6 * std::max(1.0, e.window_size);
        std::size_t mr = 0, ml = 0;
        const DenseMatrix Zr = invariant_subspace(H.matrix, targets, tol, mr);
        DenseMatrix Hh(N);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) Hh(i, j) = std::conj(H.matrix(j, i));
        const DenseMatrix Zl = invariant_subspace(Hh, ctargets, tol, ml);
        if (mr != ml || mr == 0) throw NumericalError("left and right invariant subspaces disagree in dimension");
        const std::size_t m = mr;
        // G = W^H V (m x m), solve G X = W^H, P = V X
        CVec G(m * m), WH(m * N);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < m; ++c) {
                cplx s = 0.0;
                for (std::size_t i = 0; i < N; ++i) s += std::conj(Zl(i, a)) * Zr(i, c);
                G[a + c * m] = s;
            }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t j = 0; j < N; ++j) WH[a + j * m] = std::conj(Zl(j, a));
        std::vector<lapack_int> piv(m);
        const lapack_int info = LAPACKE_zgesv(LAPACK_COL_MAJOR, static_cast<lapack_int>(m),
                                              static_cast<lapack_int>(N), G.data(), static_cast<lapack_int>(m),
                                              piv.data(), WH.data(), static_cast<lapack_int>(m));
        if (info != 0) throw NumericalError("cluster projector: singular left/right coupling");
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t a = 0; a < m; ++a) {
                const cplx x = WH[a + j * m];
                for (std::size_t i = 0; i < N; ++i) out.P_disc(i, j) += Zr(i, a) * x;
            }
    }

    out.P_ess = DenseMatrix(N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out.P_ess(i, j) = (i == j ? 1.0 : 0.0) - out.P_disc(i, j);

    DenseMatrix P2 = matmul(out.P_disc, out.P_disc);
    for (std::size_t k = 0; k < P2.a.size(); ++k) P2.a[k] -= out.P_disc.a[k];
    out.idempotence = frobenius(P2);
    DenseMatrix PH = matmul(out.P_disc, H.matrix);
    const DenseMatrix HP = matmul(H.matrix, out.P_disc);
    for (std::size_t k = 0; k < PH.a.size(); ++k) PH.a[k] -= HP.a[k];
    out.commutation = frobenius(PH) / frobenius(H.matrix);

    DenseMatrix tmp = out.P_disc;
    RVec sv(N), superb(N);
    const lapack_int ln = static_cast<lapack_int>(N);
    const lapack_int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', 'N', ln, ln, tmp.a.data(), ln, sv.data(), nullptr,
                                           1, nullptr, 1, superb.data());
    if (info != 0) throw NumericalError("singular value decomposition failed");
    // a nonzero projector has singular values >= 1
    out.rank = static_cast<int>(std::count_if(sv.begin(), sv.end(), [](double s) { return s > 0.5; }));
    return out;
}

void write_eigen_table(const EigenSet& e, std::ostream& os) {
    os << "# re im localization tag\n";
    char buf[160];
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12e %.12e %.6e %s\n", e.values[k].real(), e.values[k].imag(),
                      e.localization[k], e.discrete[k] ? "discrete" : "continuum");
        os << buf;
    }
}

}  // namespace selfsim
