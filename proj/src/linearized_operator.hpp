#pragma once

#include <iosfwd>
#include <string>

#include "core_types.hpp"
#include "profile_solver.hpp"

namespace selfsim {

// Column-major dense complex matrix.
struct DenseMatrix {
    std::size_t n = 0;
    CVec a;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t size) : n(size), a(size * size) {}
    cplx& operator()(std::size_t i, std::size_t j) { return a[i + j * n]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a[i + j * n]; }
};

DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y);
double frobenius(const DenseMatrix& x);

// Parity sector on the half line. Nodes are r_m = m h with m = 0..M (even)
// or m = 1..M (odd, u(0) = 0). The d = 3 radial field u = r f is odd.
enum class Parity { even, odd };

struct OperatorOptions {
    double r_max = 40.0;
    double h = 0.05;
    Parity parity = Parity::odd;
    int stencil_order = 4;  // 2 or 4
    double sigma = 0.0;     // conjugation regularity; 0 gives the plain operator
};

// Two stacked components of length n: Z = (z1, z2).
struct OperatorDisc {
    ModelParams params;  // b is the profile's b
    OperatorOptions opts;
    RadialGrid grid;     // the unknowns' radii
    DenseMatrix matrix;
    CVec W1, W2;         // potentials at the nodes
    bool coarse = false;  // fewer than 8 nodes per local oscillation of the profile phase
    std::string closure;

    std::size_t n() const { return grid.size(); }
    std::size_t dim() const { return 2 * grid.size(); }
};

// Nodes for the given options, with validation.
RadialGrid operator_nodes(const OperatorOptions& o);

// H = (D_b - 1, 0; 0, -D_{-b} + 1) - i b s_c + (W1, W2; -conj W2, -W1) + i b sigma,
// with D_b = D2 + i b K, K = (X D1 + D1 X)/2 the symmetrized dilation.
OperatorDisc assemble_H(const ModelParams& mp, const CVec& W1, const CVec& W2, const OperatorOptions& o);
OperatorDisc assemble_H(const Profile& prof, const OperatorOptions& o);

// Profile values at the operator nodes; times r for d = 3.
CVec profile_on_nodes(const Profile& prof, const OperatorDisc& H);

// Relative grid-L2 norm of H (iQ, -i conj Q) over r <= interior * r_max.
double resonance_residual(const OperatorDisc& H, const CVec& Q_nodes, double interior = 0.7);
double resonance_residual(const OperatorDisc& H, const Profile& prof, double interior = 0.7);

struct SpectralWindow {
    double re_min = -5.0, re_max = 5.0;
    double im_min = -5.0, im_max = 5.0;
    bool contains(cplx z) const {
        return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min && z.imag() <= im_max;
    }
    double size() const { return std::hypot(re_max - re_min, im_max - im_min); }
};

struct EigenOptions {
    SpectralWindow window;
    double loc_threshold = 0.1;
    double outer_fraction = 0.3;
    // Modes with |Im z - b(sigma - s_c)| below this are continuum regardless of
    // localization.
    double line_gap = 0.0;
};

struct EigenSet {
    std::size_t dim = 0;
    CVec values;
    DenseMatrix right, left;  // columns; left satisfies w^H H = z w^H, w_k^H v_k = 1
    RVec localization;
    std::vector<bool> discrete;
    double essential_line = 0.0;  // b (sigma - s_c)
    double window_size = 0.0;
    double biorth_residual = 0.0;  // max |w_j^H v_k - delta_jk| over tagged pairs

    CVec tagged() const;
};

EigenSet discrete_spectrum(const OperatorDisc& H, const EigenOptions& o = {});

// Hausdorff distance between the tagged set and its image under z -> -conj z.
double j_symmetry_check(const EigenSet& e);

struct Projections {
    DenseMatrix P_disc, P_ess;
    double idempotence = 0.0;   // ||P^2 - P||_F
    double commutation = 0.0;   // ||P H - H P||_F / ||H||_F
    int rank = 0;
    bool schur_fallback = false;
};

Projections riesz_projections(const EigenSet& e, const OperatorDisc& H);

// One row per eigenvalue: re, im, localization, tag.
void write_eigen_table(const EigenSet& e, std::ostream& os);

}  // namespace selfsim
