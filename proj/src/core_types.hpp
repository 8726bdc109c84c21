#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfsim {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

// Bad input: caller can fix it.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The numerics gave up (non-convergence, overflow, solver failure).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelParams {
    int d = 1;
    double p = 3.0;
    double b = 0.0;
    double sigma = 0.0;
    double s_c = 0.0;
    double p_c = 0.0;
    double alpha_c = 0.0;

    // 2/(p-1), the self-similar decay exponent of the profile.
    double alpha() const { return 2.0 / (p - 1.0); }
    double hom_dim() const { return 0.5 * d; }
};

// Throws ValidationError when s_c or sigma fall outside the allowed ranges.
ModelParams derive_params(int d, double p, double b, double sigma);

// Same formulas, no range checks. For regression cases outside the
// supercritical range (b = 0 soliton, s_c = 0, ...).
ModelParams derive_params_unchecked(int d, double p, double b, double sigma);

// Extra constraint for flow experiments.
void require_flow_sigma(const ModelParams& mp);

struct Grid1D {
    int N = 0;
    double L = 0.0;

    Grid1D() = default;
    Grid1D(int n, double half_width);

    double dx() const { return 2.0 * L / N; }
    double dxi() const { return M_PI / L; }
    double x(int j) const { return -L + j * dx(); }
    // FFT ordering: 0, 1, ..., N/2-1, -N/2, ..., -1.
    double xi(int k) const { return (k < N / 2 ? k : k - N) * dxi(); }
    RVec nodes() const;
    RVec frequencies() const;
    bool operator==(const Grid1D& o) const { return N == o.N && L == o.L; }
};

struct RadialGrid {
    RVec r;

    RadialGrid() = default;
    explicit RadialGrid(RVec nodes);
    static RadialGrid uniform(double r_max, double h);

    std::size_t size() const { return r.size(); }
    double r_max() const { return r.empty() ? 0.0 : r.back(); }
};

enum class Space { physical, frequency };

// Cartesian: values are f(x) on the line.
// RadialOdd: d = 3 radial f stored as u(x) = x f(|x|), an odd function on
// the line; the radial Laplacian becomes u''.
enum class Geometry { cartesian, radial_odd };

struct Field {
    Grid1D grid;
    CVec values;
    Space space = Space::physical;
    Geometry geom = Geometry::cartesian;

    Field() = default;
    Field(Grid1D g, CVec v, Space s = Space::physical, Geometry ge = Geometry::cartesian);
    static Field zeros(const Grid1D& g, Geometry ge = Geometry::cartesian);

    std::size_t size() const { return values.size(); }
    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }
    void check_finite() const;
    int dim() const { return geom == Geometry::cartesian ? 1 : 3; }
};

struct VectorField2 {
    Field z1, z2;

    VectorField2() = default;
    VectorField2(Field a, Field b);
    // Distance from the I-symmetric subspace {Z2 = conj(Z1)}, relative.
    double symmetry_defect() const;
};

std::string describe(const ModelParams& mp);

}  // namespace selfsim
