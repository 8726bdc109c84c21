#include "core_types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace selfsim {

ModelParams derive_params_unchecked(int d, double p, double b, double sigma) {
    if (d < 1) throw ValidationError("dimension must be >= 1");
    if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("nonlinearity exponent must be > 1");
    if (!std::isfinite(b) || !std::isfinite(sigma)) throw ValidationError("non-finite parameter");
    ModelParams mp;
    mp.d = d;
    mp.p = p;
    mp.b = b;
    mp.sigma = sigma;
    mp.s_c = 0.5 * d - 2.0 / (p - 1.0);
    mp.p_c = 2.0 * d / (d - 2.0 * mp.s_c);
    mp.alpha_c = d / (d + 2.0 - 2.0 * mp.s_c);
    return mp;
}

ModelParams derive_params(int d, double p, double b, double sigma) {
    if (!(b > 0.0)) throw ValidationError("rescaling rate b must be > 0");
    ModelParams mp = derive_params_unchecked(d, p, b, sigma);
    const double cap = std::min(1.0, 0.5 * d);
    if (!(mp.s_c > 0.0 && mp.s_c < cap)) {
        std::ostringstream os;
        os << "critical regularity s_c = " << mp.s_c << " outside (0, " << cap << ")";
        throw ValidationError(os.str());
    }
    if (!(sigma > mp.s_c && sigma < cap)) {
        std::ostringstream os;
        os << "sigma = " << sigma << " outside (s_c, " << cap << ") = (" << mp.s_c << ", " << cap << ")";
        throw ValidationError(os.str());
    }
    return mp;
}

void require_flow_sigma(const ModelParams& mp) {
    if (!(mp.sigma < mp.alpha_c)) {
        std::ostringstream os;
        os << "flow experiments need sigma < alpha_c = " << mp.alpha_c;
        throw ValidationError(os.str());
    }
}

Grid1D::Grid1D(int n, double half_width) : N(n), L(half_width) {
    if (n < 16 || (n & (n - 1)) != 0) throw ValidationError("grid size must be a power of two >= 16");
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw ValidationError("box half-width must be positive");
}

RVec Grid1D::nodes() const {
    RVec out(N);
    for (int j = 0; j < N; ++j) out[j] = x(j);
    return out;
}

RVec Grid1D::frequencies() const {
    RVec out(N);
    for (int k = 0; k < N; ++k) out[k] = xi(k);
    return out;
}

RadialGrid::RadialGrid(RVec nodes) : r(std::move(nodes)) {
    if (r.size() < 2) throw ValidationError("radial grid needs at least two nodes");
    if (r.front() < 0.0) throw ValidationError("radial nodes must be nonnegative");
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw ValidationError("radial nodes must be strictly increasing");
}

RadialGrid RadialGrid::uniform(double r_max, double h) {
    if (!(r_max > 0.0) || !(h > 0.0)) throw ValidationError("bad radial grid spec");
    const auto n = static_cast<std::size_t>(std::llround(r_max / h));
    RVec r(n + 1);
    for (std::size_t i = 0; i <= n; ++i) r[i] = r_max * static_cast<double>(i) / static_cast<double>(n);
    return RadialGrid(std::move(r));
}

Field::Field(Grid1D g, CVec v, Space s, Geometry ge)
    : grid(g), values(std::move(v)), space(s), geom(ge) {
    if (values.size() != static_cast<std::size_t>(grid.N))
        throw ValidationError("field length does not match grid");
}

Field Field::zeros(const Grid1D& g, Geometry ge) {
    return Field(g, CVec(g.N, cplx(0.0)), Space::physical, ge);
}

void Field::check_finite() const {
    for (const auto& z : values)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw ValidationError("field has non-finite entries");
}

VectorField2::VectorField2(Field a, Field b) : z1(std::move(a)), z2(std::move(b)) {
    if (!(z1.grid == z2.grid) || z1.geom != z2.geom)
        throw ValidationError("vector field components live on different grids");
}

double VectorField2::symmetry_defect() const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < z1.size(); ++i) {
        num += std::norm(z2[i] - std::conj(z1[i]));
        den += std::norm(z1[i]) + std::norm(z2[i]);
    }
    return den > 0.0 ? std::sqrt(2.0 * num / den) : 0.0;
}

std::string describe(const ModelParams& mp) {
    std::ostringstream os;
    os.precision(10);
    os << "d=" << mp.d << " p=" << mp.p << " b=" << mp.b << " sigma=" << mp.sigma << " s_c=" << mp.s_c
       << " p_c=" << mp.p_c << " alpha_c=" << mp.alpha_c;
    return os.str();
}

}  // namespace selfsim
