#pragma once

#include <array>
#include <string>

#include "core_types.hpp"

namespace selfsim {

// Q'' from Q'' + (d-1)/r Q' - Q + i b (alpha Q + r Q') + Q|Q|^{p-1} = 0.
// At r = 0 the regular branch gives Q''(0) = (Q - i b alpha Q - Q|Q|^{p-1}) / d.
cplx profile_rhs(double r, cplx Q, cplx Qp, const ModelParams& mp);

enum class ProfileEvent { none, zero_crossing, overflow };

struct Trajectory {
    RVec r;
    CVec Q, Qp;
    ProfileEvent event = ProfileEvent::none;
    double event_r = 0.0;
    // max over the trajectory of |E|, E = |Q'|^2/2 - |Q|^2/2 + |Q|^{p+1}/(p+1)
    double monitor_max = 0.0;
    std::size_t steps = 0;
};

struct IntegrateOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    double r_start = 1e-4;
};

// Integrates from the series start to the last requested node. Output nodes
// must be increasing and nonnegative; node 0 is served by the series.
// Stops early (event recorded) on |Q| overflow or a zero of Q.
Trajectory integrate_profile(double Q0, double b, const ModelParams& mp, const RVec& nodes,
                             const IntegrateOptions& opt = {});
Trajectory integrate_profile(double Q0, double b, const ModelParams& mp, double r_max, double h,
                             const IntegrateOptions& opt = {});

// Amplitude of the fast chirped far-field branch Q ~ A e^{-i b r^2/2} r^{alpha-d+i/b}
// on the window [R1, R2]; zero for the admissible profile.
cplx shooting_objective(double Q0, double b, const ModelParams& mp, double R1, double R2,
                        const IntegrateOptions& opt = {});

struct Profile {
    ModelParams params;
    RadialGrid grid;
    CVec Q, Qprime;
    double b_star = 0.0;
    double Q0 = 0.0;
    double c_p = 0.0;
    double flatness = 0.0;
    double decay_derivative = 0.0;  // sup over the outer decade of r^{(p+1)/(p-1)} |Q'|
    double far_slope = 0.0;         // fitted d log|Q| / d log r on the outer decade
    double min_abs = 0.0;
    double objective = 0.0;
    int newton_iterations = 0;
};

struct ProfileBracket {
    std::array<double, 2> Q0{1.1, 1.2};
    std::array<double, 2> b{1.3, 1.45};
};

struct ProfileOptions {
    double r_shoot = 30.0;  // shooting radius; window is its outer 20%
    double r_store = 100.0;
    double h_store = 0.01;
    double tol = 1e-8;
    int max_iter = 100;
    IntegrateOptions ode;
};

// Damped Newton on (Q0, b) with a finite-difference Jacobian.
Profile find_profile(const ModelParams& mp, const ProfileBracket& bracket, const ProfileOptions& opt = {});

// Profile with given (Q0, b) stored on a uniform grid, with far-field diagnostics.
Profile make_profile(const ModelParams& mp, double Q0, double b, double r_store, double h,
                     const IntegrateOptions& ode = {});

// Throws ValidationError unless |Q| > 0 everywhere and the far field is flat to 1%.
void check_profile_invariants(const Profile& prof);

// sup over interior nodes of |Delta Q - Q + i b (alpha Q + r Q') + Q|Q|^{p-1}|,
// with sixth-order central differences.
double profile_residual(const Profile& prof);

struct Potentials {
    Field W1, W2;
    double decay_W1 = 0.0;  // sup over the outer decade of r^2 |W1|
    double decay_W2 = 0.0;
};

// W1 = (p+1)/2 |Q|^{p-1}, W2 = (p-1)/2 Q^2 |Q|^{p-3}, as multipliers W(|x|) on the line.
Potentials potentials_from_profile(const Profile& prof, const Grid1D& grid, const IntegrateOptions& ode = {});
// Q at increasing radii, re-integrated from the origin.
CVec profile_at(const Profile& prof, const RVec& radii, const IntegrateOptions& ode = {});
// Q(|x|) on the line (re-integrated at the grid nodes, not interpolated).
CVec profile_on_line(const Profile& prof, const Grid1D& grid, const IntegrateOptions& ode = {});

void save_profile(const Profile& prof, const std::string& path);
Profile load_profile(const std::string& path);

}  // namespace selfsim
