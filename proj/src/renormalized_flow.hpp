#pragma once

#include <memory>
#include <string>

#include "core_types.hpp"
#include "deformed_propagator.hpp"
#include "fit.hpp"
#include "linearized_operator.hpp"
#include "profile_solver.hpp"

namespace selfsim {

// Absorbing layer: the field is multiplied by exp(-rate * dtau * ramp(|x|))
// per step, ramp rising smoothly from 0 at inner*L to 1 at outer*L.
struct Sponge {
    bool enabled = true;
    double inner = 0.7;
    double outer = 0.95;
    double rate = 300.0;
};

struct FlowConfig {
    double dtau = 1e-3;
    double tau_end = 1.0;
    Sponge sponge;
    int cadence = 10;          // steps between diagnostics
    double interior = 0.6;     // norm window radius as a fraction of L
    bool nonlinear = true;
    int oversample = 2;
    // Q_b carries a residual fast chirped branch (amplitude ~ the shooting
    // tolerance) whose local frequency b|x| sweeps the whole band.
    double overflow_tol = 1e-7;
    double blowup_factor = 1e6;  // abort when a norm exceeds this times its initial value
};

// Throws ValidationError for an inconsistent configuration.
void check_flow_config(const FlowConfig& cfg, const Grid1D& grid, double b);

// v exp(i dtau |v|^{p-1}).
Field nonlinear_substep(const Field& v, double dtau, double p);

// e^{-i dtau} e^{b s_c dtau} e^{i dtau Delta_b} v.
Field linear_substep(const Field& v, double dtau, const ModelParams& mp, int oversample = 2);

RVec sponge_profile(const Grid1D& grid, const Sponge& s);

// Strang splitting N(dtau/2) L(dtau) N(dtau/2); the sponge is applied as a
// half-step mask at both ends, which keeps the scheme second order.
class FlowStepper {
public:
    FlowStepper(const Grid1D& grid, const ModelParams& mp, const FlowConfig& cfg);
    Field step(const Field& v) const;
    Field linear(const Field& v) const;

private:
    Grid1D grid_;
    ModelParams mp_;
    FlowConfig cfg_;
    std::unique_ptr<PropagatorPlan> plan_;
    RVec half_mask_;
};

Field strang_step(const Field& v, double dtau, const ModelParams& mp, const FlowConfig& cfg);

struct DiagnosticsSeries {
    RVec taus;
    RVec hsigma_eps;  // |v - reference|_{Hdot^sigma} on the interior window
    RVec hsc_v;       // |v|_{Hdot^{s_c}} on the interior window
    RVec lpc_v;       // |v|_{L^{p_c}} on the interior window
    bool aborted = false;
    std::string note;
    Field final_state;
};

// The reference (usually Q_b on the grid) defines eps = v - reference; pass a
// zero field to track |v| itself. With the sponge on, v0 is first faded out
// across the sponge layer.
DiagnosticsSeries evolve(const Field& v0, const Field& reference, const FlowConfig& cfg, const ModelParams& mp);

// Q_b on the flow grid; radial_odd stores x Q(|x|).
Field profile_field(const Profile& prof, const Grid1D& grid);

// Removes the tagged discrete modes of the linearized operator from eps0
// (nodes at the flow grid spacing, out to r_op). Returns the projected field.
struct EssentialProjection {
    Field projected;
    int removed_modes = 0;
    double removed_fraction = 0.0;  // |P_disc eps0| / |eps0| over the operator nodes
    CVec tagged;
};
EssentialProjection project_essential(const Field& eps0, const Profile& prof, double r_op,
                                      const EigenOptions& eo = {});

struct PerturbationResult {
    DiagnosticsSeries series;
    LinearFit fit;          // log |eps|_{Hdot^sigma} against tau
    double fit_start = 0.0, fit_end = 0.0;
    double target_rate = 0.0;  // -b (sigma - s_c)
    bool unstable = false;     // |eps| exceeded 10x its initial value
    double departure_tau = 0.0;
    double growth_rate = 0.0;  // log-slope while |eps| is between 10x and 100x its initial value
    std::string note;
};

PerturbationResult perturbation_experiment(const Profile& prof, const Field& eps0, const FlowConfig& cfg,
                                           double sigma, std::uint64_t seed = 1);

struct CriticalNormFit {
    LinearFit hsc2;   // |v|^2_{Hdot^{s_c}} against tau
    LinearFit lpc;    // |v|^{p_c}_{L^{p_c}} against tau
    double fit_start = 0.0, fit_end = 0.0;
    double growth = 0.0;     // final / initial |v|_{Hdot^{s_c}}
    bool plateau = false;    // fit stopped before the end of the run
    bool grew_2x = false;
};

CriticalNormFit critical_norm_track(const DiagnosticsSeries& s, const ModelParams& mp, std::uint64_t seed = 1);

// Slopes of |Q|^2_{Hdot^{s_c}} and |Q|^{p_c}_{L^{p_c}} on |x| <= R against log R,
// times b: the growth rates in tau predicted by a window expanding like e^{b tau}.
struct StaticSlopes {
    double hsc2 = 0.0, lpc = 0.0;
    double r2_hsc = 0.0, r2_lpc = 0.0;
};
StaticSlopes static_log_slopes(const Field& Q, const ModelParams& mp, const RVec& radii);

struct PhysicalState {
    Field u;
    double t = 0.0;
    double lambda = 1.0;
};

// u(x) = lambda^{-2/(p-1)} v(x / lambda) e^{i tau}, lambda = e^{-b tau},
// t = T (1 - e^{-2 b tau}) with T = 1/(2b). The grid is scaled by lambda.
PhysicalState physical_reconstruction(const Field& v, double tau, const ModelParams& mp);

void write_series_csv(const DiagnosticsSeries& s, const std::string& path);

}  // namespace selfsim
