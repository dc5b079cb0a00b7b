#pragma once

// Nonlinear evolution of a periodic capillary vortex sheet in the tangent
// angle / sheet strength / uniform arclength density frame, with the full
// derived-field pipeline (velocities, pressure, curvature-system remainders),
// an integrating-factor RK4 stepper, and energy/residual monitors.
//
// Frame conventions, for a state (theta, gamma, sigma) on period P:
//   z_alpha = sigma e^{i theta}; curve closure mean(sigma e^{i theta}) = 1;
//   arclength derivative d/ds = sigma^{-1} d/dalpha; unit tangent e^{i theta}.
// All equations reduce to their sigma = 1 forms verbatim.

#include "capwave/singular.hpp"
#include "capwave/spectral.hpp"

#include <stdexcept>
#include <string>

namespace capwave {

struct Physics {
    double inv_we = 2.0;  // surface tension coefficient 1/We
    double g = 0.0;       // gravity; the nonlinear evolution requires g = 0
};

struct SurfaceState {
    RealField theta;
    RealField gamma;
    double sigma = 1.0;
    double time = 0.0;
    Physics phys;
};

struct StepperConfig {
    double dt = 1e-3;
    double filter_cutoff = 2.0 / 3.0;
    double filter_floor = 1e-13;
    double gamma_t_tol = 1e-12;
    int gamma_t_max_iter = 50;
    double q_min = 0.5;          // chord-arc abort threshold
    double kappa_sup_max = 0.25; // small-data envelope abort threshold
};

enum class AbortReason { ChordArc, GammaTNonconvergence, WindowViolation, NanAbort };
std::string abort_reason_name(AbortReason r);

// Thrown when the evolution leaves its validity envelope; carries the
// diagnostic value that tripped the abort.
struct SolverAbort : std::runtime_error {
    AbortReason reason;
    double time;
    double diagnostic;
    SolverAbort(AbortReason r, double t, double value, const std::string& what)
        : std::runtime_error(what), reason(r), time(t), diagnostic(value) {}
};

struct DerivedFields {
    ComplexField z;    // curve, z(alpha + P) = z(alpha) + P
    ComplexField w;    // Birkhoff-Rott velocity (x + i y)
    ComplexField w_t;  // time derivative of w at fixed alpha
    ComplexField m;    // smooth remainder vector of w_alpha
    ComplexField z_t;  // interface velocity U_perp n + U_par t
    RealField u_perp, u_par;
    RealField theta_t, gamma_t;
    RealField q;        // Lagrangian tangential velocity relative to the frame
    RealField u;        // q_s up to the sigma_t/sigma gauge constant
    RealField kappa;    // theta_alpha / sigma
    RealField p;        // normal pressure derivative composite
    RealField r_kappa, r_u, r_p;
    RealField phi;      // (d_t + (q/sigma) d_alpha) kappa
    RealField kappa_t, u_t;
    double sigma_t = 0.0;
    double closure_residual = 0.0;
    int gamma_t_iterations = 0;
};

// Curve with z_alpha = sigma e^{i theta} and zero mean height. Throws if the
// closure residual |integral of sigma e^{i theta} - P| exceeds 1e-6 P.
ComplexField reconstruct_curve(const RealField& theta, double sigma);

struct Kinematics {
    ComplexField z, w, z_t;
    RealField u_perp, u_par, theta_t;
    double sigma_t = 0.0;
    double closure_residual = 0.0;
};
Kinematics kinematic_fields(const SurfaceState& state);

RealField theta_rhs(const SurfaceState& state);

struct GammaTSolve {
    RealField gamma_t;
    int iterations = 0;
    double residual = 0.0;  // ||(1+2J)gamma_t - RHS|| / ||RHS||
};
GammaTSolve solve_gamma_t(const SurfaceState& state, double tol = 1e-12, int max_iter = 50);

// Everything at once; the single kernel assembly is shared across all fields.
DerivedFields derive(const SurfaceState& state, double gamma_t_tol = 1e-12,
                     int gamma_t_max_iter = 50);

struct MaterialFields {
    RealField q, u, kappa;
};
MaterialFields material_fields(const SurfaceState& state);

RealField pressure_field(const SurfaceState& state);

struct RemainderFields {
    RealField r_kappa, r_u, r_p;
};
RemainderFields remainder_fields(const SurfaceState& state);

struct Rhs {
    RealField theta_t, gamma_t;
    double sigma_t = 0.0;
    int gamma_t_iterations = 0;
};
Rhs rhs(const SurfaceState& state, double gamma_t_tol = 1e-12, int gamma_t_max_iter = 50);

// One integrating-factor RK4 step: the flat-state linear system
// d/dt (theta_k, gamma_k) = [[0, |k|/2], [-inv_We k^2, 0]] is integrated by its
// exact rotation; the nonlinear remainder is advanced classically; the filter
// runs once on the combined result. Envelope violations throw SolverAbort.
SurfaceState step(const SurfaceState& state, const StepperConfig& cfg);

// min over node pairs of |z_i - z_j| / (sigma (P/pi) |sin(pi (a_i - a_j)/P)|).
double chord_arc_ratio(const ComplexField& z, double sigma);

struct ResidualPair {
    RealField kappa;
    RealField u;
};
// Centered-difference residuals of the first-order curvature system at the
// middle of three equispaced states.
ResidualPair residual_kappa_u(const SurfaceState& prev, const SurfaceState& mid,
                              const SurfaceState& next);

// Residual of the second-order curvature equation
// (d_t + (q/sigma) d_alpha)^2 kappa = (tau/2) H kappa_sss + 2 kappa kappa_ss + R:
// returns R computed with centered differences of phi across three states.
RealField residual_second_order(const SurfaceState& prev, const SurfaceState& mid,
                                const SurfaceState& next);

struct EnergyResult {
    double value = 0.0;
    bool equivalence_regime = true;  // sup|kappa| < 1/4
};
EnergyResult energy_E0k(const SurfaceState& state, int k);
// Same, reusing already-derived fields (kappa, phi, u) for the state.
EnergyResult energy_E0k(const SurfaceState& state, int k, const DerivedFields& d);

// theta'(alpha) = theta(lambda alpha), gamma' = sqrt(lambda) gamma(lambda alpha),
// period/lambda, t/lambda^{3/2}; lambda a positive integer dividing n.
SurfaceState scaling_transform(const SurfaceState& state, int lambda);

// Initial data constructors. Each projects the raw profile so the closure
// integral is exact: theta -= arg(mean e^{i theta}), sigma = 1/|mean e^{i theta}|.
// single_mode is the traveling eigenmode of the flat-state linearization:
// theta = eps cos(k alpha) paired with gamma = gamma0 + (2 omega/k) eps sin(k alpha).
SurfaceState make_flat(const GridPtr& g, double gamma0, Physics phys = {});
SurfaceState make_single_mode(const GridPtr& g, double amplitude, int mode, double gamma0 = 0.0,
                              Physics phys = {});
SurfaceState make_gaussian_bump(const GridPtr& g, double amplitude, double width,
                                Physics phys = {});
SurfaceState project_closure(SurfaceState state);

}  // namespace capwave
