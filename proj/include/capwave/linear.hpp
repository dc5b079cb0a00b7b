#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "capwave/spectral.hpp"

namespace capwave {

// Exact linear theory on the periodic box: per-mode propagation of
//   kappa_tt = -omega(k)^2 kappa,   omega(k)^2 = inv_we |k|^3 / 2 + g |k|,
// the scaling vector fields Gamma_2 (capillary) and Gamma_g (gravity), their
// energies, and the weighted gain-of-regularity norms. Everything here is
// modal-exact in time; no stepping.

double omega(double k, double inv_we, double g);

// Localization window for alpha-weighted diagnostics: the mask equals 1 for
// |alpha| <= radius, falls smoothly to 0 across [radius, radius + taper], and
// vanishes beyond. radius + taper must stay below period/2.
struct WindowSpec {
    double radius = 10.0;
    double taper = 4.0;
};

struct WindowError : std::runtime_error {
    double mass;
    WindowError(const std::string& what, double mass_) : std::runtime_error(what), mass(mass_) {}
};

struct LinearSolution {
    GridPtr grid;
    std::vector<cplx> kappa0_hat, kappa1_hat;  // half-spectra of kappa, kappa_t at t=0
    double inv_we = 2.0;
    double g = 0.0;
    WindowSpec window;
};

LinearSolution make_linear_solution(const RealField& kappa0, const RealField& kappa1,
                                    double inv_we, double g, WindowSpec window = {});

struct LinearFields {
    RealField kappa, kappa_t, kappa_tt;
    double time = 0.0;
};

// Exact modal evaluation at time t; mode 0 drifts linearly (omega(0) = 0).
LinearFields propagate(const LinearSolution& sol, double t);

// Multiplies each mode of f by omega(k)^2; kappa_ttt = -apply_dispersion(kappa_t).
RealField apply_dispersion(const LinearSolution& sol, const RealField& f);

// C_c^infty mask realizing the window on the grid.
RealField window_mask(const GridPtr& grid, const WindowSpec& window);

// Fraction of the L2 mass of f lying strictly outside |alpha| <= radius+taper.
double mass_outside_window(const RealField& f, const WindowSpec& window);

// Fraction of the L2 mass of f within distance radius+taper of the box seam.
double boundary_mass(const RealField& f, const WindowSpec& window);

// Largest t at which ballistic transport predicts the outside-collar mass
// fraction sum{|c_k|^2 : v_g(k) t >= collar} / sum|c_k|^2 still below 1e-13,
// collar = period/2 - radius - taper. Group speeds, not the fastest mode: for
// gravity v_g = g/(2 sqrt k) diverges as k -> 0 and the fastest mode is the
// least energetic one.
double max_reliable_time(const LinearSolution& sol, const WindowSpec& window);

// Gamma_2 kappa = (t/2) kappa_t + (alpha/3) kappa_alpha at time t, alpha the
// centered box coordinate. Requires the wave clear of the seam (localized-data
// mode); throws WindowError once boundary mass exceeds 1e-10 of the total.
RealField gamma2_apply(const LinearSolution& sol, double t);

// || Lambda^{1/2} d_alpha kappa ||^2 + || kappa_t ||^2 at time t; conserved by
// the capillary evolution at inv_we = 2, g = 0.
double energy_linear(const LinearSolution& sol, double t);

// || Lambda^{1/2} d_alpha Gamma_2 kappa ||^2 + || d_t Gamma_2 kappa ||^2, with
// d_t Gamma_2 kappa = Gamma_2 kappa_t + (1/2) kappa_t.
double energy_gamma2(const LinearSolution& sol, double t);

// Gravity counterpart with Gamma_g = (t/2) d_t + alpha d_alpha:
// || Lambda^{1/2} Gamma_g kappa ||^2 + || d_t Gamma_g kappa ||^2.
double energy_gamma_g(const LinearSolution& sol, double t);

// t^k || <alpha>^{-k} Lambda^{k/2+1/2} d_alpha^{k+3} kappa(t) ||_{L2} with
// <alpha> = (1 + alpha^2)^{1/2}; the Lambda power acts spectrally before the
// pointwise weight. k >= 1. Localized-data mode: seam mass <= 1e-6 (algebraic
// dispersion tails of zero-speed-limit evolutions stay tolerable; they enter
// the weighted norm at ~1e-9 relative).
double weighted_gain_norm(const LinearSolution& sol, double t, int k);

// integral <alpha>^{-2 rho + 1} (d^K kappa H d^K kappa_t - d^K kappa_t H d^K kappa) dalpha.
// Localized-data mode, same 1e-6 seam guard as weighted_gain_norm.
double smoothing_commutator(const LinearSolution& sol, double t, int K, double rho);

// amplitude * sin(carrier alpha) * exp(-alpha^2/(2 width^2)) summed over box
// images; carrier = 0 gives the plain even Gaussian. Odd packets (carrier > 0)
// have exactly zero mean, which kills the algebraic far-field tails that the
// |k|-corner of the gravity dispersion relation attaches to any nonzero-mean
// data.
RealField gaussian_packet(const GridPtr& grid, double amplitude, double width,
                          double carrier = 0.0);

// Rough localized data: a smooth odd carrier packet sin(1.8 alpha) e^{-alpha^2/18}
// plus a random-phase tail with modal amplitude
// (1+k^2)^{-(2s+1)/4} (1 - e^{-(k/3)^4}), both under a Gaussian envelope of
// width 3. Phases depend on the mode index only, so refining the grid extends
// the spectrum without changing resolved modes. Lies in H^{s'} exactly for
// s' < s (the carrier is smooth and does not move the class); the quartic
// low-k cut empties the spectrum near k = 0, where diagnostic multipliers
// vanish anyway but dispersion corners would otherwise shed algebraic tails
// across the box.
RealField rough_tail_data(const GridPtr& grid, double s, unsigned seed,
                          const WindowSpec& window);

}  // namespace capwave
