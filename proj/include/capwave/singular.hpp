#pragma once

// Singular and smoothing integral operators on periodic interfaces: periodized
// divided differences, the smooth-remainder Birkhoff-Rott decomposition,
// Hilbert commutators, and the auxiliary kernel operators that feed the
// evolution equations. Quadrature is the trapezoid rule on the grid nodes;
// removable-singularity kernels carry their analytic diagonal limit.

#include "capwave/spectral.hpp"

namespace capwave {

enum class DiagonalRule { LimitValue, Zero, Excluded };

// Dense n*n kernel tabulated at node pairs, row-major.
struct KernelMatrix {
    GridPtr grid;
    std::vector<cplx> a;
    DiagonalRule diagonal_rule = DiagonalRule::Zero;

    KernelMatrix() = default;
    KernelMatrix(GridPtr g, DiagonalRule rule)
        : grid(std::move(g)),
          a(static_cast<size_t>(grid->size()) * grid->size(), cplx{0.0, 0.0}),
          diagonal_rule(rule) {}

    cplx& at(int i, int j) { return a[static_cast<size_t>(i) * grid->size() + j]; }
    cplx at(int i, int j) const { return a[static_cast<size_t>(i) * grid->size() + j]; }
};

// Periodized point-vortex kernel (pi/P) cot(pi x / P), defined for complex x
// away from the real lattice x = 0 mod P.
cplx periodic_kernel(cplx x, double period);

// Q_a(i,j) = (a_i - a_j) / d(alpha_i, alpha_j) with the periodic tan-chord
// d = (P/pi) tan(pi (alpha_i - alpha_j)/P); diagonal a'(alpha_i) (the beta->alpha
// limit). |Q_a| <= sup|a'| holds exactly since |tan x| >= |x|.
KernelMatrix divided_difference(const RealField& a);
KernelMatrix divided_difference(const ComplexField& a);

// Kernel of the smooth remainder of the Birkhoff-Rott integral:
// K(z_i - z_j) - K(alpha_i - alpha_j)/z'(beta_j) off-diagonal,
// diagonal -z''/(2 z'^2). K is periodic_kernel. Throws on coincident points.
KernelMatrix remainder_kernel(const ComplexField& z);

// (h / 2 pi i) sum_j M(i,j) f_j: trapezoid quadrature of a removable-diagonal
// kernel against f. With M = remainder_kernel(z) this is the operator whose
// sum with (1/2i)H(f/z_alpha) gives the conjugate Birkhoff-Rott velocity.
ComplexField apply_W(const KernelMatrix& m, const RealField& f);
ComplexField apply_W(const KernelMatrix& m, const ComplexField& f);
ComplexField apply_W(const ComplexField& z, const RealField& f);
ComplexField apply_W(const ComplexField& z, const ComplexField& f);

// Birkhoff-Rott velocity as x + i y (already conjugated):
// W = conj( (1/2i) H(gamma/z_alpha) + W_op gamma ). Requires |z_alpha| = sigma
// uniformly to 1e-8 relative.
ComplexField birkhoff_rott(const ComplexField& z, const RealField& gamma, double sigma);

// Alternating-point trapezoid evaluation of the principal-value integral
// itself; O(n^2), spectrally accurate for analytic curves. Test oracle.
ComplexField pv_oracle(const ComplexField& z, const RealField& gamma);

// Commutator [H, a] applied to g = f_alpha: spectral route H(a g) - a H(g);
// kernel route -(1/pi) * trapezoid of Q_a(i,j) g_j (removable diagonal, no PV).
RealField commutator_hilbert(const RealField& a, const RealField& f, bool kernel_quadrature = false);
ComplexField commutator_hilbert(const ComplexField& a, const ComplexField& f,
                                bool kernel_quadrature = false);

// Kernel-variation operator from differentiating the remainder in time:
// (h / 2 pi i) sum_j K(z_i - z_j)(zt_i - zt_j) g_j with g = d/dbeta (f / z_beta),
// removable diagonal zt'/z'. z_t is the (periodic) interface velocity.
ComplexField apply_B(const ComplexField& z, const ComplexField& z_t, const RealField& f);
ComplexField apply_B(const ComplexField& z, const ComplexField& z_t, const ComplexField& f);

// J f = Re( z_alpha * [ (1/2i) H(f / z_alpha) + W_op f ] ): tangential part of
// the conjugate Birkhoff-Rott operator on a real density. For real f this
// equals Re(z_alpha W_op f + (z_alpha/2i)[H, 1/z_alpha]f). I + 2J is the
// fixed-point operator of the gamma_t solve; J vanishes on the flat curve.
RealField apply_J(const ComplexField& z, const RealField& f);

// Smooth vector remainder of the differentiated Birkhoff-Rott velocity:
// conj of z_a W_op(psi / z_a) + (z_a/2i)[H, 1/z_a^2] psi with
// psi = gamma' - gamma z''/z'. Returned as a velocity-like vector (x + i y).
ComplexField m_field(const ComplexField& z, const RealField& gamma);

// Integral of a * f_alpha * Lambda f; bounded by C ||a''||_inf ||f||^2.
double smoothing_form(const RealField& a, const RealField& f);

// Shared per-stage kernels for the evolution right-hand side: one complex-cot
// assembly serves every W- and B-application of a Runge-Kutta stage.
struct StageKernels {
    KernelMatrix w;    // remainder kernel incl. diagonal
    KernelMatrix kpz;  // K(z_i - z_j), zero diagonal
    ComplexField z_a, z_aa;
};
StageKernels assemble_stage_kernels(const ComplexField& z);
ComplexField apply_B_with(const StageKernels& sk, const ComplexField& z_t, const ComplexField& f);

}  // namespace capwave
