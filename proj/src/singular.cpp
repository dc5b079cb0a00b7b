#include "capwave/singular.hpp"

#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace capwave {

cplx periodic_kernel(cplx x, double period) {
    const double c = pi / period;
    const cplx w = c * x;
    // cot(u+iv) = (sin u cos u - i sinh v cosh v) / (sin^2 u + sinh^2 v),
    // written so the denominator never suffers the 1 - cos cancellation
    // that loses half the significant digits near the lattice.
    const double su = std::sin(w.real()), cu = std::cos(w.real());
    const double sv = std::sinh(w.imag()), cv = std::cosh(w.imag());
    const double denom = su * su + sv * sv;
    if (denom == 0.0) throw std::domain_error("periodic_kernel: singular argument");
    return c * cplx(su * cu, -sv * cv) / denom;
}

namespace {

template <class Field>
KernelMatrix divided_difference_impl(const Field& a) {
    const auto& g = *a.grid;
    const int n = g.size();
    KernelMatrix q(a.grid, DiagonalRule::LimitValue);
    const auto& kpa = g.cot_matrix();
    const Field da = derivative(a, 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j)
                q.at(i, j) = da.v[i];
            else
                q.at(i, j) = (a.v[i] - a.v[j]) * kpa[static_cast<size_t>(i) * n + j];
        }
    }
    return q;
}

}  // namespace

KernelMatrix divided_difference(const RealField& a) { return divided_difference_impl(a); }
KernelMatrix divided_difference(const ComplexField& a) { return divided_difference_impl(a); }

StageKernels assemble_stage_kernels(const ComplexField& z) {
    const auto& g = *z.grid;
    const int n = g.size();
    StageKernels sk;
    sk.z_a = curve_derivative(z, 1);
    sk.z_aa = curve_derivative(z, 2);
    sk.kpz = KernelMatrix(z.grid, DiagonalRule::Zero);
    const double period = g.period();
    // K(z_i - z_j) is odd in its argument: fill the upper triangle only.
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const cplx v = periodic_kernel(z.v[i] - z.v[j], period);
            sk.kpz.at(i, j) = v;
            sk.kpz.at(j, i) = -v;
        }
    }
    sk.w = KernelMatrix(z.grid, DiagonalRule::LimitValue);
    const auto& kpa = g.cot_matrix();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j)
                sk.w.at(i, i) = -sk.z_aa.v[i] / (2.0 * sk.z_a.v[i] * sk.z_a.v[i]);
            else
                sk.w.at(i, j) =
                    sk.kpz.at(i, j) - kpa[static_cast<size_t>(i) * n + j] / sk.z_a.v[j];
        }
    }
    return sk;
}

KernelMatrix remainder_kernel(const ComplexField& z) { return assemble_stage_kernels(z).w; }

namespace {

template <class Field>
ComplexField apply_W_impl(const KernelMatrix& m, const Field& f) {
    if (m.grid.get() != f.grid.get()) throw std::invalid_argument("apply_W: grid mismatch");
    const auto& g = *m.grid;
    const int n = g.size();
    const cplx scale = g.spacing() / cplx(0.0, two_pi);
    ComplexField out(f.grid);
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        const cplx* row = m.a.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) acc += row[j] * f.v[j];
        out.v[i] = scale * acc;
    }
    return out;
}

}  // namespace

ComplexField apply_W(const KernelMatrix& m, const RealField& f) { return apply_W_impl(m, f); }
ComplexField apply_W(const KernelMatrix& m, const ComplexField& f) { return apply_W_impl(m, f); }
ComplexField apply_W(const ComplexField& z, const RealField& f) {
    return apply_W_impl(remainder_kernel(z), f);
}
ComplexField apply_W(const ComplexField& z, const ComplexField& f) {
    return apply_W_impl(remainder_kernel(z), f);
}

namespace {

ComplexField conj_br_from(const StageKernels& sk, const RealField& gamma) {
    ComplexField ratio(gamma.grid);
    for (int j = 0; j < gamma.size(); ++j) ratio.v[j] = gamma.v[j] / sk.z_a.v[j];
    const cplx half_over_i(0.0, -0.5);  // 1/(2i)
    return half_over_i * hilbert(ratio) + apply_W(sk.w, gamma);
}

}  // namespace

ComplexField birkhoff_rott(const ComplexField& z, const RealField& gamma, double sigma) {
    auto sk = assemble_stage_kernels(z);
    for (int j = 0; j < z.size(); ++j)
        if (std::abs(std::abs(sk.z_a.v[j]) - sigma) > 1e-8 * sigma)
            throw std::domain_error("birkhoff_rott: |z_alpha| is not uniformly sigma");
    return conj_field(conj_br_from(sk, gamma));
}

ComplexField pv_oracle(const ComplexField& z, const RealField& gamma) {
    const auto& g = *z.grid;
    const int n = g.size();
    const double period = g.period();
    // Alternating-point trapezoid: sum over nodes of opposite parity, weight 2h.
    const cplx scale = 2.0 * g.spacing() / cplx(0.0, two_pi);
    ComplexField wbar(z.grid);
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        for (int j = (i + 1) % 2; j < n; j += 2)
            acc += gamma.v[j] * periodic_kernel(z.v[i] - z.v[j], period);
        wbar.v[i] = scale * acc;
    }
    return conj_field(wbar);
}

namespace {

template <class Field>
Field commutator_impl(const Field& a, const Field& f, bool kernel_quadrature) {
    const Field df = derivative(f, 1);
    if (!kernel_quadrature) {
        return hilbert(a * df) - a * hilbert(df);
    }
    const auto q = divided_difference(a);
    const auto& g = *a.grid;
    const int n = g.size();
    const double scale = -g.spacing() / pi;
    Field out(a.grid);
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        const cplx* row = q.a.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) acc += row[j] * df.v[j];
        if constexpr (std::is_same_v<Field, RealField>)
            out.v[i] = scale * acc.real();
        else
            out.v[i] = scale * acc;
    }
    return out;
}

}  // namespace

RealField commutator_hilbert(const RealField& a, const RealField& f, bool kernel_quadrature) {
    return commutator_impl(a, f, kernel_quadrature);
}
ComplexField commutator_hilbert(const ComplexField& a, const ComplexField& f,
                                bool kernel_quadrature) {
    return commutator_impl(a, f, kernel_quadrature);
}

ComplexField apply_B_with(const StageKernels& sk, const ComplexField& z_t, const ComplexField& f) {
    const auto& g = *sk.kpz.grid;
    const int n = g.size();
    // g_j = d/dbeta (f / z_beta); kernel K(dz) dz_t needs only two matvecs with K(dz).
    ComplexField ratio(f.grid);
    for (int j = 0; j < n; ++j) ratio.v[j] = f.v[j] / sk.z_a.v[j];
    const ComplexField gb = derivative(ratio, 1);
    const ComplexField z_at = derivative(z_t, 1);
    const cplx scale = g.spacing() / cplx(0.0, two_pi);
    ComplexField out(f.grid);
    for (int i = 0; i < n; ++i) {
        cplx s1 = 0.0, s2 = 0.0;
        const cplx* row = sk.kpz.a.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            s1 += row[j] * gb.v[j];
            s2 += row[j] * (z_t.v[j] * gb.v[j]);
        }
        const cplx diag = z_at.v[i] / sk.z_a.v[i] * gb.v[i];
        out.v[i] = scale * (z_t.v[i] * s1 - s2 + diag);
    }
    return out;
}

ComplexField apply_B(const ComplexField& z, const ComplexField& z_t, const RealField& f) {
    return apply_B(z, z_t, to_complex(f));
}

ComplexField apply_B(const ComplexField& z, const ComplexField& z_t, const ComplexField& f) {
    return apply_B_with(assemble_stage_kernels(z), z_t, f);
}

RealField apply_J(const ComplexField& z, const RealField& f) {
    auto sk = assemble_stage_kernels(z);
    ComplexField ratio(f.grid);
    for (int j = 0; j < f.size(); ++j) ratio.v[j] = f.v[j] / sk.z_a.v[j];
    const cplx half_over_i(0.0, -0.5);
    const ComplexField t1 = half_over_i * hilbert(ratio) + apply_W(sk.w, f);
    return real_part(sk.z_a * t1);
}

ComplexField m_field(const ComplexField& z, const RealField& gamma) {
    auto sk = assemble_stage_kernels(z);
    const int n = z.size();
    const RealField dgamma = derivative(gamma, 1);
    ComplexField psi(z.grid), psi_over_za(z.grid), za_inv2(z.grid);
    for (int j = 0; j < n; ++j) {
        const cplx za = sk.z_a.v[j];
        psi.v[j] = dgamma.v[j] - gamma.v[j] * sk.z_aa.v[j] / za;
        psi_over_za.v[j] = psi.v[j] / za;
        za_inv2.v[j] = 1.0 / (za * za);
    }
    const ComplexField comm = hilbert(za_inv2 * psi) - za_inv2 * hilbert(psi);
    const cplx half_over_i(0.0, -0.5);
    const ComplexField mbar = sk.z_a * apply_W(sk.w, psi_over_za) + half_over_i * (sk.z_a * comm);
    return conj_field(mbar);
}

namespace {
// Same field on a grid of twice the resolution (trigonometric interpolation).
RealField on_doubled_grid(const GridPtr& g2, const RealField& f) {
    std::vector<cplx> half = spectrum(f);
    half.back() *= 0.5;  // the old Nyquist slot becomes an interior mode
    half.resize(static_cast<size_t>(g2->size()) / 2 + 1, cplx{0.0, 0.0});
    return field_from_spectrum(g2, half);
}
}  // namespace

double smoothing_form(const RealField& a, const RealField& f) {
    const RealField df = derivative(f, 1);
    const RealField lf = lambda_pow(f, 1.0);
    // The integrand is a trig polynomial of degree < 3n/2, so the n-point
    // trapezoid aliases the near-Nyquist products. On a doubled grid the
    // rule is exact for any grid data.
    const GridPtr g2 = make_grid(2 * a.size(), a.grid->period());
    const RealField a2 = on_doubled_grid(g2, a);
    const RealField df2 = on_doubled_grid(g2, df);
    const RealField lf2 = on_doubled_grid(g2, lf);
    double acc = 0.0;
    for (int j = 0; j < g2->size(); ++j) acc += a2.v[j] * df2.v[j] * lf2.v[j];
    return acc * g2->spacing();
}

}  // namespace capwave
