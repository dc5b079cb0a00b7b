#include "capwave/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace capwave {

std::string abort_reason_name(AbortReason r) {
    switch (r) {
        case AbortReason::ChordArc: return "chord-arc-abort";
        case AbortReason::GammaTNonconvergence: return "gamma-t-nonconvergence";
        case AbortReason::WindowViolation: return "window-violation";
        case AbortReason::NanAbort: return "nan-abort";
    }
    return "unknown";
}

ComplexField reconstruct_curve(const RealField& theta, double sigma) {
    const auto& g = *theta.grid;
    ComplexField za(theta.grid);
    for (int j = 0; j < g.size(); ++j)
        za.v[j] = sigma * std::exp(cplx(0.0, theta.v[j]));
    // Integrate in spectral space with the mean slot zeroed directly: the
    // periodic part can be orders of magnitude smaller than z_alpha, so
    // subtracting a separately summed mean leaves a relative residue the
    // zero-mean precondition of antiderivative() would reject.
    auto c = g.to_spectrum_c(za.v);
    const double closure_residual = std::abs(c[0] - 1.0) * g.period();
    if (closure_residual > 1e-6 * g.period())
        throw std::domain_error("reconstruct_curve: closure residual " +
                                std::to_string(closure_residual) + " exceeds tolerance");
    c[0] = 0.0;
    for (int m = 1; m < g.size(); ++m) {
        if (m == g.nyquist_index()) {
            c[m] = 0.0;
            continue;
        }
        c[m] /= cplx(0.0, g.wavenumber_signed(m));
    }
    const auto zp = g.to_values_c(c);
    ComplexField z(theta.grid);
    for (int j = 0; j < g.size(); ++j) z.v[j] = g.node(j) + zp[j];
    return z;
}

namespace {

// Kernel evaluation loses meaning on a nearly self-touching curve; this is a
// hard precondition, distinct from the configurable Q_min abort after a step.
constexpr double kChordArcFloor = 0.05;

struct ChordArcDegeneracy : std::domain_error {
    double ratio;
    explicit ChordArcDegeneracy(double r)
        : std::domain_error("chord-arc ratio " + std::to_string(r) +
                            " below the kernel evaluation floor " +
                            std::to_string(kChordArcFloor)),
          ratio(r) {}
};

// Shared per-state computation. Every heavier public operation drives this
// pipeline to the depth it needs; the kernel assembly happens exactly once.
struct Pipeline {
    GridPtr grid;
    double sigma, tau, inv_sigma;
    RealField theta, gamma, theta_a, gamma_a;
    ComplexField z;
    StageKernels sk;
    ComplexField tangent;  // e^{i theta}
    ComplexField wbar;     // conjugate Birkhoff-Rott
    RealField u_perp, u_par, w_tan;  // w_tan = W . tangent
    RealField theta_t;
    double sigma_t = 0.0;
    double closure_residual = 0.0;
    ComplexField z_t;
    ComplexField mu;  // sigma_t/sigma + i theta_t
    ComplexField b_gamma;
    RealField rhs_gamma;
    RealField gamma_t;
    int gamma_t_iterations = 0;
    double gamma_t_residual = 0.0;

    explicit Pipeline(const SurfaceState& s)
        : grid(s.theta.grid),
          sigma(s.sigma),
          tau(s.phys.inv_we),
          inv_sigma(1.0 / s.sigma),
          theta(s.theta),
          gamma(s.gamma) {
        if (s.phys.g != 0.0)
            throw std::invalid_argument("nonlinear evolution supports g = 0 only");
        if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
        for (double x : theta.v)
            if (!std::isfinite(x)) throw std::domain_error("theta not finite");
        for (double x : gamma.v)
            if (!std::isfinite(x)) throw std::domain_error("gamma not finite");

        theta_a = derivative(theta, 1);
        gamma_a = derivative(gamma, 1);
        // theta and sigma fix the curve only modulo a rigid rotation and a
        // dilation; the closure mean selects both. Projecting here extends
        // the vector field smoothly to the slightly off-closure stage states
        // of the integrator without changing on-manifold solutions.
        {
            ComplexField e(grid);
            for (int j = 0; j < grid->size(); ++j) e.v[j] = std::exp(cplx(0.0, theta.v[j]));
            const cplx m = sigma * mean_value(e);
            closure_residual = std::abs(m - 1.0) * grid->period();
            if (closure_residual > 1e-6 * grid->period())
                throw std::domain_error("closure residual " + std::to_string(closure_residual) +
                                        " exceeds tolerance");
            const double phase = std::arg(m);
            for (auto& t : theta.v) t -= phase;
            sigma /= std::abs(m);
            inv_sigma = 1.0 / sigma;
        }
        z = reconstruct_curve(theta, sigma);
        const double q = chord_arc_ratio(z, sigma);
        if (q < kChordArcFloor) throw ChordArcDegeneracy(q);
        sk = assemble_stage_kernels(z);
        for (int j = 0; j < grid->size(); ++j)
            if (std::abs(std::abs(sk.z_a.v[j]) - sigma) > 1e-8 * sigma)
                throw std::domain_error("|z_alpha| deviates from sigma beyond 1e-8");
        tangent = ComplexField(grid);
        for (int j = 0; j < grid->size(); ++j) tangent.v[j] = std::exp(cplx(0.0, theta.v[j]));
    }

    ComplexField conj_br(const ComplexField& f) const {
        ComplexField ratio(grid);
        for (int j = 0; j < grid->size(); ++j) ratio.v[j] = f.v[j] / sk.z_a.v[j];
        return cplx(0.0, -0.5) * hilbert(ratio) + apply_W(sk.w, f);
    }

    // Tangential part of the conjugate Birkhoff-Rott operator; equals apply_J
    // for real densities.
    RealField tangential_br(const ComplexField& f) const { return real_part(sk.z_a * conj_br(f)); }
    RealField tangential_br(const RealField& f) const { return tangential_br(to_complex(f)); }

    void run_kinematics() {
        wbar = conj_br(to_complex(gamma));
        u_perp = RealField(grid);
        w_tan = RealField(grid);
        for (int j = 0; j < grid->size(); ++j) {
            const cplx wt = wbar.v[j] * tangent.v[j];
            w_tan.v[j] = wt.real();
            u_perp.v[j] = (wbar.v[j] * cplx(0.0, 1.0) * tangent.v[j]).real();
        }
        const RealField tu = theta_a * u_perp;
        const double tu_mean = mean_value(tu);
        sigma_t = -tu_mean;
        RealField tu0(grid);
        for (int j = 0; j < grid->size(); ++j) tu0.v[j] = tu.v[j] - tu_mean;
        u_par = antiderivative(tu0);
        theta_t = inv_sigma * (derivative(u_perp, 1) + u_par * theta_a);
        z_t = ComplexField(grid);
        mu = ComplexField(grid);
        for (int j = 0; j < grid->size(); ++j) {
            z_t.v[j] = cplx(u_par.v[j], u_perp.v[j]) * tangent.v[j];
            mu.v[j] = cplx(sigma_t * inv_sigma, theta_t.v[j]);
        }
    }

    void run_gamma_t(double tol, int max_iter, double time_for_abort) {
        b_gamma = apply_B_with(sk, z_t, to_complex(gamma));
        const ComplexField wbar_a = derivative(wbar, 1);
        RealField wa_tan(grid);
        for (int j = 0; j < grid->size(); ++j)
            wa_tan.v[j] = (wbar_a.v[j] * tangent.v[j]).real();
        RealField slip(grid);  // U_par - W . tangent
        for (int j = 0; j < grid->size(); ++j) slip.v[j] = u_par.v[j] - w_tan.v[j];
        ComplexField gamma_mu(grid);
        for (int j = 0; j < grid->size(); ++j) gamma_mu.v[j] = gamma.v[j] * mu.v[j];

        rhs_gamma = RealField(grid);
        const RealField t1 = derivative(theta, 2);
        const RealField t2 = derivative(slip * gamma, 1);
        const RealField t5 = tangential_br(gamma_mu);
        const RealField t6 = real_part(sk.z_a * b_gamma);
        for (int j = 0; j < grid->size(); ++j) {
            rhs_gamma.v[j] = tau * inv_sigma * t1.v[j] + inv_sigma * t2.v[j] -
                             0.5 * inv_sigma * inv_sigma * gamma.v[j] * gamma_a.v[j] +
                             2.0 * slip.v[j] * wa_tan.v[j] + 2.0 * t5.v[j] - 2.0 * t6.v[j];
        }

        const double rhs_norm = std::max(l2_norm(rhs_gamma), 1e-300);
        RealField x = rhs_gamma;
        gamma_t_iterations = 0;
        double delta = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            const RealField corr = tangential_br(x);
            RealField xn(grid);
            for (int j = 0; j < grid->size(); ++j)
                xn.v[j] = rhs_gamma.v[j] - 2.0 * corr.v[j];
            delta = l2_norm(xn - x);
            x = xn;
            ++gamma_t_iterations;
            if (delta <= tol * rhs_norm) {
                gamma_t = x;
                gamma_t_residual = delta / rhs_norm;
                return;
            }
        }
        throw SolverAbort(AbortReason::GammaTNonconvergence, time_for_abort, delta / rhs_norm,
                          "gamma_t fixed point did not converge");
    }
};

bool any_nan(const RealField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return true;
    return false;
}

}  // namespace

Kinematics kinematic_fields(const SurfaceState& state) {
    Pipeline p(state);
    p.run_kinematics();
    Kinematics k;
    k.z = p.z;
    k.w = conj_field(p.wbar);
    k.z_t = p.z_t;
    k.u_perp = p.u_perp;
    k.u_par = p.u_par;
    k.theta_t = p.theta_t;
    k.sigma_t = p.sigma_t;
    k.closure_residual = p.closure_residual;
    return k;
}

RealField theta_rhs(const SurfaceState& state) {
    Pipeline p(state);
    p.run_kinematics();
    return p.theta_t;
}

GammaTSolve solve_gamma_t(const SurfaceState& state, double tol, int max_iter) {
    Pipeline p(state);
    p.run_kinematics();
    p.run_gamma_t(tol, max_iter, state.time);
    GammaTSolve out;
    out.gamma_t = p.gamma_t;
    out.iterations = p.gamma_t_iterations;
    out.residual = p.gamma_t_residual;
    return out;
}

Rhs rhs(const SurfaceState& state, double gamma_t_tol, int gamma_t_max_iter) {
    Pipeline p(state);
    p.run_kinematics();
    p.run_gamma_t(gamma_t_tol, gamma_t_max_iter, state.time);
    Rhs r;
    r.theta_t = p.theta_t;
    r.gamma_t = p.gamma_t;
    r.sigma_t = p.sigma_t;
    r.gamma_t_iterations = p.gamma_t_iterations;
    return r;
}

DerivedFields derive(const SurfaceState& state, double gamma_t_tol, int gamma_t_max_iter) {
    Pipeline p(state);
    p.run_kinematics();
    p.run_gamma_t(gamma_t_tol, gamma_t_max_iter, state.time);
    const auto& g = *p.grid;
    const int n = g.size();
    const double isg = p.inv_sigma, tau = p.tau;

    DerivedFields d;
    d.z = p.z;
    d.w = conj_field(p.wbar);
    d.z_t = p.z_t;
    d.u_perp = p.u_perp;
    d.u_par = p.u_par;
    d.theta_t = p.theta_t;
    d.gamma_t = p.gamma_t;
    d.sigma_t = p.sigma_t;
    d.closure_residual = p.closure_residual;
    d.gamma_t_iterations = p.gamma_t_iterations;

    // Smooth remainder vector of the differentiated velocity.
    ComplexField psi(p.grid), psi_over_za(p.grid), za_inv2(p.grid);
    for (int j = 0; j < n; ++j) {
        const cplx za = p.sk.z_a.v[j];
        psi.v[j] = p.gamma_a.v[j] - p.gamma.v[j] * p.sk.z_aa.v[j] / za;
        psi_over_za.v[j] = psi.v[j] / za;
        za_inv2.v[j] = 1.0 / (za * za);
    }
    const ComplexField comm = hilbert(za_inv2 * psi) - za_inv2 * hilbert(psi);
    const ComplexField mbar =
        p.sk.z_a * apply_W(p.sk.w, psi_over_za) + cplx(0.0, -0.5) * (p.sk.z_a * comm);
    d.m = conj_field(mbar);
    RealField m_tan(p.grid), m_nor(p.grid);
    for (int j = 0; j < n; ++j) {
        m_tan.v[j] = (mbar.v[j] * p.tangent.v[j]).real();
        m_nor.v[j] = (mbar.v[j] * cplx(0.0, 1.0) * p.tangent.v[j]).real();
    }

    d.kappa = isg * p.theta_a;
    d.q = RealField(p.grid);
    for (int j = 0; j < n; ++j)
        d.q.v[j] = 0.5 * isg * p.gamma.v[j] - p.u_par.v[j] + p.w_tan.v[j];

    // u through the smooth-remainder identity for W_alpha . tangent.
    const RealField h_gth = hilbert(p.gamma * p.theta_a);
    RealField wa_tan_smooth(p.grid);
    for (int j = 0; j < n; ++j)
        wa_tan_smooth.v[j] = -0.5 * isg * h_gth.v[j] + m_tan.v[j];
    d.u = RealField(p.grid);
    for (int j = 0; j < n; ++j)
        d.u.v[j] = isg * (0.5 * isg * p.gamma_a.v[j] + wa_tan_smooth.v[j]);

    d.r_kappa = RealField(p.grid);
    const RealField h_mtan = hilbert(m_tan);
    for (int j = 0; j < n; ++j) d.r_kappa.v[j] = isg * (m_nor.v[j] - h_mtan.v[j]);

    const RealField hu = hilbert(d.u);
    d.r_u = RealField(p.grid);
    for (int j = 0; j < n; ++j) {
        const double a = hu.v[j] + d.r_kappa.v[j];
        d.r_u.v[j] = -d.u.v[j] * d.u.v[j] + a * a;
    }

    // Velocity time derivative at fixed alpha.
    ComplexField gdot(p.grid);
    for (int j = 0; j < n; ++j) gdot.v[j] = p.gamma_t.v[j] - p.gamma.v[j] * p.mu.v[j];
    const ComplexField wbar_t = p.conj_br(gdot) + p.b_gamma;
    d.w_t = conj_field(wbar_t);

    const RealField h_ga = hilbert(p.gamma_a);
    d.p = RealField(p.grid);
    for (int j = 0; j < n; ++j) {
        const double wt_nor = (wbar_t.v[j] * cplx(0.0, 1.0) * p.tangent.v[j]).real();
        d.p.v[j] = wt_nor + d.q.v[j] * (0.5 * isg * isg * h_ga.v[j] + isg * m_nor.v[j]) +
                   0.5 * isg * p.gamma.v[j] * (hu.v[j] + d.r_kappa.v[j]);
    }

    const RealField hkaa = hilbert(derivative(d.kappa, 2));
    d.r_p = isg * derivative(d.p, 1) - (0.5 * tau * isg * isg) * hkaa;

    d.kappa_t = RealField(p.grid);
    const RealField theta_ta = derivative(p.theta_t, 1);
    for (int j = 0; j < n; ++j)
        d.kappa_t.v[j] = isg * theta_ta.v[j] - p.theta_a.v[j] * p.sigma_t * isg * isg;
    const RealField kappa_a = derivative(d.kappa, 1);
    d.phi = RealField(p.grid);
    for (int j = 0; j < n; ++j)
        d.phi.v[j] = d.kappa_t.v[j] + d.q.v[j] * isg * kappa_a.v[j];

    const RealField kappa_aa = derivative(d.kappa, 2);
    const RealField u_a = derivative(d.u, 1);
    d.u_t = RealField(p.grid);
    for (int j = 0; j < n; ++j)
        d.u_t.v[j] = 0.5 * tau * isg * isg * kappa_aa.v[j] - d.p.v[j] * d.kappa.v[j] +
                     d.r_u.v[j] - d.q.v[j] * isg * u_a.v[j];

    return d;
}

MaterialFields material_fields(const SurfaceState& state) {
    DerivedFields d = derive(state);
    return {d.q, d.u, d.kappa};
}

RealField pressure_field(const SurfaceState& state) { return derive(state).p; }

RemainderFields remainder_fields(const SurfaceState& state) {
    DerivedFields d = derive(state);
    return {d.r_kappa, d.r_u, d.r_p};
}

double chord_arc_ratio(const ComplexField& z, double sigma) {
    const auto& g = *z.grid;
    const int n = g.size();
    std::vector<double> denom(n, 0.0);
    for (int d = 1; d < n; ++d)
        denom[d] = sigma * (g.period() / pi) * std::abs(std::sin(pi * d / static_cast<double>(n)));
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double r = std::abs(z.v[i] - z.v[j]) / denom[j - i];
            best = std::min(best, r);
        }
    return best;
}

namespace {

struct SpecState {
    std::vector<cplx> th, ga;
    double sigma;
};

SpecState operator+(const SpecState& a, const SpecState& b) {
    SpecState out = a;
    for (size_t m = 0; m < out.th.size(); ++m) {
        out.th[m] += b.th[m];
        out.ga[m] += b.ga[m];
    }
    out.sigma += b.sigma;
    return out;
}

SpecState scaled(double s, const SpecState& a) {
    SpecState out = a;
    for (size_t m = 0; m < out.th.size(); ++m) {
        out.th[m] *= s;
        out.ga[m] *= s;
    }
    out.sigma *= s;
    return out;
}

}  // namespace

SurfaceState step(const SurfaceState& state, const StepperConfig& cfg) {
    const GridPtr grid = state.theta.grid;
    const auto& g = *grid;
    const int ny = g.nyquist_index();
    const double tau = state.phys.inv_we;
    const double dt = cfg.dt;

    auto pack = [&](const SurfaceState& s) {
        return SpecState{spectrum(s.theta), spectrum(s.gamma), s.sigma};
    };
    auto unpack = [&](const SpecState& y, double t) {
        SurfaceState s;
        s.theta = field_from_spectrum(grid, y.th);
        s.gamma = field_from_spectrum(grid, y.ga);
        s.sigma = y.sigma;
        s.time = t;
        s.phys = state.phys;
        return s;
    };
    // Exact per-mode propagator of the flat-state linear system over time s:
    // rotation with frequency omega(k) = sqrt(tau |k|^3 / 2). Identity on the
    // mean and Nyquist modes, consistent with the L used in the residual.
    auto propagate_linear = [&](const SpecState& y, double s) {
        SpecState out = y;
        for (int m = 1; m < ny; ++m) {
            const double k = g.wavenumber(m);
            const double om = std::sqrt(0.5 * tau * k * k * k);
            const double c = std::cos(om * s);
            const double sinc = (om > 0.0) ? std::sin(om * s) / om : s;
            const cplx th = y.th[m], ga = y.ga[m];
            out.th[m] = c * th + 0.5 * k * sinc * ga;
            out.ga[m] = -tau * k * k * sinc * th + c * ga;
        }
        return out;
    };
    // Nonlinear remainder: full right-hand side minus the linear part above.
    auto remainder = [&](const SpecState& y, double t) {
        const SurfaceState s = unpack(y, t);
        const Rhs r = rhs(s, cfg.gamma_t_tol, cfg.gamma_t_max_iter);
        SpecState out{spectrum(r.theta_t), spectrum(r.gamma_t), r.sigma_t};
        for (int m = 1; m < ny; ++m) {
            const double k = g.wavenumber(m);
            out.th[m] -= 0.5 * k * y.ga[m];
            out.ga[m] += tau * k * k * y.th[m];
        }
        return out;
    };

    const double t = state.time;
    const SpecState y0 = pack(state);
    SpecState ynew = y0;
    try {
        const SpecState a = remainder(y0, t);
        const SpecState y2 = propagate_linear(y0 + scaled(0.5 * dt, a), 0.5 * dt);
        const SpecState b = remainder(y2, t + 0.5 * dt);
        const SpecState y3 = propagate_linear(y0, 0.5 * dt) + scaled(0.5 * dt, b);
        const SpecState c = remainder(y3, t + 0.5 * dt);
        const SpecState y4 = propagate_linear(y0, dt) + scaled(dt, propagate_linear(c, 0.5 * dt));
        const SpecState d = remainder(y4, t + dt);
        ynew = propagate_linear(y0, dt) +
               scaled(dt / 6.0, propagate_linear(a, dt) +
                                    scaled(2.0, propagate_linear(b + c, 0.5 * dt)) + d);
    } catch (const ChordArcDegeneracy& e) {
        throw SolverAbort(AbortReason::ChordArc, t, e.ratio, "chord-arc collapse inside a step stage");
    } catch (const SolverAbort& e) {
        // Stage states live at t, t + dt/2, or t + dt; report the abort at the
        // last completed time so callers can tell a failed step (time == t)
        // from a completed step rejected by the post-step guards (time == t + dt).
        throw SolverAbort(e.reason, t, e.diagnostic, e.what());
    }
    SurfaceState next = unpack(ynew, t + dt);
    next.theta = filter_field(next.theta, cfg.filter_cutoff, cfg.filter_floor);
    next.gamma = filter_field(next.gamma, cfg.filter_cutoff, cfg.filter_floor);

    if (any_nan(next.theta) || any_nan(next.gamma) || !std::isfinite(next.sigma))
        throw SolverAbort(AbortReason::NanAbort, next.time, 0.0, "non-finite state after step");
    ComplexField z;
    try {
        z = reconstruct_curve(next.theta, next.sigma);
    } catch (const std::domain_error& e) {
        throw SolverAbort(AbortReason::NanAbort, next.time, 0.0,
                          std::string("closure lost after step: ") + e.what());
    }
    const double q = chord_arc_ratio(z, next.sigma);
    if (q < cfg.q_min)
        throw SolverAbort(AbortReason::ChordArc, next.time, q, "chord-arc ratio below Q_min");
    const double ksup = sup_norm(derivative(next.theta, 1)) / next.sigma;
    if (ksup > cfg.kappa_sup_max)
        throw SolverAbort(AbortReason::WindowViolation, next.time, ksup,
                          "curvature left the small-data envelope");
    return next;
}

ResidualPair residual_kappa_u(const SurfaceState& prev, const SurfaceState& mid,
                              const SurfaceState& next) {
    if (prev.theta.grid.get() != mid.theta.grid.get() ||
        mid.theta.grid.get() != next.theta.grid.get())
        throw std::invalid_argument("residual_kappa_u: grid mismatch");
    const double dt1 = mid.time - prev.time, dt2 = next.time - mid.time;
    if (std::abs(dt1 - dt2) > 1e-10 * std::max(dt1, dt2) || dt1 <= 0.0)
        throw std::invalid_argument("residual_kappa_u: states not equispaced in time");
    const DerivedFields dp = derive(prev);
    const DerivedFields dm = derive(mid);
    const DerivedFields dn = derive(next);
    const auto& g = *mid.theta.grid;
    const int n = g.size();
    const double isg = 1.0 / mid.sigma;
    const double tau = mid.phys.inv_we;
    const double inv2dt = 1.0 / (dt1 + dt2);

    const RealField kappa_a = derivative(dm.kappa, 1);
    const RealField hu_a = hilbert(derivative(dm.u, 1));
    const RealField rk_a = derivative(dm.r_kappa, 1);
    const RealField u_a = derivative(dm.u, 1);
    const RealField kappa_aa = derivative(dm.kappa, 2);

    ResidualPair res{RealField(mid.theta.grid), RealField(mid.theta.grid)};
    for (int j = 0; j < n; ++j) {
        const double mtk = (dn.kappa.v[j] - dp.kappa.v[j]) * inv2dt +
                           dm.q.v[j] * isg * kappa_a.v[j];
        res.kappa.v[j] =
            mtk - (isg * hu_a.v[j] - dm.u.v[j] * dm.kappa.v[j] + isg * rk_a.v[j]);
        const double mtu =
            (dn.u.v[j] - dp.u.v[j]) * inv2dt + dm.q.v[j] * isg * u_a.v[j];
        res.u.v[j] = mtu - (0.5 * tau * isg * isg * kappa_aa.v[j] -
                            dm.p.v[j] * dm.kappa.v[j] + dm.r_u.v[j]);
    }
    return res;
}

RealField residual_second_order(const SurfaceState& prev, const SurfaceState& mid,
                                const SurfaceState& next) {
    const double dt1 = mid.time - prev.time, dt2 = next.time - mid.time;
    if (std::abs(dt1 - dt2) > 1e-10 * std::max(dt1, dt2) || dt1 <= 0.0)
        throw std::invalid_argument("residual_second_order: states not equispaced in time");
    const DerivedFields dp = derive(prev);
    const DerivedFields dm = derive(mid);
    const DerivedFields dn = derive(next);
    const auto& g = *mid.theta.grid;
    const double isg = 1.0 / mid.sigma;
    const double tau = mid.phys.inv_we;
    const double inv2dt = 1.0 / (dt1 + dt2);
    const RealField phi_a = derivative(dm.phi, 1);
    const RealField hk3 = hilbert(derivative(dm.kappa, 3));
    const RealField kappa_aa = derivative(dm.kappa, 2);
    RealField out(mid.theta.grid);
    for (int j = 0; j < g.size(); ++j) {
        const double mtphi =
            (dn.phi.v[j] - dp.phi.v[j]) * inv2dt + dm.q.v[j] * isg * phi_a.v[j];
        out.v[j] = mtphi - 0.5 * tau * isg * isg * isg * hk3.v[j] -
                   2.0 * dm.kappa.v[j] * isg * isg * kappa_aa.v[j];
    }
    return out;
}

EnergyResult energy_E0k(const SurfaceState& state, int k) {
    return energy_E0k(state, k, derive(state));
}

EnergyResult energy_E0k(const SurfaceState& state, int k, const DerivedFields& d) {
    if (k < 0) throw std::invalid_argument("energy_E0k: k must be >= 0");
    const double sg = state.sigma;
    const auto sq = [](const RealField& f) { const double v = l2_norm(f); return v * v; };

    EnergyResult out;
    out.equivalence_regime = sup_norm(d.kappa) < 0.25;
    double e = 0.0;
    for (int j = 0; j <= k; ++j) {
        const double sj1 = std::pow(sg, -(j + 1.0));
        const RealField a = sj1 * derivative(d.kappa, j + 1);
        const RealField la = (1.0 / sg) * lambda_pow(a, 1.0);
        const RealField b = std::pow(sg, -static_cast<double>(j)) * derivative(d.phi, j);
        RealField integrand(state.theta.grid);
        for (int i = 0; i < integrand.size(); ++i)
            integrand.v[i] = a.v[i] * la.v[i] + b.v[i] * b.v[i] +
                             2.0 * d.kappa.v[i] * a.v[i] * a.v[i];
        e += 0.5 * sg * integral(integrand);
    }
    e += sg * sq(d.u);
    e += (1.0 / sg) * sq(state.gamma);
    out.value = e;
    return out;
}

SurfaceState scaling_transform(const SurfaceState& state, int lambda) {
    if (lambda < 1) throw std::invalid_argument("scaling_transform: lambda must be >= 1");
    const auto& g = *state.theta.grid;
    if (g.size() % lambda != 0)
        throw std::invalid_argument("scaling_transform: lambda must divide n");
    const int n2 = g.size() / lambda;
    if (lambda == 1) return state;
    GridPtr g2 = make_grid(n2, g.period() / lambda);
    SurfaceState out;
    out.theta = RealField(g2);
    out.gamma = RealField(g2);
    const double root = std::sqrt(static_cast<double>(lambda));
    for (int j = 0; j < n2; ++j) {
        out.theta.v[j] = state.theta.v[static_cast<size_t>(j) * lambda];
        out.gamma.v[j] = root * state.gamma.v[static_cast<size_t>(j) * lambda];
    }
    out.sigma = state.sigma;
    out.time = state.time * std::pow(static_cast<double>(lambda), -1.5);
    out.phys = state.phys;
    return out;
}

SurfaceState project_closure(SurfaceState state) {
    ComplexField e(state.theta.grid);
    for (int j = 0; j < e.size(); ++j) e.v[j] = std::exp(cplx(0.0, state.theta.v[j]));
    const cplx c = mean_value(e);
    const double phase = std::arg(c);
    for (auto& t : state.theta.v) t -= phase;
    state.sigma = 1.0 / std::abs(c);
    return state;
}

SurfaceState make_flat(const GridPtr& g, double gamma0, Physics phys) {
    SurfaceState s;
    s.theta = RealField(g);
    s.gamma = RealField(g);
    for (auto& v : s.gamma.v) v = gamma0;
    s.sigma = 1.0;
    s.phys = phys;
    return s;
}

SurfaceState make_single_mode(const GridPtr& g, double amplitude, int mode, double gamma0,
                              Physics phys) {
    SurfaceState s = make_flat(g, gamma0, phys);
    // Traveling eigenmode of the flat-state linearization: pairing the theta
    // wave with its quadrature gamma wave keeps every modal magnitude (and so
    // the energies) constant at linear order instead of sloshing between the
    // two fields twice per period.
    const double k = mode * two_pi / g->period();
    const double om = std::sqrt(0.5 * phys.inv_we * k * k * k + phys.g * k);
    for (int j = 0; j < g->size(); ++j) {
        const double ka = k * g->node(j);
        s.theta.v[j] = amplitude * std::cos(ka);
        s.gamma.v[j] = gamma0 + (k > 0.0 ? 2.0 * om / k : 0.0) * amplitude * std::sin(ka);
    }
    return project_closure(std::move(s));
}

SurfaceState make_gaussian_bump(const GridPtr& g, double amplitude, double width, Physics phys) {
    SurfaceState s = make_flat(g, 0.0, phys);
    const double P = g->period();
    for (int j = 0; j < g->size(); ++j) {
        double v = 0.0;
        for (int im = -4; im <= 4; ++im) {
            const double x = g->node(j) - im * P;
            v += std::exp(-x * x / (2.0 * width * width));
        }
        s.theta.v[j] = amplitude * v;
    }
    return project_closure(std::move(s));
}

}  // namespace capwave
