#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "capwave/dynamics.hpp"

using namespace capwave;
using cplx = std::complex<double>;

namespace {


SurfaceState advance(SurfaceState s, const StepperConfig& cfg, int steps) {
    for (int i = 0; i < steps; ++i) s = step(s, cfg);
    return s;
}

double rel_sup(const RealField& got, const RealField& want) {
    return sup_norm(got - want) / std::max(sup_norm(want), 1e-30);
}

}  // namespace

TEST_CASE("curve reconstruction from the tangent angle") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    const RealField zero(g);
    const ComplexField flat = reconstruct_curve(zero, 1.0);
    for (int j = 0; j < g->size(); ++j)
        CHECK(std::abs(flat.v[j] - cplx(g->node(j), 0.0)) < 1e-13);

    // theta = eps cos gives height eps sin + O(eps^3): the odd part of
    // sin(theta) kills the eps^2 term.
    const double eps = 1e-3;
    const RealField theta = sample_real(g, [&](double a) { return eps * std::cos(a); });
    const ComplexField z = reconstruct_curve(theta, 1.0);
    double worst = 0.0;
    for (int j = 0; j < g->size(); ++j)
        worst = std::max(worst, std::abs(z.v[j].imag() - eps * std::sin(g->node(j))));
    CHECK(worst < 1e-8);

    const RealField tilted = sample_real(g, [](double) { return 0.1; });
    CHECK_THROWS_AS(reconstruct_curve(tilted, 1.0), std::domain_error);
}

TEST_CASE("kinematic fields on flat configurations") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState still = make_flat(g, 3.0);
    const Kinematics kq = kinematic_fields(still);
    CHECK(sup_norm(kq.u_perp) < 1e-12);
    CHECK(sup_norm(kq.u_par) < 1e-12);
    CHECK(sup_norm(kq.theta_t) < 1e-12);
    CHECK(std::abs(kq.sigma_t) < 1e-13);

    SurfaceState s = make_flat(g, 0.0);
    s.gamma = sample_real(g, [](double a) { return std::cos(a); });
    const Kinematics k = kinematic_fields(s);
    const RealField uperp_want = sample_real(g, [](double a) { return 0.5 * std::sin(a); });
    CHECK(sup_norm(k.u_perp - uperp_want) < 1e-10);
    CHECK(sup_norm(k.u_par) < 1e-10);
    CHECK(std::abs(k.sigma_t) < 1e-12);

    const RealField tt = theta_rhs(s);
    const RealField tt_want = sample_real(g, [](double a) { return 0.5 * std::cos(a); });
    CHECK(sup_norm(tt - tt_want) < 1e-10);
    CHECK(sup_norm(tt - k.theta_t) < 1e-13);
}

TEST_CASE("sheet strength update on the flat line has a closed form") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_flat(g, 0.0);
    s.gamma = sample_real(g, [](double a) { return std::sin(a); });

    const GammaTSolve sol = solve_gamma_t(s);
    CHECK(sol.iterations <= 2);
    CHECK(sol.residual < 1e-12);
    // Every kernel term collapses on the flat line; what survives is
    // -(1/2) gamma gamma' + 2 Re(z_a (1/2i) H(gamma i theta_t)) = -sin(2a)/2.
    const RealField want = sample_real(g, [](double a) { return -0.5 * std::sin(2.0 * a); });
    CHECK(sup_norm(sol.gamma_t - want) < 1e-10);

    SurfaceState flat = make_flat(g, 5.0);
    CHECK(sup_norm(solve_gamma_t(flat).gamma_t) < 1e-11);
}

TEST_CASE("sheet strength solve residual and time consistency off the flat line") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_single_mode(g, 1e-2, 2, 0.3);
    const GammaTSolve sol = solve_gamma_t(s, 1e-13, 80);
    CHECK(sol.residual < 1e-10);
    CHECK(sol.iterations >= 2);

    // Independent route: centered difference of gamma across two tiny steps.
    StepperConfig cfg;
    cfg.dt = 1e-4;
    cfg.kappa_sup_max = 10.0;
    const SurfaceState fwd = step(s, cfg);
    const SurfaceState fwd2 = step(fwd, cfg);
    const RealField fd = (1.0 / (2.0 * cfg.dt)) * (fwd2.gamma - s.gamma);
    const GammaTSolve mid = solve_gamma_t(fwd, 1e-13, 80);
    CHECK(sup_norm(mid.gamma_t - fd) < 1e-5 * std::max(1.0, sup_norm(mid.gamma_t)));
}

TEST_CASE("derived fields satisfy the internal frame identities") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_gaussian_bump(g, 1e-2, 0.8);
    s.gamma = sample_real(g, [](double a) { return 0.2 * std::cos(a); });
    s = project_closure(s);
    const DerivedFields d = derive(s);

    CHECK(d.closure_residual < 1e-12);
    CHECK(sup_norm(d.kappa - (1.0 / s.sigma) * derivative(s.theta, 1)) < 1e-12);
    CHECK(sup_norm(d.theta_t - theta_rhs(s)) < 1e-12);

    // d/dalpha q = sigma u - sigma_t: the tangential velocity is the
    // arclength antiderivative of u up to the frame gauge constant.
    RealField gauge = derivative(d.q, 1);
    for (auto& x : gauge.v) x = (x + d.sigma_t) / s.sigma;
    CHECK(sup_norm(gauge - d.u) < 1e-9 * std::max(1.0, sup_norm(d.u)));

    // phi is exactly the advective curvature derivative.
    const RealField phi_want = d.kappa_t + (1.0 / s.sigma) * (d.q * derivative(d.kappa, 1));
    CHECK(sup_norm(d.phi - phi_want) < 1e-12);

    // kappa_t by the chain rule through theta_t and sigma_t.
    const RealField kt_want =
        (1.0 / s.sigma) * derivative(d.theta_t, 1) - (d.sigma_t / s.sigma) * d.kappa;
    CHECK(sup_norm(d.kappa_t - kt_want) < 1e-12);

    CHECK(sup_norm(d.w - birkhoff_rott(d.z, s.gamma, s.sigma)) < 1e-12);
    CHECK(sup_norm(d.m - m_field(d.z, s.gamma)) < 1e-12);
}

TEST_CASE("velocity time derivative matches a centered difference in time") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_gaussian_bump(g, 1e-2, 0.8);
    StepperConfig cfg;
    cfg.dt = 1e-3;
    cfg.kappa_sup_max = 10.0;
    const SurfaceState s1 = step(s, cfg);
    const SurfaceState s2 = step(s1, cfg);
    const DerivedFields d0 = derive(s);
    const DerivedFields d1 = derive(s1);
    const DerivedFields d2 = derive(s2);

    const ComplexField fd_w = cplx(1.0 / (2.0 * cfg.dt), 0.0) * (d2.w - d0.w);
    CHECK(sup_norm(d1.w_t - fd_w) < 2e-3 * std::max(1.0, sup_norm(d1.w_t)));

    const RealField fd_k = (1.0 / (2.0 * cfg.dt)) * (d2.kappa - d0.kappa);
    CHECK(sup_norm(d1.kappa_t - fd_k) < 1e-3 * std::max(1.0, sup_norm(d1.kappa_t)));

    const RealField fd_u = (1.0 / (2.0 * cfg.dt)) * (d2.u - d0.u);
    CHECK(sup_norm(d1.u_t - fd_u) < 2e-3 * std::max(1.0, sup_norm(d1.u_t)));
}

TEST_CASE("material fields on explicit configurations") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_flat(g, 3.0);
    const MaterialFields mf = material_fields(s);
    const RealField half = sample_real(g, [](double) { return 1.5; });
    CHECK(sup_norm(mf.q - half) < 1e-12);
    CHECK(sup_norm(mf.u) < 1e-12);
    CHECK(sup_norm(mf.kappa) < 1e-13);

    SurfaceState s2 = make_flat(g, 0.0);
    s2.gamma = sample_real(g, [](double a) { return 2.0 * std::sin(a); });
    const MaterialFields mf2 = material_fields(s2);
    const RealField ucos = sample_real(g, [](double a) { return std::cos(a); });
    CHECK(sup_norm(mf2.u - ucos) < 1e-12);

    // With gamma = 0 the transport reduces to minus the tangential velocity.
    SurfaceState s3 = make_single_mode(g, 1e-2, 1);
    s3.gamma = RealField(g);
    s3 = project_closure(std::move(s3));
    const MaterialFields mf3 = material_fields(s3);
    const Kinematics k3 = kinematic_fields(s3);
    CHECK(sup_norm(mf3.q + k3.u_par) < 1e-12);
}

TEST_CASE("pressure composite on explicit configurations") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState flat = make_flat(g, 4.0);
    CHECK(sup_norm(pressure_field(flat)) < 5e-12);

    // gamma = 0 stops the flow but not the pressure: surface tension still
    // accelerates the fluid, and the linearized response at a single mode is
    // -(tau/2) eps k^2 sin(k alpha).
    const double eps = 1e-3;
    SurfaceState lin = make_single_mode(g, eps, 2);
    const RealField p = pressure_field(lin);
    const double tau = lin.phys.inv_we;
    const RealField want =
        sample_real(g, [&](double a) { return -0.5 * tau * eps * 4.0 * std::sin(2.0 * a); });
    CHECK(rel_sup(p, want) < 10.0 * eps);
    CHECK(sup_norm(p) > 0.5 * tau * eps);
}

TEST_CASE("curvature-system remainders on explicit configurations") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_flat(g, 0.0);
    s.gamma = sample_real(g, [](double a) { return 2.0 * std::sin(a); });
    const RemainderFields r = remainder_fields(s);
    CHECK(sup_norm(r.r_kappa) < 1e-12);
    const RealField want = sample_real(g, [](double a) { return -std::cos(2.0 * a); });
    CHECK(sup_norm(r.r_u - want) < 1e-11);

    SurfaceState quiet = make_flat(g, 7.0);
    const RemainderFields rq = remainder_fields(quiet);
    CHECK(sup_norm(rq.r_kappa) < 1e-12);
    CHECK(sup_norm(rq.r_u) < 1e-12);
    CHECK(sup_norm(rq.r_p) < 1e-9);
}

TEST_CASE("remainders decay faster than the fields they correct") {
    const GridPtr g = make_grid(256, 2.0 * pi);
    SurfaceState s = make_gaussian_bump(g, 1e-2, 0.8);
    s.gamma = sample_real(g, [](double a) { return 1e-2 * std::sin(a); });
    s = project_closure(s);
    const DerivedFields d = derive(s);

    const double kmin = 8.0, kmax = 64.0;
    CHECK(log_ratio_slope(d.r_kappa, d.kappa, kmin, kmax) >= 1.0 - 0.5);
    CHECK(log_ratio_slope(d.r_p, derivative(d.p, 1), kmin, kmax) >= 2.0 - 0.5);
}

TEST_CASE("right-hand side at equilibrium and in the linear regime") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState flat = make_flat(g, 2.0);
    const Rhs r0 = rhs(flat);
    CHECK(sup_norm(r0.theta_t) < 5e-12);
    CHECK(sup_norm(r0.gamma_t) < 5e-12);
    CHECK(std::abs(r0.sigma_t) < 1e-13);

    // Flat curve: theta_t = (1/2) H gamma_alpha holds exactly, not just to
    // second order.
    SurfaceState fg = make_flat(g, 0.0);
    fg.gamma = sample_real(g, [](double a) { return 0.3 * std::sin(2.0 * a); });
    const Rhs r1 = rhs(fg);
    CHECK(sup_norm(r1.theta_t - 0.5 * hilbert(derivative(fg.gamma, 1))) < 1e-12);

    const double eps = 1e-3;
    SurfaceState lin = make_single_mode(g, eps, 2, 0.0);
    lin.gamma = sample_real(g, [&](double a) { return eps * std::sin(2.0 * a); });
    lin = project_closure(lin);
    const Rhs r2 = rhs(lin);
    const double tau = lin.phys.inv_we;
    CHECK(sup_norm(r2.theta_t - 0.5 * hilbert(derivative(lin.gamma, 1))) < 10.0 * eps * eps);
    CHECK(sup_norm(r2.gamma_t - (tau / lin.sigma) * derivative(lin.theta, 2)) <
          10.0 * eps * eps);
}

TEST_CASE("kernel evaluation refuses nearly self-touching curves") {
    const GridPtr g = make_grid(256, 2.0 * pi);
    SurfaceState folded = make_gaussian_bump(g, 4.5, 0.45);
    CHECK_THROWS_AS(rhs(folded), std::domain_error);
    CHECK_THROWS_AS(derive(folded), std::domain_error);
}

TEST_CASE("chord-arc ratio of explicit curves") {
    const GridPtr g = make_grid(256, 2.0 * pi);
    const ComplexField flat = sample_complex(g, [](double x) { return cplx(x, 0.0); });
    const double q = chord_arc_ratio(flat, 1.0);
    CHECK(q >= 1.0 - 1e-12);
    // Discrete minimum of |a-b| / (2 sin((a-b)/2)) sits at the nearest
    // neighbour: 1 + h^2/24.
    const double h = g->spacing();
    CHECK(q <= 1.0 + h * h);

    SurfaceState folded = make_gaussian_bump(g, 4.5, 0.45);
    const ComplexField zf = reconstruct_curve(folded.theta, folded.sigma);
    CHECK(chord_arc_ratio(zf, folded.sigma) < 0.05);

    // Constructed near-contact: two far-apart parameters mapped 1e-3 apart.
    ComplexField pinched = flat;
    pinched.v[190] = pinched.v[60] + cplx(0.0, 1e-3);
    CHECK(chord_arc_ratio(pinched, 1.0) < 0.01);
}

TEST_CASE("abort reasons carry stable names") {
    CHECK(abort_reason_name(AbortReason::ChordArc) == "chord-arc-abort");
    CHECK(abort_reason_name(AbortReason::GammaTNonconvergence) == "gamma-t-nonconvergence");
    CHECK(abort_reason_name(AbortReason::WindowViolation) == "window-violation");
    CHECK(abort_reason_name(AbortReason::NanAbort) == "nan-abort");
}

TEST_CASE("stepper keeps the flat equilibrium to roundoff") {
    const GridPtr g = make_grid(64, 2.0 * pi);
    SurfaceState s = make_flat(g, 1.0);
    StepperConfig cfg;
    cfg.dt = 1e-3;
    s = advance(s, cfg, 200);
    CHECK(sup_norm(s.theta) < 1e-13);
    const RealField one = sample_real(g, [](double) { return 1.0; });
    CHECK(sup_norm(s.gamma - one) < 1e-13);
    CHECK(std::abs(s.sigma - 1.0) < 1e-13);
    CHECK(s.time == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("small single-mode data oscillates at the capillary frequency") {
    const GridPtr g = make_grid(64, 2.0 * pi);
    const int mode = 2;
    const double amp = 1e-5;
    SurfaceState s = make_single_mode(g, amp, mode);
    const double tau = s.phys.inv_we;
    const double om = std::sqrt(0.5 * tau * 8.0);

    StepperConfig cfg;
    cfg.dt = 0.01;
    const int steps = static_cast<int>(std::lround(2.0 * pi / om / cfg.dt));
    std::vector<double> ts, phase;
    double prev = 0.0, offset = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const cplx th = spectrum(s.theta)[mode];
        const cplx ga = spectrum(s.gamma)[mode];
        const cplx zeta = th + cplx(0.0, 1.0) * (static_cast<double>(mode) / (2.0 * om)) * ga;
        double ph = std::arg(zeta);
        if (i > 0) {
            while (ph + offset - prev > pi) offset -= 2.0 * pi;
            while (ph + offset - prev < -pi) offset += 2.0 * pi;
        }
        prev = ph + offset;
        ts.push_back(s.time);
        phase.push_back(prev);
        if (i < steps) s = step(s, cfg);
    }
    const double measured = std::abs(fit_slope(ts, phase));
    CHECK(std::abs(measured - om) / om < 1e-3);
}

TEST_CASE("one step converges at fourth order") {
    const GridPtr g = make_grid(64, 2.0 * pi);
    SurfaceState s0 = make_single_mode(g, 0.05, 2, 0.0);
    const double horizon = 0.1;

    auto run_to = [&](double dt) {
        StepperConfig cfg;
        cfg.dt = dt;
        cfg.kappa_sup_max = 10.0;
        return advance(s0, cfg, static_cast<int>(std::lround(horizon / dt)));
    };
    const SurfaceState ref = run_to(horizon / 64.0);
    std::vector<double> ld, le;
    for (int m : {8, 16, 32}) {
        const SurfaceState s = run_to(horizon / m);
        ld.push_back(std::log(horizon / m));
        le.push_back(std::log(l2_norm(s.theta - ref.theta) + l2_norm(s.gamma - ref.gamma)));
    }
    const double slope = fit_slope(ld, le);
    CHECK(slope > 3.5);
    CHECK(slope < 4.5);
}

TEST_CASE("stepper aborts carry the reason and the diagnostic value") {
    const GridPtr g = make_grid(128, 2.0 * pi);

    SurfaceState big = make_single_mode(g, 0.3, 4);
    StepperConfig cfg;
    cfg.dt = 1e-4;
    try {
        step(big, cfg);
        FAIL("expected the curvature envelope abort");
    } catch (const SolverAbort& e) {
        CHECK(e.reason == AbortReason::WindowViolation);
        CHECK(e.diagnostic > cfg.kappa_sup_max);
    }

    SurfaceState bent = make_gaussian_bump(g, 1.8, 0.6);
    StepperConfig tight;
    tight.dt = 1e-4;
    tight.q_min = 0.97;
    tight.kappa_sup_max = 100.0;
    try {
        step(bent, tight);
        FAIL("expected the chord-arc abort");
    } catch (const SolverAbort& e) {
        CHECK(e.reason == AbortReason::ChordArc);
        CHECK(e.diagnostic < tight.q_min);
        CHECK(e.diagnostic > 0.0);
    }

    SurfaceState curved = make_single_mode(g, 1e-2, 2, 0.3);
    CHECK_THROWS_AS(solve_gamma_t(curved, 1e-16, 1), SolverAbort);
    try {
        solve_gamma_t(curved, 1e-16, 1);
    } catch (const SolverAbort& e) {
        CHECK(e.reason == AbortReason::GammaTNonconvergence);
    }
}

TEST_CASE("centered residuals vanish at equilibrium and shrink at second order") {
    const GridPtr g = make_grid(64, 2.0 * pi);
    SurfaceState f0 = make_flat(g, 1.0);
    SurfaceState f1 = f0, f2 = f0;
    f1.time = 0.01;
    f2.time = 0.02;
    const ResidualPair rp = residual_kappa_u(f0, f1, f2);
    CHECK(l2_norm(rp.kappa) < 1e-13);
    CHECK(l2_norm(rp.u) < 1e-13);

    SurfaceState base = make_single_mode(g, 1e-3, 1, 0.0);
    const double t0 = 0.06;
    std::vector<double> ld, lr;
    for (double dt : {2e-2, 1e-2, 5e-3}) {
        StepperConfig cfg;
        cfg.dt = dt;
        const int mid_steps = static_cast<int>(std::lround(t0 / dt));
        const SurfaceState prev = advance(base, cfg, mid_steps - 1);
        const SurfaceState mid = step(prev, cfg);
        const SurfaceState next = step(mid, cfg);
        const ResidualPair r = residual_kappa_u(prev, mid, next);
        ld.push_back(std::log(dt));
        lr.push_back(std::log(l2_norm(r.kappa) + l2_norm(r.u)));
    }
    const double slope = fit_slope(ld, lr);
    CHECK(slope > 1.7);
    CHECK(slope < 2.3);

    CHECK_THROWS_AS(residual_kappa_u(f0, f1, f0), std::invalid_argument);
}

TEST_CASE("second-order residual is spectrally smaller than the curvature terms") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState base = make_gaussian_bump(g, 1e-2, 0.8);
    StepperConfig cfg;
    cfg.dt = 2e-3;
    cfg.kappa_sup_max = 10.0;
    const SurfaceState prev = advance(base, cfg, 2);
    const SurfaceState mid = step(prev, cfg);
    const SurfaceState next = step(mid, cfg);
    const RealField r = residual_second_order(prev, mid, next);
    const DerivedFields d = derive(mid);
    const RealField curv2 = derivative(d.kappa, 2);
    CHECK(log_ratio_slope(r, curv2, 8.0, 32.0) < -0.5);
}

TEST_CASE("energy ladder on flat states and the equivalence flag") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState quiet = make_flat(g, 0.0);
    const EnergyResult e0 = energy_E0k(quiet, 2);
    CHECK(e0.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e0.equivalence_regime);

    const double c = 1.7;
    SurfaceState carrying = make_flat(g, c);
    const EnergyResult e1 = energy_E0k(carrying, 3);
    CHECK(e1.value == doctest::Approx(c * c * 2.0 * pi).epsilon(1e-12));
    CHECK(e1.equivalence_regime);

    SurfaceState steep = make_single_mode(g, 0.5, 4);
    CHECK_FALSE(energy_E0k(steep, 0).equivalence_regime);
    CHECK_THROWS_AS(energy_E0k(quiet, -1), std::invalid_argument);
}

TEST_CASE("energy of small data is conserved over a short run") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_single_mode(g, 1e-3, 1);
    StepperConfig cfg;
    cfg.dt = 5e-3;
    double emin = 1e300, emax = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double e = energy_E0k(s, 2).value;
        emin = std::min(emin, e);
        emax = std::max(emax, e);
        s = advance(s, cfg, 10);
    }
    CHECK(emax / emin < 1.0 + 1e-3);
}

TEST_CASE("parabolic rescaling halves the box and boosts the strength") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    SurfaceState s = make_single_mode(g, 1e-3, 2, 0.4);
    s.time = 0.8;

    const SurfaceState same = scaling_transform(s, 1);
    CHECK(sup_norm(same.theta - s.theta) == 0.0);

    const SurfaceState t = scaling_transform(s, 2);
    CHECK(t.theta.grid->size() == 64);
    CHECK(t.theta.grid->period() == doctest::Approx(pi).epsilon(1e-15));
    CHECK(t.time == doctest::Approx(0.8 / std::pow(2.0, 1.5)).epsilon(1e-14));
    CHECK(t.sigma == doctest::Approx(s.sigma).epsilon(1e-14));

    // theta'(alpha) = theta(2 alpha), gamma' = sqrt(2) gamma(2 alpha).
    double worst_theta = 0.0, worst_gamma = 0.0;
    const auto& g2 = *t.theta.grid;
    for (int j = 0; j < g2.size(); ++j) {
        const int src = (2 * j) % g->size();
        worst_theta = std::max(worst_theta, std::abs(t.theta.v[j] - s.theta.v[src]));
        worst_gamma =
            std::max(worst_gamma, std::abs(t.gamma.v[j] - std::sqrt(2.0) * s.gamma.v[src]));
    }
    CHECK(worst_theta < 1e-13);
    CHECK(worst_gamma < 1e-13);

    CHECK_THROWS_AS(scaling_transform(s, 3), std::invalid_argument);
    CHECK_THROWS_AS(scaling_transform(s, 0), std::invalid_argument);
}

TEST_CASE("initial data constructors close the curve exactly") {
    const GridPtr g = make_grid(128, 2.0 * pi);
    const SurfaceState flat = make_flat(g, 2.0);
    CHECK(sup_norm(flat.theta) == 0.0);
    CHECK(flat.sigma == 1.0);

    for (const SurfaceState& s :
         {make_single_mode(g, 0.1, 3, 1.0), make_gaussian_bump(g, 0.15, 0.7)}) {
        ComplexField za(g);
        for (int j = 0; j < g->size(); ++j)
            za.v[j] = s.sigma * std::exp(cplx(0.0, s.theta.v[j]));
        CHECK(std::abs(mean_value(za) - 1.0) < 1e-13);
    }

    SurfaceState proj = make_single_mode(g, 0.1, 3);
    const SurfaceState again = project_closure(proj);
    CHECK(sup_norm(again.theta - proj.theta) < 1e-14);
    CHECK(std::abs(again.sigma - proj.sigma) < 1e-14);
}
