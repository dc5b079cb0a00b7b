#include "capwave/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace capwave {

double omega(double k, double inv_we, double g) {
    const double ak = std::abs(k);
    return std::sqrt(0.5 * inv_we * ak * ak * ak + g * ak);
}

namespace {

void check_window(const WindowSpec& w, double period) {
    if (!(w.radius > 0.0) || !(w.taper > 0.0))
        throw std::invalid_argument("window radius and taper must be positive");
    if (w.radius + w.taper >= 0.5 * period)
        throw std::invalid_argument("window support + taper must be below period/2");
}

// Smooth cutoff: 1 at x <= 0, 0 at x >= 1.
double transition(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - x));
    const double b = std::exp(-1.0 / x);
    return a / (a + b);
}

double mass_fraction(const RealField& f, double lo) {
    // Fraction of sum f^2 over nodes with |alpha| >= lo; h cancels.
    double inside = 0.0, total = 0.0;
    const auto& g = *f.grid;
    for (int j = 0; j < g.size(); ++j) {
        const double m = f.v[j] * f.v[j];
        total += m;
        if (std::abs(g.node(j)) >= lo) inside += m;
    }
    return total > 0.0 ? inside / total : 0.0;
}

void require_clear_of_seam(const LinearSolution& sol, const LinearFields& f,
                           double limit = 1e-10) {
    // Uniform offsets carry no seam hazard (every weighted term differentiates
    // them away), so exposure is measured on the gradient.
    const double edge = 0.5 * sol.grid->period() - (sol.window.radius + sol.window.taper);
    const double m = std::max(mass_fraction(derivative(f.kappa, 1), edge),
                              mass_fraction(derivative(f.kappa_t, 1), edge));
    if (m > limit)
        throw WindowError("wave reached the boundary: seam mass fraction " + std::to_string(m),
                          m);
}

RealField alpha_times(const RealField& f, double scale) {
    RealField out(f.grid);
    for (int j = 0; j < f.size(); ++j) out.v[j] = scale * f.grid->node(j) * f.v[j];
    return out;
}

}  // namespace

LinearSolution make_linear_solution(const RealField& kappa0, const RealField& kappa1,
                                    double inv_we, double g, WindowSpec window) {
    if (kappa0.grid.get() != kappa1.grid.get())
        throw std::invalid_argument("make_linear_solution: grid mismatch");
    if (inv_we < 0.0 || g < 0.0)
        throw std::invalid_argument("make_linear_solution: negative physics parameters");
    check_window(window, kappa0.grid->period());
    LinearSolution sol;
    sol.grid = kappa0.grid;
    sol.kappa0_hat = spectrum(kappa0);
    sol.kappa1_hat = spectrum(kappa1);
    sol.inv_we = inv_we;
    sol.g = g;
    sol.window = window;
    return sol;
}

LinearFields propagate(const LinearSolution& sol, double t) {
    const auto& g = *sol.grid;
    const int nh = static_cast<int>(sol.kappa0_hat.size());
    std::vector<cplx> k0(nh), k1(nh), k2(nh);
    for (int m = 0; m < nh; ++m) {
        const double om = omega(g.wavenumber(m), sol.inv_we, sol.g);
        const cplx a = sol.kappa0_hat[m], b = sol.kappa1_hat[m];
        if (om > 0.0) {
            const double c = std::cos(om * t), s = std::sin(om * t);
            k0[m] = c * a + (s / om) * b;
            k1[m] = -om * s * a + c * b;
        } else {
            k0[m] = a + t * b;
            k1[m] = b;
        }
        k2[m] = -om * om * k0[m];
    }
    LinearFields out;
    out.kappa = field_from_spectrum(sol.grid, k0);
    out.kappa_t = field_from_spectrum(sol.grid, k1);
    out.kappa_tt = field_from_spectrum(sol.grid, k2);
    out.time = t;
    return out;
}

RealField apply_dispersion(const LinearSolution& sol, const RealField& f) {
    if (f.grid.get() != sol.grid.get())
        throw std::invalid_argument("apply_dispersion: grid mismatch");
    std::vector<cplx> c = spectrum(f);
    for (size_t m = 0; m < c.size(); ++m) {
        const double om = omega(sol.grid->wavenumber(static_cast<int>(m)), sol.inv_we, sol.g);
        c[m] *= om * om;
    }
    return field_from_spectrum(sol.grid, c);
}

RealField window_mask(const GridPtr& grid, const WindowSpec& window) {
    check_window(window, grid->period());
    RealField out(grid);
    for (int j = 0; j < grid->size(); ++j) {
        const double a = std::abs(grid->node(j));
        out.v[j] = transition((a - window.radius) / window.taper);
    }
    return out;
}

double mass_outside_window(const RealField& f, const WindowSpec& window) {
    return mass_fraction(f, window.radius + window.taper);
}

double boundary_mass(const RealField& f, const WindowSpec& window) {
    return mass_fraction(f, 0.5 * f.grid->period() - (window.radius + window.taper));
}

double max_reliable_time(const LinearSolution& sol, const WindowSpec& window) {
    const auto& g = *sol.grid;
    const double collar = 0.5 * g.period() - (window.radius + window.taper);
    if (collar <= 0.0) return 0.0;
    const size_t nh = sol.kappa0_hat.size();
    std::vector<double> speed(nh, 0.0), mass(nh, 0.0);
    double total = 0.0;
    for (size_t m = 0; m < nh; ++m) {
        const double k = g.wavenumber(static_cast<int>(m));
        const double om = omega(k, sol.inv_we, sol.g);
        speed[m] = om > 0.0 ? (1.5 * sol.inv_we * k * k + sol.g) / (2.0 * om) : 0.0;
        const double a0 = std::abs(sol.kappa0_hat[m]);
        const double a1 = std::abs(sol.kappa1_hat[m]);
        mass[m] = a0 * a0 + a1 * a1 / (om * om + 1.0);
        total += mass[m];
    }
    if (total <= 0.0) return std::numeric_limits<double>::infinity();
    const auto escaped = [&](double t) {
        double out = 0.0;
        for (size_t m = 0; m < nh; ++m)
            if (speed[m] * t >= collar) out += mass[m];
        return out / total;
    };
    double hi = 1e9;
    if (escaped(hi) <= 1e-13) return std::numeric_limits<double>::infinity();
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (escaped(mid) <= 1e-13 ? lo : hi) = mid;
    }
    return lo;
}

RealField gamma2_apply(const LinearSolution& sol, double t) {
    const LinearFields f = propagate(sol, t);
    require_clear_of_seam(sol, f);
    return 0.5 * t * f.kappa_t + alpha_times(derivative(f.kappa, 1), 1.0 / 3.0);
}

double energy_linear(const LinearSolution& sol, double t) {
    const LinearFields f = propagate(sol, t);
    const double a = l2_norm(lambda_pow(derivative(f.kappa, 1), 0.5));
    const double b = l2_norm(f.kappa_t);
    return a * a + b * b;
}

double energy_gamma2(const LinearSolution& sol, double t) {
    const LinearFields f = propagate(sol, t);
    require_clear_of_seam(sol, f);
    const RealField g2 = 0.5 * t * f.kappa_t + alpha_times(derivative(f.kappa, 1), 1.0 / 3.0);
    const RealField g2_t = 0.5 * t * f.kappa_tt + 0.5 * f.kappa_t +
                           alpha_times(derivative(f.kappa_t, 1), 1.0 / 3.0);
    const double a = l2_norm(lambda_pow(derivative(g2, 1), 0.5));
    const double b = l2_norm(g2_t);
    return a * a + b * b;
}

double energy_gamma_g(const LinearSolution& sol, double t) {
    const LinearFields f = propagate(sol, t);
    require_clear_of_seam(sol, f);
    const RealField gg = 0.5 * t * f.kappa_t + alpha_times(derivative(f.kappa, 1), 1.0);
    const RealField gg_t = 0.5 * t * f.kappa_tt + 0.5 * f.kappa_t +
                           alpha_times(derivative(f.kappa_t, 1), 1.0);
    const double a = l2_norm(lambda_pow(gg, 0.5));
    const double b = l2_norm(gg_t);
    return a * a + b * b;
}

double weighted_gain_norm(const LinearSolution& sol, double t, int k) {
    if (k < 1) throw std::invalid_argument("weighted_gain_norm: k must be >= 1");
    const LinearFields f = propagate(sol, t);
    require_clear_of_seam(sol, f, 1e-6);
    const RealField d = lambda_pow(derivative(f.kappa, k + 3), 0.5 * (k + 1));
    RealField w(sol.grid);
    for (int j = 0; j < w.size(); ++j) {
        const double a = sol.grid->node(j);
        w.v[j] = std::pow(1.0 + a * a, -0.5 * k) * d.v[j];
    }
    return std::pow(t, k) * l2_norm(w);
}

double smoothing_commutator(const LinearSolution& sol, double t, int K, double rho) {
    if (!(rho > 0.5)) throw std::invalid_argument("smoothing_commutator: rho must exceed 1/2");
    if (K < 0) throw std::invalid_argument("smoothing_commutator: K must be >= 0");
    const LinearFields f = propagate(sol, t);
    require_clear_of_seam(sol, f, 1e-6);
    const RealField dk = derivative(f.kappa, K);
    const RealField dkt = derivative(f.kappa_t, K);
    const RealField h_dk = hilbert(dk);
    const RealField h_dkt = hilbert(dkt);
    RealField integrand(sol.grid);
    for (int j = 0; j < integrand.size(); ++j) {
        const double a = sol.grid->node(j);
        const double weight = std::pow(1.0 + a * a, 0.5 * (1.0 - 2.0 * rho));
        integrand.v[j] = weight * (dk.v[j] * h_dkt.v[j] - dkt.v[j] * h_dk.v[j]);
    }
    return integral(integrand);
}

RealField gaussian_packet(const GridPtr& grid, double amplitude, double width,
                          double carrier) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian_packet: width must be positive");
    RealField out(grid);
    const double P = grid->period();
    for (int j = 0; j < grid->size(); ++j) {
        double v = 0.0;
        for (int im = -4; im <= 4; ++im) {
            const double x = grid->node(j) - im * P;
            const double env = std::exp(-x * x / (2.0 * width * width));
            v += carrier == 0.0 ? env : std::sin(carrier * x) * env;
        }
        out.v[j] = amplitude * v;
    }
    return out;
}

RealField rough_tail_data(const GridPtr& grid, double s, unsigned seed,
                          const WindowSpec& window) {
    check_window(window, grid->period());
    const int nh = grid->nyquist_index() + 1;
    std::vector<cplx> c(nh, cplx(0.0, 0.0));
    std::mt19937 rng(seed);
    const double scale = 1.0 / 4294967296.0;  // 2^-32, raw-word mapping for portability
    for (int m = 1; m < nh - 1; ++m) {
        const double phase = two_pi * (rng() * scale);
        const double k = grid->wavenumber(m);
        const double cut = 1.0 - std::exp(-std::pow(k / 3.0, 4.0));
        const double amp = std::pow(1.0 + k * k, -0.25 * (2.0 * s + 1.0)) * cut;
        c[m] = amp * std::exp(cplx(0.0, phase));
    }
    const RealField raw = field_from_spectrum(grid, c);
    constexpr double env_width = 3.0;
    RealField out = gaussian_packet(grid, 1.0, env_width, 1.8);
    for (int j = 0; j < grid->size(); ++j) {
        const double a = grid->node(j);
        out.v[j] += raw.v[j] * std::exp(-a * a / (2.0 * env_width * env_width));
    }
    const double edge = 0.5 * grid->period() - (window.radius + window.taper);
    const double seam = mass_fraction(out, edge);
    if (seam > 1e-6)
        throw WindowError("rough_tail_data: box too small for the envelope, seam fraction " +
                              std::to_string(seam),
                          seam);
    return out;
}

}  // namespace capwave
