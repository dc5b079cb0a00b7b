#include "capwave/runner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace capwave {

namespace {

using njson = nlohmann::ordered_json;

constexpr const char* kVersion = "capwave 1.0";

// Pinned seeds of the gain-dichotomy campaign, index by k. Chosen so the
// rough-tail draw keeps a 10% margin on every threshold of the campaign.
constexpr unsigned kGainSeed[3] = {0, 1, 1};

std::string fmt17(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::string fmtg(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

std::string timestamp_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char b[40];
    std::strftime(b, sizeof b, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return b;
}

std::string trimmed(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void value_fail(const std::string& key, const std::string& what) {
    throw std::runtime_error(key + ": " + what);
}

double parse_number(const std::string& key, const std::string& raw) {
    char* end = nullptr;
    const double x = std::strtod(raw.c_str(), &end);
    if (raw.empty() || end != raw.c_str() + raw.size())
        value_fail(key, "expected a number, got \"" + raw + "\"");
    return x;
}

long parse_integer(const std::string& key, const std::string& raw) {
    char* end = nullptr;
    const long x = std::strtol(raw.c_str(), &end, 10);
    if (raw.empty() || end != raw.c_str() + raw.size())
        value_fail(key, "expected an integer, got \"" + raw + "\"");
    return x;
}

bool parse_flag(const std::string& key, const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    value_fail(key, "expected true or false, got \"" + raw + "\"");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& raw) {
    std::vector<int> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trimmed(item);
        if (!item.empty()) out.push_back(static_cast<int>(parse_integer(key, item)));
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    return out;
}

// Returns false for an unknown key; value errors throw with the key named.
bool apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    auto num = [&] { return parse_number(key, value); };
    auto integer = [&] { return static_cast<int>(parse_integer(key, value)); };
    auto flag = [&] { return parse_flag(key, value); };
    if (key == "mode") {
        if (value == "nonlinear") c.mode = RunMode::Nonlinear;
        else if (value == "linear-capillary") c.mode = RunMode::LinearCapillary;
        else if (value == "linear-gravity") c.mode = RunMode::LinearGravity;
        else if (value == "operators-test") c.mode = RunMode::OperatorsTest;
        else value_fail(key, "unknown mode \"" + value + "\"");
    } else if (key == "grid.n") c.grid_n = integer();
    else if (key == "grid.period") c.grid_period = num();
    else if (key == "physics.inv_we") c.phys.inv_we = num();
    else if (key == "physics.g") c.phys.g = num();
    else if (key == "initial.kind") c.initial.kind = value;
    else if (key == "initial.gamma0") c.initial.gamma0 = num();
    else if (key == "initial.amplitude") c.initial.amplitude = num();
    else if (key == "initial.mode") c.initial.mode = integer();
    else if (key == "initial.width") c.initial.width = num();
    else if (key == "initial.carrier") c.initial.carrier = num();
    else if (key == "initial.exponent") c.initial.exponent = num();
    else if (key == "initial.seed") c.initial.seed = static_cast<unsigned>(parse_integer(key, value));
    else if (key == "stepper.dt") c.stepper.dt = num();
    else if (key == "stepper.filter_cutoff") c.stepper.filter_cutoff = num();
    else if (key == "stepper.filter_floor") c.stepper.filter_floor = num();
    else if (key == "stepper.gamma_t_tol") c.stepper.gamma_t_tol = num();
    else if (key == "stepper.gamma_t_max_iter") c.stepper.gamma_t_max_iter = integer();
    else if (key == "stepper.q_min") c.stepper.q_min = num();
    else if (key == "stepper.kappa_sup_max") c.stepper.kappa_sup_max = num();
    else if (key == "run.t_end") c.t_end = num();
    else if (key == "run.record_every") c.record_every = integer();
    else if (key == "run.snapshot_every") c.snapshot_every = integer();
    else if (key == "run.samples") c.samples = integer();
    else if (key == "window.radius") c.window.radius = num();
    else if (key == "window.taper") c.window.taper = num();
    else if (key == "diagnostics.energies") c.diagnostics.energies = flag();
    else if (key == "diagnostics.remainders") c.diagnostics.remainders = flag();
    else if (key == "diagnostics.residuals") c.diagnostics.residuals = flag();
    else if (key == "diagnostics.sobolev_orders") c.diagnostics.sobolev_orders = parse_int_list(key, value);
    else if (key == "diagnostics.energy_k") c.diagnostics.energy_k = integer();
    else if (key == "diagnostics.gain_k") c.diagnostics.gain_k = parse_int_list(key, value);
    else if (key == "output.root") c.output_root = value;
    else if (key == "output.label") c.label = value;
    else return false;
    return true;
}

std::vector<std::pair<std::string, std::string>> emit_pairs(const RunConfig& c) {
    return {
        {"mode", run_mode_name(c.mode)},
        {"grid.n", std::to_string(c.grid_n)},
        {"grid.period", fmt17(c.grid_period)},
        {"physics.inv_we", fmt17(c.phys.inv_we)},
        {"physics.g", fmt17(c.phys.g)},
        {"initial.kind", c.initial.kind},
        {"initial.gamma0", fmt17(c.initial.gamma0)},
        {"initial.amplitude", fmt17(c.initial.amplitude)},
        {"initial.mode", std::to_string(c.initial.mode)},
        {"initial.width", fmt17(c.initial.width)},
        {"initial.carrier", fmt17(c.initial.carrier)},
        {"initial.exponent", fmt17(c.initial.exponent)},
        {"initial.seed", std::to_string(c.initial.seed)},
        {"stepper.dt", fmt17(c.stepper.dt)},
        {"stepper.filter_cutoff", fmt17(c.stepper.filter_cutoff)},
        {"stepper.filter_floor", fmt17(c.stepper.filter_floor)},
        {"stepper.gamma_t_tol", fmt17(c.stepper.gamma_t_tol)},
        {"stepper.gamma_t_max_iter", std::to_string(c.stepper.gamma_t_max_iter)},
        {"stepper.q_min", fmt17(c.stepper.q_min)},
        {"stepper.kappa_sup_max", fmt17(c.stepper.kappa_sup_max)},
        {"run.t_end", fmt17(c.t_end)},
        {"run.record_every", std::to_string(c.record_every)},
        {"run.snapshot_every", std::to_string(c.snapshot_every)},
        {"run.samples", std::to_string(c.samples)},
        {"window.radius", fmt17(c.window.radius)},
        {"window.taper", fmt17(c.window.taper)},
        {"diagnostics.energies", c.diagnostics.energies ? "true" : "false"},
        {"diagnostics.remainders", c.diagnostics.remainders ? "true" : "false"},
        {"diagnostics.residuals", c.diagnostics.residuals ? "true" : "false"},
        {"diagnostics.sobolev_orders", join_ints(c.diagnostics.sobolev_orders)},
        {"diagnostics.energy_k", std::to_string(c.diagnostics.energy_k)},
        {"diagnostics.gain_k", join_ints(c.diagnostics.gain_k)},
        {"output.root", c.output_root},
        {"output.label", c.label},
    };
}

void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& m) { throw std::runtime_error("config: " + m); };
    if (c.grid_n < 8 || c.grid_n % 2 != 0)
        fail("grid.n must be even and at least 8 (got " + std::to_string(c.grid_n) + ")");
    if (!(c.grid_period > 0.0)) fail("grid.period must be positive");
    if (c.phys.inv_we < 0.0) fail("physics.inv_we must be nonnegative");
    if (c.phys.g < 0.0) fail("physics.g must be nonnegative");
    const bool kind_ok = c.initial.kind == "flat" || c.initial.kind == "single-mode" ||
                         c.initial.kind == "gaussian-packet" || c.initial.kind == "rough-tail";
    if (!kind_ok)
        fail("initial.kind must be one of flat, single-mode, gaussian-packet, rough-tail (got \"" +
             c.initial.kind + "\")");
    if (c.initial.kind == "single-mode" && (c.initial.mode < 1 || c.initial.mode >= c.grid_n / 2))
        fail("initial.mode must lie in [1, grid.n/2)");
    if (!(c.initial.width > 0.0)) fail("initial.width must be positive");
    if (c.initial.carrier < 0.0) fail("initial.carrier must be nonnegative");
    if (!(c.initial.exponent > 0.5)) fail("initial.exponent must exceed 1/2");
    if (!(c.stepper.dt > 0.0)) fail("stepper.dt must be positive (got " + fmt17(c.stepper.dt) + ")");
    if (!(c.stepper.filter_cutoff > 0.0 && c.stepper.filter_cutoff <= 1.0))
        fail("stepper.filter_cutoff must lie in (0, 1]");
    if (c.stepper.filter_floor < 0.0) fail("stepper.filter_floor must be nonnegative");
    if (!(c.stepper.gamma_t_tol > 0.0)) fail("stepper.gamma_t_tol must be positive");
    if (c.stepper.gamma_t_max_iter < 1) fail("stepper.gamma_t_max_iter must be at least 1");
    if (!(c.stepper.q_min > 0.0 && c.stepper.q_min < 1.0)) fail("stepper.q_min must lie in (0, 1)");
    if (!(c.stepper.kappa_sup_max > 0.0)) fail("stepper.kappa_sup_max must be positive");
    if (!(c.t_end > 0.0)) fail("run.t_end must be positive");
    if (c.record_every < 1) fail("run.record_every must be at least 1");
    if (c.snapshot_every < 0) fail("run.snapshot_every must be nonnegative");
    if (c.samples < 2) fail("run.samples must be at least 2");
    if (!(c.window.radius > 0.0) || !(c.window.taper > 0.0))
        fail("window.radius and window.taper must be positive");
    for (int o : c.diagnostics.sobolev_orders)
        if (o < 0) fail("diagnostics.sobolev_orders entries must be nonnegative");
    if (c.diagnostics.energy_k < 0) fail("diagnostics.energy_k must be nonnegative");
    for (int k : c.diagnostics.gain_k)
        if (k < 1) fail("diagnostics.gain_k entries must be at least 1");
    const bool linear = c.mode == RunMode::LinearCapillary || c.mode == RunMode::LinearGravity;
    if (c.mode == RunMode::Nonlinear && c.phys.g != 0.0)
        fail("nonlinear mode requires physics.g = 0");
    if (c.mode == RunMode::LinearCapillary && !(c.phys.inv_we > 0.0 && c.phys.g == 0.0))
        fail("linear-capillary mode requires physics.inv_we > 0 and physics.g = 0");
    if (c.mode == RunMode::LinearGravity && !(c.phys.inv_we == 0.0 && c.phys.g > 0.0))
        fail("linear-gravity mode requires physics.inv_we = 0 and physics.g > 0");
    if (linear && c.initial.kind == "flat") fail("linear modes require non-flat initial.kind");
    if ((linear || c.initial.kind == "rough-tail") &&
        !(c.window.radius + c.window.taper < 0.5 * c.grid_period))
        fail("window.radius + window.taper must stay below grid.period/2");
}

void write_row(std::ofstream& out, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

void write_snapshot(const std::string& path, const SurfaceState& st, const DerivedFields& d) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("run: cannot write " + path);
    out << "# t = " << fmt17(st.time) << '\n';
    out << "# alpha theta gamma kappa u p r_kappa r_u r_p\n";
    const auto& g = *st.theta.grid;
    for (int j = 0; j < g.size(); ++j) {
        out << fmt17(g.node(j)) << ' ' << fmt17(st.theta.v[j]) << ' ' << fmt17(st.gamma.v[j]) << ' '
            << fmt17(d.kappa.v[j]) << ' ' << fmt17(d.u.v[j]) << ' ' << fmt17(d.p.v[j]) << ' '
            << fmt17(d.r_kappa.v[j]) << ' ' << fmt17(d.r_u.v[j]) << ' ' << fmt17(d.r_p.v[j])
            << '\n';
    }
}

SurfaceState build_initial(const RunConfig& cfg, const GridPtr& g) {
    const InitialSpec& is = cfg.initial;
    if (is.kind == "flat") return make_flat(g, is.gamma0, cfg.phys);
    if (is.kind == "single-mode")
        return make_single_mode(g, is.amplitude, is.mode, is.gamma0, cfg.phys);
    if (is.kind == "gaussian-packet") {
        SurfaceState st = make_gaussian_bump(g, is.amplitude, is.width, cfg.phys);
        if (is.gamma0 != 0.0) {
            for (auto& v : st.gamma.v) v += is.gamma0;
        }
        return st;
    }
    // rough-tail: the generator profile becomes the tangent angle.
    SurfaceState st = make_flat(g, is.gamma0, cfg.phys);
    st.theta = is.amplitude * rough_tail_data(g, is.exponent, is.seed, cfg.window);
    return project_closure(std::move(st));
}

// M_k diagnostics of the scaling vector field (t/2) d_t + (alpha/3) d_alpha
// applied to theta and gamma; logged for k <= 1, no acceptance contract.
std::pair<double, double> scaling_norms(const SurfaceState& st, const DerivedFields& d) {
    const double m0 = l2_norm(st.theta) + l2_norm(st.gamma);
    const auto& g = *st.theta.grid;
    const RealField th_a = derivative(st.theta, 1);
    const RealField ga_a = derivative(st.gamma, 1);
    RealField g2th(st.theta.grid), g2ga(st.theta.grid);
    for (int j = 0; j < g.size(); ++j) {
        const double a3 = g.node(j) / 3.0;
        g2th.v[j] = 0.5 * st.time * d.theta_t.v[j] + a3 * th_a.v[j];
        g2ga.v[j] = 0.5 * st.time * d.gamma_t.v[j] + a3 * ga_a.v[j];
    }
    return {m0, m0 + l2_norm(g2th) + l2_norm(g2ga)};
}

struct DriftTracker {
    double first = std::numeric_limits<double>::quiet_NaN();
    double worst = 0.0;
    void observe(double v) {
        if (std::isnan(first)) first = v;
        const double denom = std::max(std::abs(first), 1e-30);
        worst = std::max(worst, std::abs(v - first) / denom);
    }
    bool seen() const { return !std::isnan(first); }
};

void run_nonlinear(const RunConfig& cfg, const std::string& dir, RunManifest& man) {
    const GridPtr g = make_grid(cfg.grid_n, cfg.grid_period);
    const StepperConfig& sc = cfg.stepper;
    const DiagnosticsSpec& dg = cfg.diagnostics;

    SurfaceState st;
    try {
        st = build_initial(cfg, g);
    } catch (const WindowError& e) {
        man.termination = "window-violation";
        man.abort_time = 0.0;
        man.abort_value = e.mass;
        man.abort_detail = e.what();
        return;
    }

    const long nsteps = std::max<long>(1, std::llround(cfg.t_end / sc.dt));
    const RealField gamma_initial = st.gamma;
    const double sigma_initial = st.sigma;

    std::vector<std::string> header = {"t", "sigma", "closure_residual", "chord_arc", "kappa_sup"};
    for (int o : dg.sobolev_orders) {
        header.push_back("kappa_h" + std::to_string(o));
        header.push_back("u_h" + std::to_string(o));
    }
    if (dg.energies)
        for (int j = 0; j <= dg.energy_k; ++j) header.push_back("E0_" + std::to_string(j));
    if (dg.remainders) {
        header.push_back("r_kappa_slope");
        header.push_back("r_u_slope");
        header.push_back("r_p_slope");
    }
    header.push_back("M0");
    header.push_back("M1");
    header.push_back("gamma_t_iters");

    std::ofstream csv(dir + "/timeseries.csv");
    if (!csv) throw std::runtime_error("run: cannot write " + dir + "/timeseries.csv");
    write_row(csv, header);

    const double slope_kmin = g->wavenumber(std::max(4, cfg.grid_n / 32));
    const double slope_kmax = g->wavenumber(cfg.grid_n / 4);

    double chord_min = std::numeric_limits<double>::infinity();
    double kappa_max = 0.0;
    DriftTracker energy_drift;
    long records = 0;
    int snap_index = 0;
    long last_record_step = -1;
    std::optional<DerivedFields> last_d;

    auto record = [&](const SurfaceState& s, long step_index) {
        DerivedFields d = derive(s, sc.gamma_t_tol, sc.gamma_t_max_iter);
        const double chord = chord_arc_ratio(d.z, s.sigma);
        const double ksup = sup_norm(d.kappa);
        chord_min = std::min(chord_min, chord);
        kappa_max = std::max(kappa_max, ksup);

        std::vector<std::string> cells = {fmt17(s.time), fmt17(s.sigma),
                                          fmt17(d.closure_residual), fmt17(chord), fmt17(ksup)};
        for (int o : dg.sobolev_orders) {
            cells.push_back(fmt17(sobolev_norm(d.kappa, o)));
            cells.push_back(fmt17(sobolev_norm(d.u, o)));
        }
        if (dg.energies) {
            for (int j = 0; j <= dg.energy_k; ++j) {
                const EnergyResult e = energy_E0k(s, j, d);
                if (j == dg.energy_k) energy_drift.observe(e.value);
                cells.push_back(fmt17(e.value));
            }
        }
        if (dg.remainders) {
            // Quiescent spectra (everything under the fit floor) have no tail
            // to measure; report slope 0 rather than refusing the record.
            auto slope_of = [&](const RealField& f) {
                try {
                    return spectral_tail_slope(f, slope_kmin, slope_kmax);
                } catch (const std::invalid_argument&) {
                    return 0.0;
                }
            };
            cells.push_back(fmt17(slope_of(d.r_kappa)));
            cells.push_back(fmt17(slope_of(d.r_u)));
            cells.push_back(fmt17(slope_of(d.r_p)));
        }
        const auto [m0, m1] = scaling_norms(s, d);
        cells.push_back(fmt17(m0));
        cells.push_back(fmt17(m1));
        cells.push_back(std::to_string(d.gamma_t_iterations));
        write_row(csv, cells);

        const bool snap_due =
            records == 0 || (cfg.snapshot_every > 0 && records % cfg.snapshot_every == 0);
        if (snap_due) {
            char name[32];
            std::snprintf(name, sizeof name, "snapshot_%04d.dat", snap_index++);
            write_snapshot(dir + "/" + name, s, d);
        }
        if (records == 0) {
            std::ofstream quad(dir + "/initial_data.dat");
            if (!quad) throw std::runtime_error("run: cannot write " + dir + "/initial_data.dat");
            quad << "# alpha kappa0 u0 kappa1 u1\n";
            const auto& g = *s.theta.grid;
            for (int j = 0; j < g.size(); ++j) {
                quad << fmt17(g.node(j)) << ' ' << fmt17(d.kappa.v[j]) << ' ' << fmt17(d.u.v[j])
                     << ' ' << fmt17(d.kappa_t.v[j]) << ' ' << fmt17(d.u_t.v[j]) << '\n';
            }
        }
        ++records;
        last_record_step = step_index;
        last_d = std::move(d);
    };

    SurfaceState prev1 = st, prev2 = st;
    long steps_done = 0;
    try {
        record(st, 0);
        for (long i = 1; i <= nsteps; ++i) {
            if (dg.residuals) {
                prev2 = prev1;
                prev1 = st;
            }
            st = step(st, sc);
            steps_done = i;
            if (i % cfg.record_every == 0 || i == nsteps) record(st, i);
        }
        man.termination = "completed";
    } catch (const SolverAbort& e) {
        man.termination = abort_reason_name(e.reason);
        man.abort_time = e.time;
        man.abort_value = e.diagnostic;
        man.abort_detail = e.what();
        // Post-step guards report time st.time + dt: that step did integrate.
        if (e.time > st.time + 0.5 * sc.dt) ++steps_done;
    } catch (const WindowError& e) {
        man.termination = "window-violation";
        man.abort_time = st.time;
        man.abort_value = e.mass;
        man.abort_detail = e.what();
    }

    // Final snapshot and invariant report from the last good state.
    std::optional<DerivedFields> fin;
    if (last_record_step == steps_done && last_d) {
        fin = std::move(last_d);
    } else {
        try {
            fin = derive(st, sc.gamma_t_tol, sc.gamma_t_max_iter);
        } catch (const std::exception&) {
        }
    }
    if (fin) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%04d.dat", snap_index++);
        write_snapshot(dir + "/" + name, st, *fin);
        man.invariants["closure_residual_final"] = fin->closure_residual;
    }
    man.invariants["steps_completed"] = static_cast<double>(steps_done);
    man.invariants["theta_sup_final"] = sup_norm(st.theta);
    man.invariants["gamma_drift_sup"] = sup_norm(st.gamma - gamma_initial);
    man.invariants["sigma_drift"] = std::abs(st.sigma - sigma_initial);
    man.invariants["chord_arc_min"] = chord_min;
    man.invariants["kappa_sup_max"] = kappa_max;
    if (energy_drift.seen()) man.invariants["energy_drift"] = energy_drift.worst;
    if (dg.residuals && man.termination == "completed" && nsteps >= 2) {
        const ResidualPair rp = residual_kappa_u(prev2, prev1, st);
        man.invariants["residual_kappa_l2"] = l2_norm(rp.kappa);
        man.invariants["residual_u_l2"] = l2_norm(rp.u);
        man.invariants["residual_second_l2"] = l2_norm(residual_second_order(prev2, prev1, st));
    }
}

RealField build_linear_data(const RunConfig& cfg, const GridPtr& g) {
    const InitialSpec& is = cfg.initial;
    if (is.kind == "single-mode") {
        const double k = is.mode * two_pi / cfg.grid_period;
        return sample_real(g, [&](double a) { return is.amplitude * std::cos(k * a); });
    }
    if (is.kind == "gaussian-packet")
        return gaussian_packet(g, is.amplitude, is.width, is.carrier);
    // rough-tail (validate_config excludes "flat" in linear modes)
    return rough_tail_data(g, is.exponent, is.seed, cfg.window);
}

void run_linear(const RunConfig& cfg, const std::string& dir, RunManifest& man) {
    const GridPtr g = make_grid(cfg.grid_n, cfg.grid_period);
    const DiagnosticsSpec& dg = cfg.diagnostics;
    const bool gravity = cfg.mode == RunMode::LinearGravity;

    RealField kappa0;
    try {
        kappa0 = build_linear_data(cfg, g);
    } catch (const WindowError& e) {
        man.termination = "window-violation";
        man.abort_time = 0.0;
        man.abort_value = e.mass;
        man.abort_detail = e.what();
        return;
    }
    const RealField kappa1(g);
    const LinearSolution sol =
        make_linear_solution(kappa0, kappa1, cfg.phys.inv_we, cfg.phys.g, cfg.window);
    const double reliable = max_reliable_time(sol, cfg.window);
    const double horizon = std::min(cfg.t_end, reliable);

    std::vector<std::string> header = {"t"};
    if (dg.energies) {
        header.push_back("energy_linear");
        header.push_back(gravity ? "energy_gamma_g" : "energy_gamma2");
    }
    for (int k : dg.gain_k) header.push_back("gain_" + std::to_string(k));
    header.push_back("boundary_mass");

    std::ofstream csv(dir + "/timeseries.csv");
    if (!csv) throw std::runtime_error("run: cannot write " + dir + "/timeseries.csv");
    write_row(csv, header);

    DriftTracker linear_drift, gamma_drift;
    double bmax = 0.0;
    man.termination = "completed";
    for (int j = 0; j < cfg.samples; ++j) {
        const double t = horizon * j / (cfg.samples - 1);
        std::vector<std::string> cells = {fmt17(t)};
        try {
            if (dg.energies) {
                const double el = energy_linear(sol, t);
                const double eg = gravity ? energy_gamma_g(sol, t) : energy_gamma2(sol, t);
                linear_drift.observe(el);
                gamma_drift.observe(eg);
                cells.push_back(fmt17(el));
                cells.push_back(fmt17(eg));
            }
            for (int k : dg.gain_k) cells.push_back(fmt17(weighted_gain_norm(sol, t, k)));
            const LinearFields lf = propagate(sol, t);
            const double bm = boundary_mass(lf.kappa, cfg.window);
            bmax = std::max(bmax, bm);
            cells.push_back(fmt17(bm));
        } catch (const WindowError& e) {
            man.termination = "window-violation";
            man.abort_time = t;
            man.abort_value = e.mass;
            man.abort_detail = e.what();
            break;
        }
        write_row(csv, cells);
    }
    man.invariants["t_requested"] = cfg.t_end;
    man.invariants["t_horizon"] = horizon;
    man.invariants["t_reliable"] = std::min(reliable, 9e99);
    man.invariants["boundary_mass_max"] = bmax;
    if (linear_drift.seen()) man.invariants["energy_linear_drift"] = linear_drift.worst;
    if (gamma_drift.seen())
        man.invariants[gravity ? "energy_gamma_g_drift" : "energy_gamma2_drift"] =
            gamma_drift.worst;
}

}  // namespace

std::string run_mode_name(RunMode m) {
    switch (m) {
        case RunMode::Nonlinear: return "nonlinear";
        case RunMode::LinearCapillary: return "linear-capillary";
        case RunMode::LinearGravity: return "linear-gravity";
        case RunMode::OperatorsTest: return "operators-test";
    }
    return "unknown";
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos)
            throw std::runtime_error(where + "expected key = value, got \"" + line + "\"");
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error(where + "empty key");
        if (!seen.insert(key).second)
            throw std::runtime_error(where + "duplicate key \"" + key + "\"");
        try {
            if (!apply_key(c, key, value))
                throw std::runtime_error("unknown key \"" + key + "\"");
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(where + e.what());
        }
    }
    validate_config(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string emit_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : emit_pairs(cfg)) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::string resolved_output_root(const std::string& configured) {
    const char* env = std::getenv("CAPWAVE_OUTPUT_ROOT");
    if (env && *env) return env;
    return configured;
}

void write_manifest(const RunManifest& m, const std::string& path) {
    njson j;
    j["version"] = m.version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["termination"] = m.termination;
    if (!m.termination.empty() && m.termination != "completed") {
        j["abort"] = {{"time", m.abort_time}, {"value", m.abort_value}, {"detail", m.abort_detail}};
    }
    j["directory"] = m.directory;
    njson cfg = njson::object();
    for (const auto& [k, v] : emit_pairs(m.config)) cfg[k] = v;
    j["config"] = cfg;
    njson inv = njson::object();
    for (const auto& [k, v] : m.invariants) inv[k] = v;
    j["invariants"] = inv;
    njson checks = njson::array();
    for (const auto& c : m.checks) {
        njson jc = {{"name", c.name},
                    {"measured", c.measured},
                    {"tolerance", c.tolerance},
                    {"pass", c.pass}};
        if (!std::isnan(c.expected)) jc["expected"] = c.expected;
        checks.push_back(jc);
    }
    j["checks"] = checks;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write " + path);
    out << j.dump(2) << '\n';
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    njson j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
    RunManifest m;
    try {
        m.version = j.value("version", std::string());
        m.started = j.value("started", std::string());
        m.finished = j.value("finished", std::string());
        m.termination = j.value("termination", std::string());
        if (j.contains("abort")) {
            const auto& a = j["abort"];
            m.abort_time = a.value("time", 0.0);
            m.abort_value = a.value("value", 0.0);
            m.abort_detail = a.value("detail", std::string());
        }
        m.directory = j.value("directory", std::string());
        if (j.contains("config"))
            for (const auto& [k, v] : j["config"].items())
                apply_key(m.config, k, v.get<std::string>());
        if (j.contains("invariants"))
            for (const auto& [k, v] : j["invariants"].items())
                m.invariants[k] = v.is_number() ? v.get<double>()
                                                : std::numeric_limits<double>::quiet_NaN();
        if (j.contains("checks"))
            for (const auto& jc : j["checks"]) {
                CheckResult c;
                c.name = jc.value("name", std::string());
                c.measured = jc.value("measured", 0.0);
                c.tolerance = jc.value("tolerance", 0.0);
                c.pass = jc.value("pass", false);
                c.expected = jc.value("expected", std::numeric_limits<double>::quiet_NaN());
                m.checks.push_back(std::move(c));
            }
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
    return m;
}

RunManifest run(const RunConfig& cfg) {
    validate_config(cfg);
    RunManifest man;
    man.config = cfg;
    man.version = kVersion;
    man.started = timestamp_now();
    const std::string root = resolved_output_root(cfg.output_root);
    const std::string label = cfg.label.empty() ? run_mode_name(cfg.mode) : cfg.label;
    const std::string dir = root + "/" + label;
    std::filesystem::create_directories(dir);
    man.directory = dir;
    switch (cfg.mode) {
        case RunMode::Nonlinear:
            run_nonlinear(cfg, dir, man);
            break;
        case RunMode::LinearCapillary:
        case RunMode::LinearGravity:
            run_linear(cfg, dir, man);
            break;
        case RunMode::OperatorsTest:
            man.checks = operators_test(cfg.initial.seed);
            man.termination = "completed";
            break;
    }
    man.finished = timestamp_now();
    write_manifest(man, dir + "/manifest.json");
    return man;
}

ReportSummary report(const std::vector<std::string>& manifest_paths) {
    if (manifest_paths.empty()) throw std::runtime_error("report: empty manifest list");
    std::string text;
    njson jruns = njson::array();
    int total = 0, passed = 0;
    bool completed_all = true;
    for (const auto& path : manifest_paths) {
        const RunManifest m = load_manifest(path);
        const bool completed = m.termination == "completed";
        completed_all = completed_all && completed;
        text += "run " + (m.directory.empty() ? path : m.directory) + " [" + m.termination + "]";
        if (!completed && !m.termination.empty())
            text += " t=" + fmtg(m.abort_time) + " value=" + fmtg(m.abort_value);
        text += '\n';
        const bool dispersion_table =
            !m.checks.empty() &&
            std::all_of(m.checks.begin(), m.checks.end(), [](const CheckResult& c) {
                return c.name.rfind("dispersion-k", 0) == 0;
            });
        if (dispersion_table) {
            text += "  k    measured       exact          rel-err\n";
            for (const auto& c : m.checks) {
                ++total;
                passed += c.pass ? 1 : 0;
                const double rel = std::abs(c.measured - c.expected) / std::abs(c.expected);
                char line[128];
                std::snprintf(line, sizeof line, "  %-4s %-14.10g %-14.10g %-9.3g %s\n",
                              c.name.substr(12).c_str(), c.measured, c.expected, rel,
                              c.pass ? "PASS" : "FAIL");
                text += line;
            }
        } else {
            for (const auto& c : m.checks) {
                ++total;
                passed += c.pass ? 1 : 0;
                text += std::string("  ") + (c.pass ? "PASS" : "FAIL") + "  " + c.name +
                        "  measured=" + fmtg(c.measured);
                if (!std::isnan(c.expected)) text += " expected=" + fmtg(c.expected);
                text += " tol=" + fmtg(c.tolerance) + '\n';
            }
        }
        njson jchecks = njson::array();
        for (const auto& c : m.checks) {
            njson jc = {{"name", c.name},
                        {"measured", c.measured},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass}};
            if (!std::isnan(c.expected)) jc["expected"] = c.expected;
            jchecks.push_back(jc);
        }
        jruns.push_back({{"directory", m.directory},
                         {"termination", m.termination},
                         {"checks", jchecks}});
    }
    const bool all_pass = completed_all && passed == total;
    text += "checks " + std::to_string(passed) + "/" + std::to_string(total) +
            " passed; runs " + (completed_all ? "all completed" : "with aborts") + "; result " +
            (all_pass ? "PASS" : "FAIL") + '\n';
    njson jsum = {{"all_pass", all_pass},
                  {"checks_total", total},
                  {"checks_passed", passed},
                  {"runs", jruns}};
    return {text, jsum.dump(2), all_pass};
}

std::vector<CheckResult> dispersion_campaign(int k_max, const std::string& output_root) {
    if (k_max < 1) throw std::runtime_error("dispersion: k_max must be at least 1");
    std::vector<CheckResult> out;
    const std::string root = resolved_output_root(output_root);
    for (int k = 1; k <= k_max; ++k) {
        const GridPtr g = make_grid(256, two_pi);
        const Physics phys;
        const double om = omega(k, phys.inv_we, phys.g);
        StepperConfig sc;
        sc.dt = 0.05;
        const long nsteps = std::max<long>(32, std::llround(two_pi / om / sc.dt));
        SurfaceState st = make_single_mode(g, 1e-5, k, 0.0, phys);

        auto zeta = [&](const SurfaceState& s) {
            const auto th = spectrum(s.theta);
            const auto ga = spectrum(s.gamma);
            return th[k] + cplx(0.0, k / (2.0 * om)) * ga[k];
        };
        std::vector<double> ts{0.0};
        std::vector<cplx> zs{zeta(st)};
        for (long i = 1; i <= nsteps; ++i) {
            st = step(st, sc);
            ts.push_back(st.time);
            zs.push_back(zeta(st));
        }
        std::vector<double> phase(zs.size());
        phase[0] = std::arg(zs[0]);
        for (size_t j = 1; j < zs.size(); ++j) {
            double d = std::arg(zs[j]) - std::arg(zs[j - 1]);
            while (d > pi) d -= two_pi;
            while (d < -pi) d += two_pi;
            phase[j] = phase[j - 1] + d;
        }
        const double measured = std::abs(fit_slope(ts, phase));
        const double rel = std::abs(measured - om) / om;
        CheckResult cr{"dispersion-k" + std::to_string(k), measured, 1e-3, rel <= 1e-3, om};
        out.push_back(cr);

        const std::string dir = root + "/dispersion-k" + std::to_string(k);
        std::filesystem::create_directories(dir);
        std::ofstream csv(dir + "/timeseries.csv");
        write_row(csv, {"t", "re_zeta", "im_zeta", "phase"});
        for (size_t j = 0; j < zs.size(); ++j)
            write_row(csv, {fmt17(ts[j]), fmt17(zs[j].real()), fmt17(zs[j].imag()),
                            fmt17(phase[j])});

        RunManifest man;
        man.config.mode = RunMode::Nonlinear;
        man.config.grid_n = 256;
        man.config.grid_period = two_pi;
        man.config.phys = phys;
        man.config.initial.kind = "single-mode";
        man.config.initial.amplitude = 1e-5;
        man.config.initial.mode = k;
        man.config.stepper = sc;
        man.config.t_end = nsteps * sc.dt;
        man.config.record_every = 1;
        man.config.output_root = output_root;
        man.config.label = "dispersion-k" + std::to_string(k);
        man.version = kVersion;
        man.started = timestamp_now();
        man.finished = man.started;
        man.termination = "completed";
        man.invariants = {{"omega_exact", om},
                          {"omega_measured", measured},
                          {"relative_error", rel},
                          {"steps", static_cast<double>(nsteps)}};
        man.checks = {cr};
        man.directory = dir;
        write_manifest(man, dir + "/manifest.json");
    }
    return out;
}

namespace {

struct TrigModes {
    std::vector<std::array<double, 3>> m;  // {wavenumber, amplitude, phase}
};

RealField trig_sum(const GridPtr& g, const TrigModes& tm) {
    return sample_real(g, [&](double a) {
        double v = 0.0;
        for (const auto& e : tm.m) v += e[1] * std::cos(e[0] * a + e[2]);
        return v;
    });
}

TrigModes draw_modes(std::mt19937& rng, int kmax, double total_amp) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TrigModes tm;
    double sum = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double a = 0.2 + 0.8 * unit(rng);
        tm.m.push_back({static_cast<double>(k), a, two_pi * unit(rng)});
        sum += a;
    }
    for (auto& e : tm.m) e[1] *= total_amp / sum;
    return tm;
}

double max_entry(const KernelMatrix& km) {
    double m = 0.0;
    for (const auto& e : km.a) m = std::max(m, std::abs(e));
    return m;
}

}  // namespace

std::vector<CheckResult> operators_test(unsigned seed) {
    std::vector<CheckResult> out;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    {  // Birkhoff-Rott vs the alternating-parity quadrature oracle.
        const GridPtr g = make_grid(512, two_pi);
        const TrigModes thm = draw_modes(rng, 4, 0.18);
        const TrigModes gam = draw_modes(rng, 4, 0.4);
        SurfaceState st;
        st.theta = trig_sum(g, thm);
        st.gamma = trig_sum(g, gam);
        for (auto& v : st.gamma.v) v += 1.0;
        st = project_closure(std::move(st));
        const ComplexField z = reconstruct_curve(st.theta, st.sigma);
        const ComplexField w1 = birkhoff_rott(z, st.gamma, st.sigma);
        const ComplexField w2 = pv_oracle(z, st.gamma);
        double m = 0.0;
        for (int j = 0; j < g->size(); ++j) m = std::max(m, std::abs(w1.v[j] - w2.v[j]));
        out.push_back({"br-pv-agreement", m, 1e-6, m <= 1e-6});
    }

    {  // Commutator: spectral route vs kernel quadrature route.
        const GridPtr g = make_grid(256, two_pi);
        const RealField a = trig_sum(g, draw_modes(rng, 8, 1.0));
        const RealField f = trig_sum(g, draw_modes(rng, 8, 1.0));
        const double m = sup_norm(commutator_hilbert(a, f, false) - commutator_hilbert(a, f, true));
        out.push_back({"commutator-route-agreement", m, 1e-9, m <= 1e-9});
    }

    {  // Closed-form commutator values on the unit modes.
        const GridPtr g = make_grid(256, two_pi);
        const RealField c = sample_real(g, [](double a) { return std::cos(a); });
        const RealField s = sample_real(g, [](double a) { return std::sin(a); });
        const RealField r1 = commutator_hilbert(c, c);  // constant -1/2
        const RealField r2 = commutator_hilbert(s, c);  // zero
        double m1 = 0.0;
        for (double v : r1.v) m1 = std::max(m1, std::abs(v + 0.5));
        const double m2 = sup_norm(r2);
        out.push_back({"commutator-identity-cos", m1, 1e-10, m1 <= 1e-10});
        out.push_back({"commutator-identity-sin", m2, 1e-10, m2 <= 1e-10});
    }

    {  // Divided-difference bound against an exactly known sup|a'|.
        const double c = 0.5 + 1.5 * unit(rng);
        const int k = 1 + static_cast<int>(unit(rng) * 6.0);
        const double ph = two_pi * unit(rng);
        double worst = -std::numeric_limits<double>::infinity();
        for (int n : {128, 256, 512}) {
            const GridPtr g = make_grid(n, two_pi);
            const RealField a =
                sample_real(g, [&](double x) { return c / k * std::sin(k * x + ph); });
            worst = std::max(worst, max_entry(divided_difference(a)) - c);
        }
        out.push_back({"divided-difference-bound", worst, 1e-12, worst <= 1e-12});
    }

    {  // Flat curve annihilates the remainder operators.
        const GridPtr g = make_grid(128, two_pi);
        const ComplexField z = sample_complex(g, [](double x) { return cplx(x, 0.0); });
        const RealField f = trig_sum(g, draw_modes(rng, 6, 1.0));
        double m = max_entry(remainder_kernel(z));
        m = std::max(m, sup_norm(apply_J(z, f)));
        m = std::max(m, sup_norm(m_field(z, f)));
        out.push_back({"flat-curve-annihilation", m, 1e-12, m <= 1e-12});
    }

    // Refinement trends: the commutator and smoothing-form bounds must not
    // grow as n doubles. Max-of-draws ratios, same draws at every n.
    {
        const int ndraws = 40;
        std::array<double, 3> cmax{}, smax{};
        const std::array<int, 3> ns{128, 256, 512};
        for (int d = 0; d < ndraws; ++d) {
            const TrigModes am = draw_modes(rng, 8, 1.0);
            const TrigModes fm = draw_modes(rng, 8, 1.0);
            const TrigModes sm = draw_modes(rng, 6, 1.0);
            std::vector<double> tail_phase(257);
            for (auto& p : tail_phase) p = two_pi * unit(rng);
            for (size_t i = 0; i < ns.size(); ++i) {
                const GridPtr g = make_grid(ns[i], two_pi);
                const RealField a = trig_sum(g, am);
                const RealField f = trig_sum(g, fm);
                const double cr =
                    l2_norm(commutator_hilbert(a, f)) / (sup_norm(derivative(a, 1)) * l2_norm(f));
                cmax[i] = std::max(cmax[i], cr);

                std::vector<cplx> half(ns[i] / 2 + 1, cplx{0.0, 0.0});
                for (int mode = 1; mode < ns[i] / 2; ++mode)
                    half[mode] = std::pow(mode, -0.6) *
                                 std::exp(cplx(0.0, tail_phase[mode]));
                RealField rough = field_from_spectrum(g, half);
                rough = (1.0 / l2_norm(rough)) * rough;
                const RealField asm_ = trig_sum(g, sm);
                const double sr =
                    std::abs(smoothing_form(asm_, rough)) / sup_norm(derivative(asm_, 2));
                smax[i] = std::max(smax[i], sr);
            }
        }
        const double ctrend = cmax[2] / cmax[0];
        const double strend = smax[2] / smax[0];
        out.push_back({"commutator-bound-trend", ctrend, 1.1, ctrend <= 1.1});
        out.push_back({"smoothing-bound-trend", strend, 1.1, strend <= 1.1});
    }

    return out;
}

std::vector<CheckResult> gain_campaign(int k) {
    if (k != 1 && k != 2) throw std::runtime_error("gain: k must be 1 or 2");
    std::vector<CheckResult> out;
    const double s = k + 3.6;
    const unsigned seed = kGainSeed[k];
    const WindowSpec window{10.0, 4.0};
    const double period = 20.0 * pi;
    const std::array<int, 3> ns{1024, 2048, 4096};
    std::array<double, 3> U{}, W{};
    for (size_t i = 0; i < ns.size(); ++i) {
        const GridPtr g = make_grid(ns[i], period);
        const RealField kappa0 = rough_tail_data(g, s, seed, window);
        const RealField kappa1(g);
        const LinearSolution sol = make_linear_solution(kappa0, kappa1, 2.0, 0.0, window);
        U[i] = l2_norm(lambda_pow(derivative(kappa0, k + 3), 0.5 * (k + 1)));
        W[i] = weighted_gain_norm(sol, 1.0, k);
    }
    for (size_t d = 0; d < 2; ++d) {
        const std::string pair = std::to_string(ns[d]) + "-" + std::to_string(ns[d + 1]);
        const double growth = U[d + 1] / U[d] - 1.0;
        out.push_back({"unweighted-growth-" + pair, growth, 0.20, growth >= 0.20});
        const double dw = std::abs(W[d + 1] / W[d] - 1.0);
        out.push_back({"weighted-cauchy-" + pair, dw, 1e-2, dw <= 1e-2});
    }
    if (k == 1) {
        // Gravity contrast: identical data under the gravity dispersion law
        // keeps the weighted norm refinement-divergent.
        std::array<double, 2> Wg{};
        for (size_t i = 0; i < 2; ++i) {
            const GridPtr g = make_grid(ns[i], period);
            const RealField kappa0 = rough_tail_data(g, s, seed, window);
            const RealField kappa1(g);
            const LinearSolution sol = make_linear_solution(kappa0, kappa1, 0.0, 1.0, window);
            Wg[i] = weighted_gain_norm(sol, 1.0, k);
        }
        const double dwg = std::abs(Wg[1] / Wg[0] - 1.0);
        out.push_back({"gravity-weighted-growth", dwg, 1e-2, dwg > 1e-2});
    }
    return out;
}

}  // namespace capwave
