#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capwave/dynamics.hpp"
#include "capwave/linear.hpp"

namespace capwave {

// Orchestration: configuration parsing, run execution, persistence (JSON
// manifest + CSV time series + columnar snapshots), and the diagnostic
// campaigns behind the CLI subcommands.

enum class RunMode { Nonlinear, LinearCapillary, LinearGravity, OperatorsTest };

std::string run_mode_name(RunMode m);

struct InitialSpec {
    std::string kind = "flat";  // flat | single-mode | gaussian-packet | rough-tail
    double gamma0 = 0.0;
    double amplitude = 1e-3;
    int mode = 1;              // single-mode wavenumber index
    double width = 2.0;        // gaussian-packet envelope width
    double carrier = 0.0;      // gaussian-packet carrier wavenumber (0 = even packet)
    double exponent = 4.6;     // rough-tail Sobolev index s
    unsigned seed = 1;
};

struct DiagnosticsSpec {
    bool energies = true;
    bool remainders = true;
    bool residuals = false;
    std::vector<int> sobolev_orders = {2};
    int energy_k = 2;               // E0_0 .. E0_{energy_k} columns
    std::vector<int> gain_k = {1};  // weighted gain norms in linear modes
};

struct RunConfig {
    RunMode mode = RunMode::Nonlinear;
    int grid_n = 256;
    double grid_period = two_pi;
    Physics phys;
    InitialSpec initial;
    StepperConfig stepper;
    double t_end = 0.1;
    int record_every = 10;    // steps between time-series records (nonlinear)
    int snapshot_every = 0;   // records between snapshots; 0 = initial + final only
    int samples = 64;         // time samples for linear modes
    WindowSpec window;
    DiagnosticsSpec diagnostics;
    std::string output_root = "runs";
    std::string label;        // run directory name; empty = derived from mode
};

// Flat dotted-key configuration format, one `key = value` per line, '#'
// comments. Unknown keys are errors naming the key and line; values violating
// the schema are errors naming the field.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);
std::string emit_config(const RunConfig& cfg);

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double expected = std::numeric_limits<double>::quiet_NaN();  // NaN = bound-style check
};

struct RunManifest {
    RunConfig config;
    std::string version;
    std::string started, finished;  // wall-clock timestamps
    std::string termination;        // completed | chord-arc-abort | gamma-t-nonconvergence |
                                    // window-violation | nan-abort
    double abort_time = 0.0;
    double abort_value = 0.0;       // offending diagnostic for aborts
    std::string abort_detail;
    std::map<std::string, double> invariants;  // final invariant report
    std::vector<CheckResult> checks;
    std::string directory;          // run directory actually used
};

// Executes the configured mode, writing manifest.json, timeseries.csv and
// snapshot files under <output_root>/<label>/. The CAPWAVE_OUTPUT_ROOT
// environment variable overrides output_root. CSV output is deterministic
// (bitwise) for identical config + seed.
RunManifest run(const RunConfig& cfg);

RunManifest load_manifest(const std::string& path);
void write_manifest(const RunManifest& m, const std::string& path);

// Aggregates manifests into a pass/fail table (text to stdout-style string,
// JSON alongside); dispersion-campaign manifests get the (k, measured, exact,
// rel err) table. Throws on missing or corrupt inputs or an empty list.
struct ReportSummary {
    std::string text;
    std::string json;
    bool all_pass = false;
};
ReportSummary report(const std::vector<std::string>& manifest_paths);

// Dispersion campaign: single-mode nonlinear runs, modes 1..k_max, amplitude
// 1e-5, n = 256; frequency measured from the phase of the per-mode linear
// eigenvector combination theta_hat_k + (i|k|/(2 omega)) gamma_hat_k, fitted
// by least squares on the unwrapped phase. Each check passes at relative
// error <= 1e-3.
std::vector<CheckResult> dispersion_campaign(int k_max, const std::string& output_root);

// Operator oracle battery at one seed: Birkhoff-Rott vs alternating-parity
// quadrature, commutator spectral-vs-kernel routes, the two closed-form
// commutator identities, and the operator-bound refinement stability checks
// at n in {128, 256, 512}.
std::vector<CheckResult> operators_test(unsigned seed);

// Gain dichotomy protocol for k in {1, 2}: rough-tail refinement triplet
// n in {1024, 2048, 4096} on the 20 pi box, unweighted growth vs weighted
// t = 1 Cauchy change, plus the gravity contrast leg.
std::vector<CheckResult> gain_campaign(int k);

std::string resolved_output_root(const std::string& configured);

}  // namespace capwave
