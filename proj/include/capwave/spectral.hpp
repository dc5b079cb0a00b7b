#pragma once

// Periodic spectral toolkit: grids, real/complex fields on uniform nodes of
// [-P/2, P/2), Fourier multiplier operators, norms, and mode utilities.
// Single-threaded; FFTW plans live in the grid and are reused by all fields.

#include <complex>
#include <memory>
#include <vector>

namespace capwave {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

class SpectralGrid;
using GridPtr = std::shared_ptr<const SpectralGrid>;

// Uniform periodic grid of n (even) nodes alpha_j = -P/2 + j h, h = P/n.
// Owns FFTW plans and scratch buffers; not thread-safe by design.
class SpectralGrid {
public:
    SpectralGrid(int n, double period);
    ~SpectralGrid();
    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    int size() const { return n_; }
    double period() const { return period_; }
    double spacing() const { return period_ / n_; }
    double node(int j) const { return nodes_[j]; }
    const std::vector<double>& nodes() const { return nodes_; }

    // Wavenumber of half-spectrum slot m = 0 .. n/2.
    double wavenumber(int m) const { return dk_ * m; }
    // Signed wavenumber of full-spectrum slot m = 0 .. n-1 (FFT order).
    double wavenumber_signed(int m) const;
    int nyquist_index() const { return n_ / 2; }

    // Forward/backward transforms. Coefficients are DFT/n, so c[m] is the
    // Fourier coefficient of exp(i k_m alpha) relative to node 0 at -P/2.
    std::vector<cplx> to_spectrum(const std::vector<double>& f) const;
    std::vector<double> to_values(const std::vector<cplx>& c) const;
    std::vector<cplx> to_spectrum_c(const std::vector<cplx>& f) const;
    std::vector<cplx> to_values_c(const std::vector<cplx>& c) const;

    // Lazily built n*n matrix of the periodized kernel (pi/P) cot(pi (a_i - a_j)/P),
    // zero on the diagonal. Cached; used by the singular-integral module.
    const std::vector<double>& cot_matrix() const;

private:
    int n_;
    double period_;
    double dk_;
    std::vector<double> nodes_;
    mutable std::unique_ptr<std::vector<double>> cot_cache_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

GridPtr make_grid(int n, double period = two_pi);

struct RealField {
    GridPtr grid;
    std::vector<double> v;

    RealField() = default;
    explicit RealField(GridPtr g) : grid(std::move(g)), v(grid->size(), 0.0) {}
    RealField(GridPtr g, std::vector<double> vals) : grid(std::move(g)), v(std::move(vals)) {}

    int size() const { return static_cast<int>(v.size()); }
    double& operator[](int j) { return v[j]; }
    double operator[](int j) const { return v[j]; }
};

struct ComplexField {
    GridPtr grid;
    std::vector<cplx> v;

    ComplexField() = default;
    explicit ComplexField(GridPtr g) : grid(std::move(g)), v(grid->size(), cplx{0.0, 0.0}) {}
    ComplexField(GridPtr g, std::vector<cplx> vals) : grid(std::move(g)), v(std::move(vals)) {}

    int size() const { return static_cast<int>(v.size()); }
    cplx& operator[](int j) { return v[j]; }
    cplx operator[](int j) const { return v[j]; }
};

// Pointwise construction helpers.
template <class F>
RealField sample_real(const GridPtr& g, F&& f) {
    RealField out(g);
    for (int j = 0; j < g->size(); ++j) out.v[j] = f(g->node(j));
    return out;
}
template <class F>
ComplexField sample_complex(const GridPtr& g, F&& f) {
    ComplexField out(g);
    for (int j = 0; j < g->size(); ++j) out.v[j] = f(g->node(j));
    return out;
}

ComplexField to_complex(const RealField& f);
RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
ComplexField conj_field(const ComplexField& f);

// Elementwise arithmetic (fields must share a grid).
RealField operator+(const RealField& a, const RealField& b);
RealField operator-(const RealField& a, const RealField& b);
RealField operator*(const RealField& a, const RealField& b);
RealField operator*(double s, const RealField& a);
ComplexField operator+(const ComplexField& a, const ComplexField& b);
ComplexField operator-(const ComplexField& a, const ComplexField& b);
ComplexField operator*(const ComplexField& a, const ComplexField& b);
ComplexField operator*(cplx s, const ComplexField& a);
ComplexField operator*(const RealField& a, const ComplexField& b);

// Fourier multiplier operators. Odd-order derivatives, the Hilbert transform
// and the antiderivative zero the (real-field) Nyquist mode so that real in
// gives real out and d/dalpha is skew-adjoint on the grid.
RealField derivative(const RealField& f, int order = 1);
ComplexField derivative(const ComplexField& f, int order = 1);

// Periodic Hilbert transform, symbol -i sgn(k), mean killed.
RealField hilbert(const RealField& f);
ComplexField hilbert(const ComplexField& f);

// |k|^s multiplier. s < 0 requires zero mean (relative threshold 1e-13).
RealField lambda_pow(const RealField& f, double s);

// Zero-mean antiderivative: spectrum / (i k). Requires zero mean of f
// (relative threshold 1e-12); throws std::domain_error otherwise.
RealField antiderivative(const RealField& f);
ComplexField antiderivative(const ComplexField& f);

// Derivative of a curve z(alpha) = alpha + periodic part: the linear ramp is
// peeled off before transforming. order >= 1.
ComplexField curve_derivative(const ComplexField& z, int order = 1);

// Zero modes with |k| > cutoff_fraction * k_nyquist, then zero every mode whose
// magnitude is below krasny_floor times the largest retained magnitude.
RealField filter_field(const RealField& f, double cutoff_fraction, double krasny_floor);

double mean_value(const RealField& f);
cplx mean_value(const ComplexField& f);
double integral(const RealField& f);       // trapezoid = h * sum (exact for band-limited)
double l2_norm(const RealField& f);        // sqrt(integral f^2)
double l2_norm(const ComplexField& f);
double sup_norm(const RealField& f);
double sup_norm(const ComplexField& f);
double l2_inner(const RealField& a, const RealField& b);

// (sum_k (1 + k^2)^s |c_k|^2 * P)^(1/2) over the two-sided spectrum.
double sobolev_norm(const RealField& f, double s);

// Half spectrum (size n/2+1) of a real field, coefficients DFT/n.
std::vector<cplx> spectrum(const RealField& f);
RealField field_from_spectrum(const GridPtr& g, const std::vector<cplx>& half);

// Least-squares slope of log|f_hat| against log k over populated modes with
// kmin <= k <= kmax (modes below `floor` * max magnitude are skipped).
double spectral_tail_slope(const RealField& f, double kmin, double kmax, double floor = 1e-13);
// Slope of log(|f_hat|/|g_hat|) against log k over modes where both are populated.
double log_ratio_slope(const RealField& f, const RealField& g, double kmin, double kmax,
                       double floor = 1e-13);

// Simple least-squares line fit y ~ a + b x; returns b.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace capwave
