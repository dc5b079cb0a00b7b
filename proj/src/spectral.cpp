#include "capwave/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace capwave {

struct SpectralGrid::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* rbuf = nullptr;
    fftw_complex* hbuf = nullptr;   // half spectrum, n/2+1
    fftw_complex* zbuf1 = nullptr;  // full complex, n
    fftw_complex* zbuf2 = nullptr;
};

SpectralGrid::SpectralGrid(int n, double period) : n_(n), period_(period) {
    if (n < 8 || n % 2 != 0) throw std::invalid_argument("SpectralGrid: n must be even and >= 8");
    if (!(period > 0.0)) throw std::invalid_argument("SpectralGrid: period must be positive");
    dk_ = two_pi / period_;
    nodes_.resize(n_);
    const double h = period_ / n_;
    for (int j = 0; j < n_; ++j) nodes_[j] = -0.5 * period_ + j * h;

    plans_ = std::make_unique<Plans>();
    plans_->rbuf = fftw_alloc_real(n_);
    plans_->hbuf = fftw_alloc_complex(n_ / 2 + 1);
    plans_->zbuf1 = fftw_alloc_complex(n_);
    plans_->zbuf2 = fftw_alloc_complex(n_);
    // FFTW_ESTIMATE keeps planning deterministic and leaves buffers untouched.
    plans_->r2c = fftw_plan_dft_r2c_1d(n_, plans_->rbuf, plans_->hbuf, FFTW_ESTIMATE);
    plans_->c2r = fftw_plan_dft_c2r_1d(n_, plans_->hbuf, plans_->rbuf, FFTW_ESTIMATE);
    plans_->fwd = fftw_plan_dft_1d(n_, plans_->zbuf1, plans_->zbuf2, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_->bwd = fftw_plan_dft_1d(n_, plans_->zbuf1, plans_->zbuf2, FFTW_BACKWARD, FFTW_ESTIMATE);
}

SpectralGrid::~SpectralGrid() {
    if (!plans_) return;
    fftw_destroy_plan(plans_->r2c);
    fftw_destroy_plan(plans_->c2r);
    fftw_destroy_plan(plans_->fwd);
    fftw_destroy_plan(plans_->bwd);
    fftw_free(plans_->rbuf);
    fftw_free(plans_->hbuf);
    fftw_free(plans_->zbuf1);
    fftw_free(plans_->zbuf2);
}

double SpectralGrid::wavenumber_signed(int m) const {
    const int half = n_ / 2;
    const int k = (m <= half) ? m : m - n_;
    return dk_ * k;
}

std::vector<cplx> SpectralGrid::to_spectrum(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != n_) throw std::invalid_argument("to_spectrum: size mismatch");
    std::memcpy(plans_->rbuf, f.data(), n_ * sizeof(double));
    fftw_execute(plans_->r2c);
    std::vector<cplx> c(n_ / 2 + 1);
    const double scale = 1.0 / n_;
    for (int m = 0; m <= n_ / 2; ++m)
        c[m] = cplx(plans_->hbuf[m][0], plans_->hbuf[m][1]) * scale;
    return c;
}

std::vector<double> SpectralGrid::to_values(const std::vector<cplx>& c) const {
    if (static_cast<int>(c.size()) != n_ / 2 + 1)
        throw std::invalid_argument("to_values: size mismatch");
    for (int m = 0; m <= n_ / 2; ++m) {
        plans_->hbuf[m][0] = c[m].real();
        plans_->hbuf[m][1] = c[m].imag();
    }
    fftw_execute(plans_->c2r);
    return std::vector<double>(plans_->rbuf, plans_->rbuf + n_);
}

std::vector<cplx> SpectralGrid::to_spectrum_c(const std::vector<cplx>& f) const {
    if (static_cast<int>(f.size()) != n_) throw std::invalid_argument("to_spectrum_c: size mismatch");
    std::memcpy(plans_->zbuf1, f.data(), n_ * sizeof(fftw_complex));
    fftw_execute(plans_->fwd);
    std::vector<cplx> c(n_);
    const double scale = 1.0 / n_;
    for (int m = 0; m < n_; ++m)
        c[m] = cplx(plans_->zbuf2[m][0], plans_->zbuf2[m][1]) * scale;
    return c;
}

std::vector<cplx> SpectralGrid::to_values_c(const std::vector<cplx>& c) const {
    if (static_cast<int>(c.size()) != n_) throw std::invalid_argument("to_values_c: size mismatch");
    std::memcpy(plans_->zbuf1, c.data(), n_ * sizeof(fftw_complex));
    fftw_execute(plans_->bwd);
    return std::vector<cplx>(reinterpret_cast<cplx*>(plans_->zbuf2),
                             reinterpret_cast<cplx*>(plans_->zbuf2) + n_);
}

const std::vector<double>& SpectralGrid::cot_matrix() const {
    if (!cot_cache_) {
        auto mat = std::make_unique<std::vector<double>>(static_cast<size_t>(n_) * n_, 0.0);
        const double c = pi / period_;
        // Entry (i,j) = (pi/P) cot(pi (alpha_i - alpha_j)/P) depends only on (i-j) mod n.
        std::vector<double> row(n_, 0.0);
        for (int d = 1; d < n_; ++d) row[d] = c / std::tan(pi * d / static_cast<double>(n_));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (i != j) (*mat)[static_cast<size_t>(i) * n_ + j] = row[(i - j + n_) % n_];
        cot_cache_ = std::move(mat);
    }
    return *cot_cache_;
}

GridPtr make_grid(int n, double period) { return std::make_shared<const SpectralGrid>(n, period); }

namespace {
void check_same_grid(const GridPtr& a, const GridPtr& b, const char* op) {
    if (a.get() != b.get()) throw std::invalid_argument(std::string(op) + ": grid mismatch");
}
}  // namespace

ComplexField to_complex(const RealField& f) {
    ComplexField out(f.grid);
    for (int j = 0; j < f.size(); ++j) out.v[j] = f.v[j];
    return out;
}

RealField real_part(const ComplexField& f) {
    RealField out(f.grid);
    for (int j = 0; j < f.size(); ++j) out.v[j] = f.v[j].real();
    return out;
}

RealField imag_part(const ComplexField& f) {
    RealField out(f.grid);
    for (int j = 0; j < f.size(); ++j) out.v[j] = f.v[j].imag();
    return out;
}

ComplexField conj_field(const ComplexField& f) {
    ComplexField out(f.grid);
    for (int j = 0; j < f.size(); ++j) out.v[j] = std::conj(f.v[j]);
    return out;
}

RealField operator+(const RealField& a, const RealField& b) {
    check_same_grid(a.grid, b.grid, "operator+");
    RealField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] + b.v[j];
    return out;
}
RealField operator-(const RealField& a, const RealField& b) {
    check_same_grid(a.grid, b.grid, "operator-");
    RealField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] - b.v[j];
    return out;
}
RealField operator*(const RealField& a, const RealField& b) {
    check_same_grid(a.grid, b.grid, "operator*");
    RealField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] * b.v[j];
    return out;
}
RealField operator*(double s, const RealField& a) {
    RealField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = s * a.v[j];
    return out;
}
ComplexField operator+(const ComplexField& a, const ComplexField& b) {
    check_same_grid(a.grid, b.grid, "operator+");
    ComplexField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] + b.v[j];
    return out;
}
ComplexField operator-(const ComplexField& a, const ComplexField& b) {
    check_same_grid(a.grid, b.grid, "operator-");
    ComplexField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] - b.v[j];
    return out;
}
ComplexField operator*(const ComplexField& a, const ComplexField& b) {
    check_same_grid(a.grid, b.grid, "operator*");
    ComplexField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = a.v[j] * b.v[j];
    return out;
}
ComplexField operator*(cplx s, const ComplexField& a) {
    ComplexField out(a.grid);
    for (int j = 0; j < a.size(); ++j) out.v[j] = s * a.v[j];
    return out;
}
ComplexField operator*(const RealField& a, const ComplexField& b) {
    check_same_grid(a.grid, b.grid, "operator*");
    ComplexField out(b.grid);
    for (int j = 0; j < b.size(); ++j) out.v[j] = a.v[j] * b.v[j];
    return out;
}

RealField derivative(const RealField& f, int order) {
    if (order < 0) throw std::invalid_argument("derivative: order must be >= 0");
    if (order == 0) return f;
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    const int ny = g.nyquist_index();
    for (int m = 0; m <= ny; ++m) {
        const cplx ik(0.0, g.wavenumber(m));
        cplx mult = 1.0;
        for (int p = 0; p < order; ++p) mult *= ik;
        c[m] *= mult;
    }
    if (order % 2 == 1) c[ny] = 0.0;  // unpaired Nyquist mode has no odd derivative
    return RealField(f.grid, g.to_values(c));
}

ComplexField derivative(const ComplexField& f, int order) {
    if (order < 0) throw std::invalid_argument("derivative: order must be >= 0");
    if (order == 0) return f;
    const auto& g = *f.grid;
    auto c = g.to_spectrum_c(f.v);
    const int n = g.size();
    for (int m = 0; m < n; ++m) {
        const cplx ik(0.0, g.wavenumber_signed(m));
        cplx mult = 1.0;
        for (int p = 0; p < order; ++p) mult *= ik;
        c[m] *= mult;
    }
    if (order % 2 == 1) c[g.nyquist_index()] = 0.0;
    return ComplexField(f.grid, g.to_values_c(c));
}

RealField hilbert(const RealField& f) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    const int ny = g.nyquist_index();
    c[0] = 0.0;
    const cplx mi(0.0, -1.0);
    for (int m = 1; m < ny; ++m) c[m] *= mi;
    c[ny] = 0.0;
    return RealField(f.grid, g.to_values(c));
}

ComplexField hilbert(const ComplexField& f) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum_c(f.v);
    const int n = g.size();
    for (int m = 0; m < n; ++m) {
        const double k = g.wavenumber_signed(m);
        if (k > 0.0)
            c[m] *= cplx(0.0, -1.0);
        else if (k < 0.0)
            c[m] *= cplx(0.0, 1.0);
        else
            c[m] = 0.0;
    }
    c[g.nyquist_index()] = 0.0;
    return ComplexField(f.grid, g.to_values_c(c));
}

RealField lambda_pow(const RealField& f, double s) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    if (s < 0.0) {
        double peak = 0.0;
        for (const auto& cm : c) peak = std::max(peak, std::abs(cm));
        if (std::abs(c[0]) > 1e-13 * std::max(peak, 1e-300))
            throw std::domain_error("lambda_pow: negative power requires zero mean");
    }
    c[0] = 0.0;
    for (int m = 1; m <= g.nyquist_index(); ++m) c[m] *= std::pow(g.wavenumber(m), s);
    return RealField(f.grid, g.to_values(c));
}

namespace {
template <class Vec>
void antiderivative_check_mean(const cplx& mean_coeff, const Vec& c) {
    double l2 = 0.0;
    for (const auto& cm : c) l2 += std::norm(cm);
    if (std::abs(mean_coeff) > 1e-12 * std::max(std::sqrt(l2), 1e-300))
        throw std::domain_error("antiderivative: field must have zero mean");
}
}  // namespace

RealField antiderivative(const RealField& f) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    antiderivative_check_mean(c[0], c);
    c[0] = 0.0;
    const int ny = g.nyquist_index();
    for (int m = 1; m < ny; ++m) c[m] /= cplx(0.0, g.wavenumber(m));
    c[ny] = 0.0;
    return RealField(f.grid, g.to_values(c));
}

ComplexField antiderivative(const ComplexField& f) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum_c(f.v);
    antiderivative_check_mean(c[0], c);
    c[0] = 0.0;
    const int n = g.size();
    for (int m = 1; m < n; ++m) {
        if (m == g.nyquist_index()) {
            c[m] = 0.0;
            continue;
        }
        c[m] /= cplx(0.0, g.wavenumber_signed(m));
    }
    return ComplexField(f.grid, g.to_values_c(c));
}

ComplexField curve_derivative(const ComplexField& z, int order) {
    if (order < 1) throw std::invalid_argument("curve_derivative: order must be >= 1");
    ComplexField periodic(z.grid);
    for (int j = 0; j < z.size(); ++j) periodic.v[j] = z.v[j] - z.grid->node(j);
    ComplexField d = derivative(periodic, order);
    if (order == 1)
        for (auto& w : d.v) w += 1.0;
    return d;
}

RealField filter_field(const RealField& f, double cutoff_fraction, double krasny_floor) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    const int ny = g.nyquist_index();
    const double kcut = cutoff_fraction * g.wavenumber(ny);
    double peak = 0.0;
    for (int m = 0; m <= ny; ++m) {
        if (g.wavenumber(m) > kcut) c[m] = 0.0;
        peak = std::max(peak, std::abs(c[m]));
    }
    const double floor = krasny_floor * peak;
    for (int m = 0; m <= ny; ++m)
        if (std::abs(c[m]) < floor) c[m] = 0.0;
    return RealField(f.grid, g.to_values(c));
}

double mean_value(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s / f.size();
}

cplx mean_value(const ComplexField& f) {
    cplx s = 0.0;
    for (const auto& x : f.v) s += x;
    return s / static_cast<double>(f.size());
}

double integral(const RealField& f) { return mean_value(f) * f.grid->period(); }

double l2_norm(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * f.grid->spacing());
}

double l2_norm(const ComplexField& f) {
    double s = 0.0;
    for (const auto& x : f.v) s += std::norm(x);
    return std::sqrt(s * f.grid->spacing());
}

double sup_norm(const RealField& f) {
    double s = 0.0;
    for (double x : f.v) s = std::max(s, std::abs(x));
    return s;
}

double sup_norm(const ComplexField& f) {
    double s = 0.0;
    for (const auto& x : f.v) s = std::max(s, std::abs(x));
    return s;
}

double l2_inner(const RealField& a, const RealField& b) {
    check_same_grid(a.grid, b.grid, "l2_inner");
    double s = 0.0;
    for (int j = 0; j < a.size(); ++j) s += a.v[j] * b.v[j];
    return s * a.grid->spacing();
}

double sobolev_norm(const RealField& f, double s) {
    const auto& g = *f.grid;
    auto c = g.to_spectrum(f.v);
    const int ny = g.nyquist_index();
    double acc = std::norm(c[0]);
    for (int m = 1; m < ny; ++m) {
        const double k = g.wavenumber(m);
        acc += 2.0 * std::pow(1.0 + k * k, s) * std::norm(c[m]);
    }
    const double kn = g.wavenumber(ny);
    acc += std::pow(1.0 + kn * kn, s) * std::norm(c[ny]);
    return std::sqrt(acc * g.period());
}

std::vector<cplx> spectrum(const RealField& f) { return f.grid->to_spectrum(f.v); }

RealField field_from_spectrum(const GridPtr& g, const std::vector<cplx>& half) {
    return RealField(g, g->to_values(half));
}

namespace {
struct TailPoints {
    std::vector<double> x, y;
};
TailPoints tail_points(const RealField& f, double kmin, double kmax, double floor) {
    auto c = spectrum(f);
    double peak = 0.0;
    for (const auto& cm : c) peak = std::max(peak, std::abs(cm));
    TailPoints tp;
    const auto& g = *f.grid;
    for (int m = 1; m <= g.nyquist_index(); ++m) {
        const double k = g.wavenumber(m);
        if (k < kmin || k > kmax) continue;
        const double a = std::abs(c[m]);
        if (a <= floor * peak) continue;
        tp.x.push_back(std::log(k));
        tp.y.push_back(std::log(a));
    }
    return tp;
}
}  // namespace

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw std::invalid_argument("fit_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

double spectral_tail_slope(const RealField& f, double kmin, double kmax, double floor) {
    auto tp = tail_points(f, kmin, kmax, floor);
    return fit_slope(tp.x, tp.y);
}

double log_ratio_slope(const RealField& f, const RealField& g, double kmin, double kmax,
                       double floor) {
    check_same_grid(f.grid, g.grid, "log_ratio_slope");
    auto cf = spectrum(f);
    auto cg = spectrum(g);
    double pf = 0.0, pg = 0.0;
    for (const auto& c : cf) pf = std::max(pf, std::abs(c));
    for (const auto& c : cg) pg = std::max(pg, std::abs(c));
    std::vector<double> x, y;
    const auto& gr = *f.grid;
    for (int m = 1; m <= gr.nyquist_index(); ++m) {
        const double k = gr.wavenumber(m);
        if (k < kmin || k > kmax) continue;
        const double af = std::abs(cf[m]);
        const double ag = std::abs(cg[m]);
        if (af <= floor * pf || ag <= floor * pg) continue;
        x.push_back(std::log(k));
        y.push_back(std::log(af / ag));
    }
    return fit_slope(x, y);
}

}  // namespace capwave
