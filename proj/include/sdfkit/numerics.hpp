// numerics.hpp — Quadrature, uniform-grid calculus, cosine sums and a Volterra solver
//
// Every routine here is a pure function of its arguments; nothing is cached
// between calls, so concurrent use from independent workers is safe.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sdfkit::numerics {

// t_i = i * dt for i = 0..n-1; the window length is t_f = n * dt.
class UniformTimeGrid {
public:
    UniformTimeGrid(double dt, std::size_t n_points);

    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return n_; }
    double time(std::size_t i) const noexcept { return static_cast<double>(i) * dt_; }
    double final_time() const noexcept { return static_cast<double>(n_) * dt_; }
    std::vector<double> times() const;

    bool operator==(const UniformTimeGrid&) const = default;

private:
    double dt_;
    std::size_t n_;
};

// omega_j = j * d_omega for j = 0..n-1.
class UniformFrequencyGrid {
public:
    UniformFrequencyGrid(double d_omega, std::size_t n_points);

    double d_omega() const noexcept { return dw_; }
    std::size_t size() const noexcept { return n_; }
    double frequency(std::size_t j) const noexcept { return static_cast<double>(j) * dw_; }
    double max_frequency() const noexcept { return static_cast<double>(n_ - 1) * dw_; }
    std::vector<double> frequencies() const;

    bool operator==(const UniformFrequencyGrid&) const = default;

private:
    double dw_;
    std::size_t n_;
};

// omega_max < pi / dt
bool aliasing_free(const UniformFrequencyGrid& freq, const UniformTimeGrid& time);

struct ComplexSeries {
    ComplexSeries(UniformTimeGrid grid, std::vector<std::complex<double>> values);

    UniformTimeGrid grid;
    std::vector<std::complex<double>> values;
};

// ----------------------------------------------------------------- quadrature

using RealFunction = std::function<double(double)>;

struct QuadratureResult {
    double value{0.0};
    double error{0.0};
    std::size_t evaluations{0};
    std::size_t panels{0};
};

struct QuadratureOptions {
    double abs_tol{1e-10};
    double rel_tol{1e-10};
    std::size_t max_subdivisions{50000};
    // Largest angular frequency of an oscillatory factor in the integrand.
    // Seeds the adaptive pass with roughly one panel per period.
    double oscillation{0.0};
};

struct SemiInfiniteOptions : QuadratureOptions {
    // Decay scale of the integrand; the finite part covers [0, split_factor * decay_scale]
    // and the remainder is mapped onto a unit interval with tail length decay_scale.
    double decay_scale{1.0};
    double split_factor{10.0};
};

// Globally adaptive 15-point Gauss-Kronrod integration over [a, b].
// Throws InputError on a non-finite sample, QuadratureError when the
// subdivision budget is exhausted before reaching max(abs_tol, rel_tol*|I|).
QuadratureResult integrate_interval(const RealFunction& f, double a, double b,
                                    const QuadratureOptions& opts = {});

// Integral over [0, inf): adaptive panels on [0, Omega_split] plus a rational
// tail map omega = Omega_split + L (1 - v) / v on v in (0, 1].
QuadratureResult integrate_semi_infinite(const RealFunction& f, const SemiInfiniteOptions& opts);

// Adaptive integration seeded with the given increasing breakpoints (kinks,
// table nodes); each piece is further split according to opts.oscillation.
QuadratureResult integrate_piecewise(const RealFunction& f, std::span<const double> breaks,
                                     const QuadratureOptions& opts = {});

double integrate_semi_infinite(const RealFunction& f, double abs_tol, double rel_tol);

// int_a^inf f via x = a + scale (1 - v) / v, for integrands without fast oscillation.
QuadratureResult integrate_tail(const RealFunction& f, double a, double scale, const QuadratureOptions& opts = {});

enum class Trig { cosine, sine };

// int_a^inf g(x) trig(omega x) dx for smooth, slowly varying g and omega > 0.
// Integrates between consecutive zeros of the trig factor and extrapolates the
// partial sums with Wynn's epsilon algorithm.
QuadratureResult integrate_fourier_tail(const RealFunction& g, double a, double omega, Trig kind,
                                        const QuadratureOptions& opts = {});

// ----------------------------------------------------------------- calculus

// Central three-point stencil inside, one-sided four-point second-order
// stencils at both ends (three points fall back to the single 3-point stencil).
std::vector<double> second_derivative(std::span<const double> values, double dt);

// dt * sum_n values[n] cos(nu t_n) for each requested nu.
std::vector<double> cosine_transform(std::span<const double> values, double dt,
                                     std::span<const double> frequencies);

// ----------------------------------------------------------------- Volterra

using ComplexKernel = std::function<std::complex<double>(double)>;

// dc/dt = -int_0^t K(t - tau) c(tau) dtau on a uniform grid.
// Product trapezoidal memory integral with one predictor-corrector pass per
// step. Throws NumericalError when |c| exceeds 1.05 * max(1, |c_init|).
ComplexSeries volterra_solve(const ComplexKernel& kernel, const UniformTimeGrid& grid,
                             std::complex<double> c_init);

// Same scheme with the kernel already sampled at lags 0, dt, ..., (n-1) dt.
ComplexSeries volterra_solve(std::span<const std::complex<double>> kernel_samples,
                             const UniformTimeGrid& grid, std::complex<double> c_init);

} // namespace sdfkit::numerics
