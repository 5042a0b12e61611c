// numerics.cpp — Quadrature, uniform-grid calculus, cosine sums and a Volterra solver

#include "sdfkit/numerics.hpp"

#include "sdfkit/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sdfkit::numerics {

UniformTimeGrid::UniformTimeGrid(double dt, std::size_t n_points) : dt_(dt), n_(n_points) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InputError("UniformTimeGrid: dt must be positive and finite");
    }
    if (n_points < 3) {
        throw InputError("UniformTimeGrid: at least 3 points are required");
    }
}

std::vector<double> UniformTimeGrid::times() const {
    std::vector<double> t(n_);
    for (std::size_t i = 0; i < n_; ++i) t[i] = time(i);
    return t;
}

UniformFrequencyGrid::UniformFrequencyGrid(double d_omega, std::size_t n_points)
    : dw_(d_omega), n_(n_points) {
    if (!(d_omega > 0.0) || !std::isfinite(d_omega)) {
        throw InputError("UniformFrequencyGrid: d_omega must be positive and finite");
    }
    if (n_points < 2) {
        throw InputError("UniformFrequencyGrid: at least 2 points are required");
    }
}

std::vector<double> UniformFrequencyGrid::frequencies() const {
    std::vector<double> w(n_);
    for (std::size_t j = 0; j < n_; ++j) w[j] = frequency(j);
    return w;
}

bool aliasing_free(const UniformFrequencyGrid& freq, const UniformTimeGrid& time) {
    return freq.max_frequency() < std::numbers::pi / time.dt();
}

ComplexSeries::ComplexSeries(UniformTimeGrid g, std::vector<std::complex<double>> v)
    : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) {
        throw InputError("ComplexSeries: values length must equal grid size");
    }
}

// ------------------------------------------------------------ Gauss-Kronrod

namespace {

constexpr std::array<double, 8> kXgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kWgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
};

double checked(const RealFunction& f, double x) {
    const double y = f(x);
    if (!std::isfinite(y)) {
        throw InputError("quadrature: integrand returned a non-finite value at x = " +
                         std::to_string(x));
    }
    return y;
}

Panel gauss_kronrod_15(const RealFunction& f, double a, double b) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);
    const double dhlgth = std::abs(hlgth);

    std::array<double, 7> fv1{};
    std::array<double, 7> fv2{};
    const double fc = checked(f, centr);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::abs(resk);
    for (int j = 0; j < 3; ++j) {
        const int jtw = 2 * j + 1;
        const double absc = hlgth * kXgk[jtw];
        const double f1 = checked(f, centr - absc);
        const double f2 = checked(f, centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += kWg[j] * (f1 + f2);
        resk += kWgk[jtw] * (f1 + f2);
        resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 4; ++j) {
        const int jtwm1 = 2 * j;
        const double absc = hlgth * kXgk[jtwm1];
        const double f1 = checked(f, centr - absc);
        const double f2 = checked(f, centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += kWgk[jtwm1] * (f1 + f2);
        resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
    }
    const double reskh = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j) {
        resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
    }
    resabs *= dhlgth;
    resasc *= dhlgth;
    double err = std::abs((resk - resg) * hlgth);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
        err = std::max(50.0 * eps * resabs, err);
    }
    return Panel{a, b, resk * hlgth, err};
}

bool worse(const Panel& lhs, const Panel& rhs) { return lhs.error < rhs.error; }

// Global adaptive driver over the given breakpoints: repeatedly bisects the panel
// with the largest error estimate until the summed estimate meets the tolerance.
QuadratureResult adaptive(const RealFunction& f, std::span<const double> breaks,
                          const QuadratureOptions& opts) {
    if (!(opts.abs_tol > 0.0) || !(opts.rel_tol > 0.0)) {
        throw InputError("quadrature: tolerances must be positive");
    }
    std::vector<Panel> heap;
    heap.reserve(breaks.size() + 64);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        heap.push_back(gauss_kronrod_15(f, breaks[i], breaks[i + 1]));
    }
    std::make_heap(heap.begin(), heap.end(), worse);

    auto totals = [&heap]() {
        double v = 0.0;
        double e = 0.0;
        for (const auto& p : heap) {
            v += p.value;
            e += p.error;
        }
        return std::pair{v, e};
    };

    auto [value, error] = totals();
    std::size_t iterations = 0;
    while (true) {
        if (error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) {
            std::tie(value, error) = totals();
            if (error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) break;
        }
        if (heap.size() >= opts.max_subdivisions) {
            std::tie(value, error) = totals();
            throw QuadratureError("quadrature: subdivision limit reached (estimate " +
                                      std::to_string(value) + ", error bound " +
                                      std::to_string(error) + ")",
                                  value, error);
        }
        std::pop_heap(heap.begin(), heap.end(), worse);
        const Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            std::tie(value, error) = totals();
            throw QuadratureError("quadrature: panel width reached machine resolution", value,
                                  error);
        }
        const Panel left = gauss_kronrod_15(f, worst.a, mid);
        const Panel right = gauss_kronrod_15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), worse);
        if (++iterations % 128 == 0) std::tie(value, error) = totals();
    }
    return QuadratureResult{value, error, heap.size() * 15, heap.size()};
}

std::size_t oscillation_panels(double oscillation, double length, std::size_t cap) {
    if (!(oscillation > 0.0)) return 1;
    const double periods = std::abs(oscillation) * length / (2.0 * std::numbers::pi);
    const double n = std::ceil(periods);
    return static_cast<std::size_t>(std::clamp(n, 1.0, static_cast<double>(std::max<std::size_t>(cap, 1))));
}

} // namespace

QuadratureResult integrate_interval(const RealFunction& f, double a, double b,
                                    const QuadratureOptions& opts) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw InputError("integrate_interval: bounds must be finite");
    }
    if (a == b) return {};
    const std::size_t n = oscillation_panels(opts.oscillation, std::abs(b - a), opts.max_subdivisions / 4);
    std::vector<double> breaks(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        breaks[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    }
    breaks.back() = b;
    return adaptive(f, breaks, opts);
}

QuadratureResult integrate_semi_infinite(const RealFunction& f, const SemiInfiniteOptions& opts) {
    if (!(opts.decay_scale > 0.0) || !(opts.split_factor > 0.0)) {
        throw InputError("integrate_semi_infinite: decay scale and split factor must be positive");
    }
    const double split = opts.split_factor * opts.decay_scale;
    const double tail = opts.decay_scale;

    // u in [0, 1] covers [0, split]; u in (1, 2) is the tail with v = 2 - u.
    const RealFunction mapped = [&f, split, tail](double u) {
        if (u <= 1.0) return split * f(split * u);
        const double v = 2.0 - u;
        const double w = split + tail * (1.0 - v) / v;
        const double y = f(w);
        if (y == 0.0) return 0.0;
        return y * tail / (v * v);
    };

    const std::size_t n = oscillation_panels(opts.oscillation, split, opts.max_subdivisions / 4);
    std::vector<double> breaks;
    breaks.reserve(n + 4);
    for (std::size_t i = 0; i <= n; ++i) breaks.push_back(static_cast<double>(i) / static_cast<double>(n));
    breaks.back() = 1.0;
    breaks.push_back(1.5);
    breaks.push_back(2.0);
    return adaptive(mapped, breaks, opts);
}

QuadratureResult integrate_piecewise(const RealFunction& f, std::span<const double> breaks,
                                     const QuadratureOptions& opts) {
    if (breaks.size() < 2) return {};
    std::vector<double> seeded;
    seeded.reserve(breaks.size());
    seeded.push_back(breaks.front());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = breaks[i + 1];
        if (!(b > a)) throw InputError("integrate_piecewise: breakpoints must be increasing");
        const std::size_t n = oscillation_panels(opts.oscillation, b - a, opts.max_subdivisions / 4);
        for (std::size_t k = 1; k < n; ++k) {
            seeded.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
        }
        seeded.push_back(b);
    }
    return adaptive(f, seeded, opts);
}

double integrate_semi_infinite(const RealFunction& f, double abs_tol, double rel_tol) {
    SemiInfiniteOptions opts;
    opts.abs_tol = abs_tol;
    opts.rel_tol = rel_tol;
    return integrate_semi_infinite(f, opts).value;
}

QuadratureResult integrate_tail(const RealFunction& f, double a, double scale, const QuadratureOptions& opts) {
    if (!std::isfinite(a) || !(scale > 0.0)) throw InputError("integrate_tail: need finite start and positive scale");
    const RealFunction mapped = [&f, a, scale](double v) {
        const double y = f(a + scale * (1.0 - v) / v);
        if (y == 0.0) return 0.0;
        return y * scale / (v * v);
    };
    const double breaks[] = {0.0, 0.25, 0.5, 1.0};
    QuadratureOptions o = opts;
    o.oscillation = 0.0;
    return integrate_piecewise(mapped, breaks, o);
}

namespace {

// Last even-column entry of Wynn's epsilon table built from the partial sums.
double wynn_epsilon(std::span<const double> sums) {
    std::vector<double> prev(sums.size() + 1, 0.0);
    std::vector<double> cur(sums.begin(), sums.end());
    double best = sums.back();
    for (std::size_t k = 1; cur.size() > 1; ++k) {
        std::vector<double> next(cur.size() - 1);
        for (std::size_t n = 0; n + 1 < cur.size(); ++n) {
            const double d = cur[n + 1] - cur[n];
            if (d == 0.0) return k % 2 == 1 ? cur[n + 1] : best;
            next[n] = prev[n + 1] + 1.0 / d;
        }
        if (k % 2 == 0) best = next.back();
        prev = std::move(cur);
        cur = std::move(next);
    }
    return best;
}

} // namespace

QuadratureResult integrate_fourier_tail(const RealFunction& g, double a, double omega, Trig kind,
                                        const QuadratureOptions& opts) {
    if (!std::isfinite(a) || !(omega > 0.0) || !std::isfinite(omega)) {
        throw InputError("integrate_fourier_tail: need finite start and positive frequency");
    }
    const double phase = kind == Trig::cosine ? 0.5 * std::numbers::pi : 0.0;
    const RealFunction f = [&g, omega, kind](double x) {
        return g(x) * (kind == Trig::cosine ? std::cos(omega * x) : std::sin(omega * x));
    };
    QuadratureOptions piece = opts;
    piece.oscillation = 0.0;
    piece.abs_tol = 0.1 * opts.abs_tol;

    constexpr std::size_t max_pieces = 2000;
    constexpr std::size_t window = 24;
    double k = std::floor((omega * a - phase) / std::numbers::pi) + 1.0;
    double lo = a;
    double sum = 0.0;
    double piece_error = 0.0;
    std::size_t evaluations = 0;
    std::vector<double> sums;
    std::vector<double> estimates;
    for (std::size_t i = 0; i < max_pieces; ++i) {
        const double hi = (phase + k * std::numbers::pi) / omega;
        k += 1.0;
        const auto r = integrate_interval(f, lo, hi, piece);
        lo = hi;
        sum += r.value;
        piece_error += r.error;
        evaluations += r.evaluations;
        sums.push_back(sum);
        if (sums.size() < 4) continue;
        const std::size_t m = std::min(sums.size(), window);
        estimates.push_back(wynn_epsilon(std::span<const double>(sums).last(m)));
        const std::size_t e = estimates.size();
        if (e < 3) continue;
        const double d1 = std::abs(estimates[e - 1] - estimates[e - 2]);
        const double d2 = std::abs(estimates[e - 2] - estimates[e - 3]);
        const double tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(estimates[e - 1]));
        if (d1 <= tol && d2 <= tol) {
            return QuadratureResult{estimates[e - 1], std::max(d1, d2) + piece_error, evaluations, i + 1};
        }
    }
    const double est = estimates.empty() ? sum : estimates.back();
    throw QuadratureError("integrate_fourier_tail: extrapolation did not settle", est, piece_error);
}

// ------------------------------------------------------------------ calculus

std::vector<double> second_derivative(std::span<const double> v, double dt) {
    if (v.size() < 3) throw InputError("second_derivative: need at least 3 samples");
    if (!(dt > 0.0)) throw InputError("second_derivative: dt must be positive");
    const std::size_t n = v.size();
    const double inv = 1.0 / (dt * dt);
    std::vector<double> out(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv;
    }
    if (n == 3) {
        out[0] = out[1];
        out[2] = out[1];
        return out;
    }
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv;
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * inv;
    return out;
}

std::vector<double> cosine_transform(std::span<const double> values, double dt,
                                     std::span<const double> frequencies) {
    if (!(dt > 0.0)) throw InputError("cosine_transform: dt must be positive");
    std::vector<double> out(frequencies.size(), 0.0);
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        const double nu = frequencies[k];
        if (!(nu >= 0.0)) throw InputError("cosine_transform: frequencies must be >= 0");
        double acc = 0.0;
        for (std::size_t n = 0; n < values.size(); ++n) {
            acc += values[n] * std::cos(nu * static_cast<double>(n) * dt);
        }
        out[k] = dt * acc;
    }
    return out;
}

// ------------------------------------------------------------------ Volterra

ComplexSeries volterra_solve(const ComplexKernel& kernel, const UniformTimeGrid& grid,
                             std::complex<double> c_init) {
    std::vector<std::complex<double>> samples(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        samples[j] = kernel(grid.time(j));
        if (!std::isfinite(samples[j].real()) || !std::isfinite(samples[j].imag())) {
            throw InputError("volterra_solve: kernel is not finite at t = " +
                             std::to_string(grid.time(j)));
        }
    }
    return volterra_solve(samples, grid, c_init);
}

ComplexSeries volterra_solve(std::span<const std::complex<double>> K, const UniformTimeGrid& grid,
                             std::complex<double> c_init) {
    using cd = std::complex<double>;
    const std::size_t n = grid.size();
    if (K.size() != n) throw InputError("volterra_solve: kernel samples must match the grid");
    const double dt = grid.dt();
    const double limit = 1.05 * std::max(1.0, std::abs(c_init));

    std::vector<cd> c(n);
    c[0] = c_init;
    cd deriv = 0.0; // memory integral vanishes at t = 0
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // Trapezoid weights: 1/2 at tau = 0 and tau = t_{i+1}, 1 in between.
        cd history = 0.5 * K[i + 1] * c[0];
        for (std::size_t j = 1; j <= i; ++j) history += K[i + 1 - j] * c[j];

        const cd predictor = c[i] + dt * deriv;
        const cd deriv_pred = -dt * (history + 0.5 * K[0] * predictor);
        c[i + 1] = c[i] + 0.5 * dt * (deriv + deriv_pred);
        deriv = -dt * (history + 0.5 * K[0] * c[i + 1]);

        if (!(std::abs(c[i + 1]) <= limit)) {
            throw NumericalError("volterra_solve: |c| = " + std::to_string(std::abs(c[i + 1])) +
                                 " at t = " + std::to_string(grid.time(i + 1)) +
                                 " exceeds the stability limit; reduce dt");
        }
    }
    return ComplexSeries(grid, std::move(c));
}

} // namespace sdfkit::numerics
