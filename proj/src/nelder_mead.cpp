// nelder_mead.cpp — Box-constrained downhill simplex

#include "sdfkit/nelder_mead.hpp"

#include "sdfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sdfkit {

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, std::span<const double> lo,
                             std::span<const double> hi, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0 || lo.size() != n || hi.size() != n) throw InputError("nelder_mead: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lo[i] <= hi[i])) throw InputError("nelder_mead: need lo <= hi");
    }
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    };
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    clamp(x0);
    std::vector<std::vector<double>> simplex{x0};
    for (std::size_t i = 0; i < n; ++i) {
        auto x = x0;
        const double step = opts.initial_step * std::max(hi[i] - lo[i], 1e-12);
        x[i] += (x[i] + step <= hi[i]) ? step : -step;
        clamp(x);
        simplex.push_back(std::move(x));
    }
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double w = std::max(hi[i] - lo[i], 1e-12);
                diameter = std::max(diameter, std::abs(simplex[k][i] - simplex[best][i]) / w);
            }
        }
        const double spread = fx[worst] - fx[best];
        if (spread <= opts.ftol_abs + opts.ftol_rel * std::abs(fx[best]) && diameter <= opts.xtol) {
            converged = true;
            break;
        }
        if (diameter <= 1e-15) {
            converged = spread <= opts.ftol_abs + opts.ftol_rel * std::abs(fx[best]);
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
        }
        auto along = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
            clamp(x);
            return x;
        };

        auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fx[best]) {
            auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fx[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fx[worst] = fr;
            }
            continue;
        }
        if (fr < fx[second]) {
            simplex[worst] = std::move(xr);
            fx[worst] = fr;
            continue;
        }
        const bool outside = fr < fx[worst];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fx[worst])) {
            simplex[worst] = std::move(xc);
            fx[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            for (std::size_t i = 0; i < n; ++i) simplex[k][i] = simplex[best][i] + 0.5 * (simplex[k][i] - simplex[best][i]);
            clamp(simplex[k]);
            fx[k] = eval(simplex[k]);
        }
    }
    const auto it = std::min_element(fx.begin(), fx.end());
    const auto b = static_cast<std::size_t>(it - fx.begin());
    return NelderMeadResult{simplex[b], fx[b], evals, converged};
}

} // namespace sdfkit
