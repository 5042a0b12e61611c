// nelder_mead.hpp — Box-constrained downhill simplex

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sdfkit {

struct NelderMeadOptions {
    std::size_t max_evaluations{4000};
    double ftol_abs{1e-22};     // spread of simplex values
    double ftol_rel{1e-12};
    double xtol{1e-10};         // simplex diameter relative to the box width
    double initial_step{0.1};   // fraction of the box width
};

struct NelderMeadResult {
    std::vector<double> x;
    double value{0.0};
    std::size_t evaluations{0};
    bool converged{false};
};

using Objective = std::function<double(std::span<const double>)>;

// Standard reflection/expansion/contraction/shrink coefficients (1, 2, 1/2, 1/2);
// trial points are clamped into [lo, hi].
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, std::span<const double> lo,
                             std::span<const double> hi, const NelderMeadOptions& opts = {});

} // namespace sdfkit
