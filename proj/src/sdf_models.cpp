// sdf_models.cpp — Spectral density families, thermal factors and SDF integrals

#include "sdfkit/sdf_models.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sdfkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double ohmic_form(double alpha, double s, double wc, double w) {
    return 2.0 * alpha * std::pow(wc, 1.0 - s) * std::pow(w, s) * std::exp(-w / wc);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
}

bool positive(double x) { return x > 0.0 && std::isfinite(x); }
bool nonnegative(double x) { return x >= 0.0 && std::isfinite(x); }

} // namespace

double StructuredSiV::bulk(double w) const { return ohmic_form(alpha, s, omega_c, w); }

double StructuredSiV::local_mode(double w) const {
    const double hw = 0.5 * Gamma;
    const double dressing = w / omega_loc + 1.0;
    return J0 * std::pow(w, s) / (dressing * dressing) * hw / ((w - omega_loc) * (w - omega_loc) + hw * hw);
}

double StructuredSiV::gaussian_band(double w) const {
    const double x = w - omega_0g;
    return J1 * std::pow(w, s) * std::exp(-x * x / (2.0 * sigma * sigma));
}

void validate(const SpectralDensity& J) {
    std::visit(overloaded{
                   [](const Ohmic& o) {
                       require(positive(o.alpha) && positive(o.s) && positive(o.omega_c),
                               "Ohmic SDF: alpha, s and omega_c must be positive");
                   },
                   [](const Lorentzian& l) {
                       require(positive(l.gamma0) && positive(l.lambda) && nonnegative(l.omega_b),
                               "Lorentzian SDF: gamma0, lambda > 0 and omega_b >= 0 required");
                   },
                   [](const StructuredSiV& p) {
                       require(positive(p.alpha) && positive(p.s) && positive(p.omega_c) &&
                                   positive(p.J0) && positive(p.Gamma) && positive(p.J1) &&
                                   positive(p.sigma) && nonnegative(p.omega_loc) &&
                                   nonnegative(p.omega_0g),
                               "structured SDF: parameters must be positive (centres >= 0)");
                   },
                   [](const Tabulated& t) {
                       require(t.values.size() == t.grid.size(),
                               "tabulated SDF: values length must equal grid size");
                       for (double v : t.values) {
                           require(nonnegative(v), "tabulated SDF: values must be finite and >= 0");
                       }
                   },
               },
               J);
}

std::string family_name(const SpectralDensity& J) {
    return std::visit(overloaded{
                          [](const Ohmic&) { return std::string("ohmic"); },
                          [](const Lorentzian&) { return std::string("lorentzian"); },
                          [](const StructuredSiV&) { return std::string("structured"); },
                          [](const Tabulated&) { return std::string("tabulated"); },
                      },
                      J);
}

double interpolate_table(const numerics::UniformFrequencyGrid& grid, const std::vector<double>& values,
                         double omega) {
    const double x = omega / grid.d_omega();
    if (x < 0.0 || x > static_cast<double>(grid.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= grid.size()) return values.back();
    const double frac = x - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

double eval_sdf(const SpectralDensity& J, double omega) {
    if (!(omega >= 0.0)) throw InputError("eval_sdf: omega must be >= 0");
    return std::visit(overloaded{
                          [omega](const Ohmic& o) { return ohmic_form(o.alpha, o.s, o.omega_c, omega); },
                          [omega](const Lorentzian& l) {
                              const double x = omega - l.omega_b;
                              return l.gamma0 * l.lambda * l.lambda /
                                     (2.0 * std::numbers::pi * (x * x + l.lambda * l.lambda));
                          },
                          [omega](const StructuredSiV& p) {
                              return p.bulk(omega) + p.local_mode(omega) + p.gaussian_band(omega);
                          },
                          [omega](const Tabulated& t) { return interpolate_table(t.grid, t.values, omega); },
                      },
                      J);
}

double lorentzian_l1_norm(const Lorentzian& l) {
    return l.gamma0 * l.lambda / (2.0 * std::numbers::pi) *
           (0.5 * std::numbers::pi + std::atan(l.omega_b / l.lambda));
}

double l1_norm(const SpectralDensity& J) {
    if (const auto* l = std::get_if<Lorentzian>(&J)) return lorentzian_l1_norm(*l);
    if (const auto* t = std::get_if<Tabulated>(&J)) {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < t->values.size(); ++j) acc += t->values[j] + t->values[j + 1];
        return 0.5 * t->grid.d_omega() * acc;
    }
    if (std::holds_alternative<StructuredSiV>(J)) {
        throw DomainError("l1_norm: the structured SDF decays as 1/omega; its L1 norm diverges");
    }
    numerics::QuadratureOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    return integrate_with_sdf(J, [](double) { return 1.0; }, opts).value;
}

double spectral_scale(const SpectralDensity& J) {
    return std::visit(overloaded{
                          [](const Ohmic& o) { return o.omega_c * std::max(1.0, o.s); },
                          [](const Lorentzian& l) { return l.omega_b + l.lambda; },
                          [](const StructuredSiV& p) {
                              return std::max({p.omega_c * std::max(1.0, p.s), p.omega_loc + p.Gamma,
                                               p.omega_0g + 3.0 * p.sigma});
                          },
                          [](const Tabulated& t) { return t.grid.max_frequency(); },
                      },
                      J);
}

double low_frequency_exponent(const SpectralDensity& J) {
    return std::visit(overloaded{
                          [](const Ohmic& o) { return o.s; },
                          [](const Lorentzian&) { return 0.0; },
                          [](const StructuredSiV& p) { return p.s; },
                          [](const Tabulated& t) {
                              if (t.values.front() > 0.0) return 0.0;
                              const bool all_zero = std::all_of(t.values.begin(), t.values.end(),
                                                                [](double v) { return v == 0.0; });
                              return all_zero ? std::numeric_limits<double>::infinity() : 1.0;
                          },
                      },
                      J);
}

numerics::QuadratureResult integrate_with_sdf(const SpectralDensity& J,
                                              const numerics::RealFunction& weight,
                                              const numerics::QuadratureOptions& opts) {
    if (const auto* t = std::get_if<Tabulated>(&J)) {
        // Only segments where the interpolant is nonzero contribute.
        const double dw = t->grid.d_omega();
        const auto& v = t->values;
        numerics::QuadratureResult total;
        std::vector<double> breaks;
        auto flush = [&]() {
            if (breaks.size() >= 2) {
                const auto r = numerics::integrate_piecewise(
                    [&](double w) { return interpolate_table(t->grid, v, w) * weight(w); }, breaks, opts);
                total.value += r.value;
                total.error += r.error;
                total.evaluations += r.evaluations;
                total.panels += r.panels;
            }
            breaks.clear();
        };
        for (std::size_t j = 0; j + 1 < v.size(); ++j) {
            if (v[j] == 0.0 && v[j + 1] == 0.0) {
                flush();
                continue;
            }
            if (breaks.empty()) breaks.push_back(static_cast<double>(j) * dw);
            breaks.push_back(static_cast<double>(j + 1) * dw);
        }
        flush();
        return total;
    }
    numerics::SemiInfiniteOptions sopts;
    static_cast<numerics::QuadratureOptions&>(sopts) = opts;
    sopts.decay_scale = spectral_scale(J);
    return numerics::integrate_semi_infinite([&](double w) { return eval_sdf(J, w) * weight(w); }, sopts);
}

double tail_split(const SpectralDensity& J) { return 2.0 * spectral_scale(J); }

numerics::QuadratureResult integrate_oscillatory_with_sdf(const SpectralDensity& J, const OscillatoryWeight& w,
                                                          const numerics::QuadratureOptions& opts) {
    numerics::QuadratureOptions o = opts;
    o.oscillation = std::abs(w.frequency);
    if (w.frequency == 0.0 || std::holds_alternative<Tabulated>(J)) return integrate_with_sdf(J, w.weight, o);

    const double split = std::max(w.split, tail_split(J));
    numerics::QuadratureResult total =
        numerics::integrate_interval([&](double x) { return eval_sdf(J, x) * w.weight(x); }, 0.0, split, o);
    auto add = [&total](const numerics::QuadratureResult& r) {
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
        total.panels += r.panels;
    };
    if (w.smooth) {
        add(numerics::integrate_tail([&](double x) { return eval_sdf(J, x) * w.smooth(x); }, split,
                                     spectral_scale(J), o));
    }
    const double f = std::abs(w.frequency);
    const double sin_sign = w.frequency < 0.0 ? -1.0 : 1.0;
    if (w.cos_amplitude) {
        add(numerics::integrate_fourier_tail([&](double x) { return eval_sdf(J, x) * w.cos_amplitude(x); }, split,
                                             f, numerics::Trig::cosine, o));
    }
    if (w.sin_amplitude) {
        add(numerics::integrate_fourier_tail(
            [&](double x) { return sin_sign * eval_sdf(J, x) * w.sin_amplitude(x); }, split, f,
            numerics::Trig::sine, o));
    }
    return total;
}

Tabulated tabulate(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid) {
    Tabulated t{grid, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < grid.size(); ++j) t.values[j] = eval_sdf(J, grid.frequency(j));
    return t;
}

// ----------------------------------------------------------------- thermal

ThermalBath ThermalBath::inverse_temperature(double beta) {
    if (!(beta > 0.0)) throw InputError("ThermalBath: beta must be positive");
    ThermalBath b;
    b.beta_ = beta;
    b.zero_ = std::isinf(beta);
    return b;
}

double ThermalBath::beta() const noexcept {
    return zero_ ? std::numeric_limits<double>::infinity() : beta_;
}

double thermal_factor(const ThermalBath& bath, double omega, ThermalKind kind) {
    if (!(omega > 0.0)) throw InputError("thermal_factor: omega must be > 0");
    if (bath.is_zero_temperature()) {
        return kind == ThermalKind::occupation ? 0.0 : 1.0;
    }
    const double x = bath.beta() * omega;
    switch (kind) {
    case ThermalKind::coth_half: return 1.0 / std::tanh(0.5 * x);
    case ThermalKind::tanh_half: return std::tanh(0.5 * x);
    case ThermalKind::occupation: return 1.0 / std::expm1(x);
    }
    return 0.0;
}

// ------------------------------------------------------------- persistence

nlohmann::json to_json(const SpectralDensity& J) {
    return std::visit(
        overloaded{
            [](const Ohmic& o) {
                return nlohmann::json{{"family", "ohmic"}, {"alpha", o.alpha}, {"s", o.s}, {"omega_c", o.omega_c}};
            },
            [](const Lorentzian& l) {
                return nlohmann::json{
                    {"family", "lorentzian"}, {"gamma0", l.gamma0}, {"lambda", l.lambda}, {"omega_b", l.omega_b}};
            },
            [](const StructuredSiV& p) {
                return nlohmann::json{{"family", "structured"}, {"alpha", p.alpha},   {"s", p.s},
                                      {"omega_c", p.omega_c},   {"J0", p.J0},         {"Gamma", p.Gamma},
                                      {"omega_loc", p.omega_loc}, {"J1", p.J1},       {"sigma", p.sigma},
                                      {"omega_0g", p.omega_0g}};
            },
            [](const Tabulated& t) {
                return nlohmann::json{{"family", "tabulated"}, {"d_omega", t.grid.d_omega()}, {"values", t.values}};
            },
        },
        J);
}

SpectralDensity sdf_from_json(const nlohmann::json& j) {
    try {
        const std::string family = j.at("family").get<std::string>();
        SpectralDensity J = Ohmic{};
        if (family == "ohmic") {
            J = Ohmic{j.at("alpha").get<double>(), j.at("s").get<double>(), j.at("omega_c").get<double>()};
        } else if (family == "lorentzian") {
            J = Lorentzian{j.at("gamma0").get<double>(), j.at("lambda").get<double>(),
                           j.at("omega_b").get<double>()};
        } else if (family == "structured") {
            StructuredSiV p = StructuredSiV::silicon_vacancy();
            p.alpha = j.value("alpha", p.alpha);
            p.s = j.value("s", p.s);
            p.omega_c = j.value("omega_c", p.omega_c);
            p.J0 = j.value("J0", p.J0);
            p.Gamma = j.value("Gamma", p.Gamma);
            p.omega_loc = j.value("omega_loc", p.omega_loc);
            p.J1 = j.value("J1", p.J1);
            p.sigma = j.value("sigma", p.sigma);
            p.omega_0g = j.value("omega_0g", p.omega_0g);
            J = p;
        } else if (family == "tabulated") {
            if (j.contains("csv")) {
                J = read_tabulated_csv(j.at("csv").get<std::string>());
            } else {
                auto values = j.at("values").get<std::vector<double>>();
                J = Tabulated{numerics::UniformFrequencyGrid(j.at("d_omega").get<double>(), values.size()),
                              std::move(values)};
            }
        } else {
            throw ConfigError("unknown SDF family '" + family + "'");
        }
        validate(J);
        return J;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("SDF config: ") + e.what());
    }
}

nlohmann::json to_json(const ThermalBath& bath) {
    if (bath.is_zero_temperature()) return nlohmann::json{{"zero_temperature", true}};
    return nlohmann::json{{"beta", bath.beta()}};
}

ThermalBath bath_from_json(const nlohmann::json& j) {
    if (j.is_null() || j.value("zero_temperature", false)) return ThermalBath::zero_temperature();
    if (!j.contains("beta") || j.at("beta").is_null()) return ThermalBath::zero_temperature();
    return ThermalBath::inverse_temperature(j.at("beta").get<double>());
}

void write_tabulated_csv(const Tabulated& table, const std::filesystem::path& path) {
    csv::write(path, {"omega", "J"}, {table.grid.frequencies(), table.values});
}

Tabulated read_tabulated_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    if (t.header.size() != 2) throw InputError("tabulated SDF CSV must have two columns");
    if (t.rows.size() < 2) throw InputError("tabulated SDF CSV needs at least two rows");
    const double w0 = t.rows[0][0];
    const double dw = t.rows[1][0] - t.rows[0][0];
    if (std::abs(w0) > 1e-12 * std::max(1.0, dw) || !(dw > 0.0)) {
        throw InputError("tabulated SDF CSV must start at omega = 0 with increasing omega");
    }
    std::vector<double> values;
    values.reserve(t.rows.size());
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
        if (std::abs(t.rows[j][0] - static_cast<double>(j) * dw) > 1e-9 * std::max(1.0, t.rows[j][0])) {
            throw InputError("tabulated SDF CSV must use a uniform frequency grid");
        }
        values.push_back(t.rows[j][1]);
    }
    Tabulated table{numerics::UniformFrequencyGrid(dw, values.size()), std::move(values)};
    validate(table);
    return table;
}

} // namespace sdfkit
