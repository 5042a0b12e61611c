// datagen.cpp — Noise injection, parametric datasets and train/test partitions

#include "sdfkit/datagen.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace sdfkit {

// ------------------------------------------------------------------- noise

std::vector<double> noise_factors(std::size_t n, const NoiseSpec& noise, std::uint64_t seed) {
    noise.validate();
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) {
        double z = noise.kind == NoiseKind::gaussian_multiplicative ? rng.normal() : 2.0 * rng.uniform() - 1.0;
        const double delta = std::clamp(noise.sigma_or_halfwidth * z, -noise.clip, noise.clip) + noise.mean_offset;
        v = 1.0 + delta;
    }
    return out;
}

Signal apply_noise(const Signal& clean, const NoiseSpec& noise, std::uint64_t seed) {
    const auto factors = noise_factors(clean.values.size(), noise, seed);
    std::vector<double> v(clean.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = clean.values[i] * factors[i];
        if (clean.model == Channel::AD) v[i] = std::clamp(v[i], -1.0, 1.0);
    }
    return Signal(clean.model, clean.grid, std::move(v), clean.config, NoiseRecord{noise, seed});
}

// ---------------------------------------------------------------- families

std::string to_string(Family f) { return f == Family::ohmic ? "ohmic" : "lorentzian"; }

Family family_from_string(const std::string& s) {
    if (s == "ohmic") return Family::ohmic;
    if (s == "lorentzian") return Family::lorentzian;
    throw ConfigError("unknown parametric family '" + s + "' (expected ohmic or lorentzian)");
}

Channel channel_of(Family f) { return f == Family::ohmic ? Channel::PD : Channel::AD; }

std::vector<std::string> parameter_names(Family f) {
    if (f == Family::ohmic) return {"alpha", "s", "omega_c"};
    return {"lambda", "gamma0", "omega_b"};
}

SpectralDensity make_sdf(Family f, std::span<const double> xi) {
    if (xi.size() != 3) throw InputError("make_sdf: expected 3 parameters");
    if (f == Family::ohmic) return Ohmic{xi[0], xi[1], xi[2]};
    return Lorentzian{xi[1], xi[0], xi[2]};
}

ParameterBox ParameterBox::cube(std::size_t dim, double lo, double hi) {
    return ParameterBox{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

bool ParameterBox::contains(std::span<const double> xi) const {
    if (xi.size() != dim()) return false;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (!(xi[i] >= low[i] && xi[i] <= high[i])) return false;
    }
    return true;
}

void ParameterBox::validate() const {
    if (low.size() != high.size() || low.empty()) throw InputError("ParameterBox: bounds must have equal, nonzero length");
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (!std::isfinite(low[i]) || !std::isfinite(high[i]) || low[i] > high[i]) {
            throw InputError("ParameterBox: need finite bounds with low <= high");
        }
    }
}

Signal simulate_family(Family f, std::span<const double> xi, const numerics::UniformTimeGrid& grid,
                       const ChannelContext& ctx, ForwardRoute route) {
    const SpectralDensity J = make_sdf(f, xi);
    const auto times = grid.times();
    if (f == Family::ohmic) {
        PDConfig cfg{J, ctx.bath, ctx.rho01_abs};
        cfg.validate();
        if (route == ForwardRoute::numerical || !ctx.bath.is_zero_temperature()) return pd_signal(cfg, grid);
        auto v = pd_ohmic_analytic_series(std::get<Ohmic>(J), times, ctx.rho01_abs, resolved_conventions());
        return Signal(Channel::PD, grid, std::move(v), cfg);
    }
    ADConfig cfg{J, ctx.omega_0, 1.0};
    cfg.validate();
    if (route == ForwardRoute::numerical) return ad_signal(cfg, grid);
    auto v = ad_lorentzian_analytic_series(std::get<Lorentzian>(J), ctx.omega_0, times, resolved_conventions());
    return Signal(Channel::AD, grid, std::move(v), cfg);
}

// ---------------------------------------------------------------- datasets

Dataset generate_dataset(const DatasetSpec& spec) {
    spec.box.validate();
    spec.noise.validate();
    if (spec.box.dim() != parameter_names(spec.family).size()) {
        throw InputError("generate_dataset: box dimension does not match the family");
    }
    if (spec.n_instances == 0) throw InputError("generate_dataset: n_instances must be positive");

    Dataset ds{spec, {}};
    ds.instances.reserve(spec.n_instances);
    constexpr int max_rejections = 10;
    for (std::size_t i = 0; i < spec.n_instances; ++i) {
        Rng draws(derive_seed(spec.seed, 2 * i));
        const std::uint64_t noise_seed = derive_seed(spec.seed, 2 * i + 1);
        for (int attempt = 0;; ++attempt) {
            std::vector<double> xi(spec.box.dim());
            for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = draws.uniform(spec.box.low[k], spec.box.high[k]);
            try {
                Signal clean = simulate_family(spec.family, xi, spec.grid, spec.context, spec.route);
                if (!std::all_of(clean.values.begin(), clean.values.end(), [](double v) { return std::isfinite(v); })) {
                    throw NumericalError("non-finite forward-map sample");
                }
                ds.instances.push_back(Instance{std::move(xi), apply_noise(clean, spec.noise, noise_seed)});
                break;
            } catch (const NumericalError&) {
                if (attempt + 1 >= max_rejections) throw;
            } catch (const DomainError&) {
                if (attempt + 1 >= max_rejections) throw;
            }
        }
    }
    return ds;
}

nlohmann::json to_json(const DatasetSpec& s) {
    return nlohmann::json{
        {"model", to_string(channel_of(s.family))},
        {"family", to_string(s.family)},
        {"parameters", parameter_names(s.family)},
        {"box", {{"low", s.box.low}, {"high", s.box.high}}},
        {"count", s.n_instances},
        {"grid", {{"dt", s.grid.dt()}, {"n_points", s.grid.size()}}},
        {"noise", to_json(s.noise)},
        {"seed", s.seed},
        {"bath", to_json(s.context.bath)},
        {"rho01_abs", s.context.rho01_abs},
        {"omega_0", s.context.omega_0},
        {"route", s.route == ForwardRoute::analytic ? "analytic" : "numerical"},
    };
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    try {
        DatasetSpec s;
        s.family = family_from_string(j.at("family").get<std::string>());
        if (j.contains("box")) {
            s.box.low = j["box"].at("low").get<std::vector<double>>();
            s.box.high = j["box"].at("high").get<std::vector<double>>();
        }
        s.n_instances = j.value("count", s.n_instances);
        if (j.contains("grid")) {
            s.grid = numerics::UniformTimeGrid(j["grid"].at("dt").get<double>(), j["grid"].at("n_points").get<std::size_t>());
        }
        if (j.contains("noise") && !j["noise"].is_null()) s.noise = noise_from_json(j["noise"]);
        s.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("bath")) s.context.bath = bath_from_json(j["bath"]);
        s.context.rho01_abs = j.value("rho01_abs", 0.5);
        s.context.omega_0 = j.value("omega_0", 1.0);
        const std::string route = j.value("route", std::string("analytic"));
        if (route != "analytic" && route != "numerical") throw ConfigError("unknown forward route '" + route + "'");
        s.route = route == "analytic" ? ForwardRoute::analytic : ForwardRoute::numerical;
        s.box.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("dataset manifest: ") + e.what());
    }
}

namespace {

std::string instance_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu.csv", i);
    return buf;
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot read " + p.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

} // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& dir, DatasetLayout layout) {
    std::filesystem::create_directories(dir);
    auto manifest = to_json(ds.spec);
    manifest["layout"] = layout == DatasetLayout::wide ? "wide" : "per_instance";
    const auto names = parameter_names(ds.spec.family);

    if (layout == DatasetLayout::wide) {
        std::vector<std::string> header{"id"};
        header.insert(header.end(), names.begin(), names.end());
        for (std::size_t n = 0; n < ds.n_times(); ++n) header.push_back("f" + std::to_string(n));
        std::vector<std::vector<double>> rows;
        rows.reserve(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::vector<double> row{static_cast<double>(i)};
            row.insert(row.end(), ds.instances[i].xi.begin(), ds.instances[i].xi.end());
            row.insert(row.end(), ds.instances[i].signal.values.begin(), ds.instances[i].signal.values.end());
            rows.push_back(std::move(row));
        }
        csv::write_rows(dir / "instances.csv", header, rows);
    } else {
        std::vector<std::string> header{"id"};
        header.insert(header.end(), names.begin(), names.end());
        std::vector<std::vector<double>> rows;
        const auto times = ds.spec.grid.times();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::vector<double> row{static_cast<double>(i)};
            row.insert(row.end(), ds.instances[i].xi.begin(), ds.instances[i].xi.end());
            rows.push_back(std::move(row));
            csv::write(dir / "instances" / instance_name(i), {"t", "f"}, {times, ds.instances[i].signal.values});
        }
        csv::write_rows(dir / "parameters.csv", header, rows);
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw ConfigError("cannot write " + (dir / "manifest.json").string());
    os << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
    const auto manifest = read_json(dir / "manifest.json");
    Dataset ds{dataset_spec_from_json(manifest), {}};
    const auto names = parameter_names(ds.spec.family);
    const std::string layout = manifest.value("layout", std::string("wide"));
    const ChannelContext& ctx = ds.spec.context;

    auto make_signal = [&](std::vector<double> xi, std::vector<double> values, std::size_t id) {
        const SpectralDensity J = make_sdf(ds.spec.family, xi);
        ChannelConfig cfg = ds.spec.family == Family::ohmic ? ChannelConfig(PDConfig{J, ctx.bath, ctx.rho01_abs})
                                                           : ChannelConfig(ADConfig{J, ctx.omega_0, 1.0});
        Signal s(channel_of(ds.spec.family), ds.spec.grid, std::move(values), std::move(cfg),
                 NoiseRecord{ds.spec.noise, derive_seed(ds.spec.seed, 2 * id + 1)});
        ds.instances.push_back(Instance{std::move(xi), std::move(s)});
    };

    const std::size_t p = names.size();
    if (layout == "wide") {
        const auto table = csv::read(dir / "instances.csv");
        for (const auto& row : table.rows) {
            if (row.size() != 1 + p + ds.n_times()) throw ConfigError("instances.csv: row width mismatch");
            make_signal(std::vector<double>(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(p)),
                        std::vector<double>(row.begin() + 1 + static_cast<std::ptrdiff_t>(p), row.end()),
                        static_cast<std::size_t>(row[0]));
        }
    } else if (layout == "per_instance") {
        const auto table = csv::read(dir / "parameters.csv");
        for (const auto& row : table.rows) {
            if (row.size() != 1 + p) throw ConfigError("parameters.csv: row width mismatch");
            const auto id = static_cast<std::size_t>(row[0]);
            auto values = csv::read(dir / "instances" / instance_name(id)).column_values("f");
            make_signal(std::vector<double>(row.begin() + 1, row.end()), std::move(values), id);
        }
    } else {
        throw ConfigError("dataset manifest: unknown layout '" + layout + "'");
    }
    if (ds.size() != ds.spec.n_instances) throw ConfigError("dataset: instance count differs from manifest");
    return ds;
}

// -------------------------------------------------------------- partitions

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0xC0FFEE));
    rng.shuffle(idx);
    return idx;
}

} // namespace

HoldoutSplit holdout_split(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("holdout_split: fraction must lie in (0, 1)");
    const auto idx = shuffled_indices(n, seed);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    HoldoutSplit out;
    out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InputError("kfold_split: k must be at least 2");
    if (k > n) throw InputError("kfold_split: k exceeds the number of instances");
    const auto idx = shuffled_indices(n, seed);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                        idx.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

} // namespace sdfkit
