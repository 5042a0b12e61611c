// signal_io.cpp — Signal construction, validation and CSV/JSON persistence

#include "sdfkit/signal.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"

#include <cmath>
#include <fstream>

namespace sdfkit {

std::string to_string(Channel c) { return c == Channel::PD ? "PD" : "AD"; }

Channel channel_from_string(const std::string& s) {
    if (s == "PD" || s == "pd") return Channel::PD;
    if (s == "AD" || s == "ad") return Channel::AD;
    throw ConfigError("unknown channel '" + s + "' (expected PD or AD)");
}

void PDConfig::validate() const {
    sdfkit::validate(J);
    if (!(rho01_abs > 0.0 && rho01_abs <= 0.5)) {
        throw InputError("PDConfig: |rho01(0)| must lie in (0, 1/2]");
    }
}

void ADConfig::validate() const {
    sdfkit::validate(J);
    if (!(omega_0 > 0.0)) throw InputError("ADConfig: omega_0 must be positive");
    if (rho11_init != 1.0) throw InputError("ADConfig: only the fully excited initial state is supported");
}

void NoiseSpec::validate() const {
    if (!(sigma_or_halfwidth >= 0.0) || !(clip >= 0.0) || !std::isfinite(mean_offset)) {
        throw InputError("NoiseSpec: dispersion and clip must be >= 0");
    }
}

Signal::Signal(Channel m, numerics::UniformTimeGrid g, std::vector<double> v, ChannelConfig c,
               std::optional<NoiseRecord> n)
    : model(m), grid(g), values(std::move(v)), config(std::move(c)), noise(n) {
    if (values.size() != grid.size()) throw InputError("Signal: values length must equal grid size");
    const bool pd = std::holds_alternative<PDConfig>(config);
    if (pd != (model == Channel::PD)) throw InputError("Signal: model label does not match config");
}

const PDConfig& Signal::pd() const {
    if (const auto* p = std::get_if<PDConfig>(&config)) return *p;
    throw InputError("Signal: expected a PD signal");
}

const ADConfig& Signal::ad() const {
    if (const auto* p = std::get_if<ADConfig>(&config)) return *p;
    throw InputError("Signal: expected an AD signal");
}

nlohmann::json to_json(const NoiseSpec& n) {
    return nlohmann::json{
        {"kind", n.kind == NoiseKind::gaussian_multiplicative ? "gaussian_multiplicative" : "uniform_multiplicative"},
        {"sigma_or_halfwidth", n.sigma_or_halfwidth},
        {"clip", n.clip},
        {"mean_offset", n.mean_offset}};
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
    try {
        NoiseSpec n;
        const std::string kind = j.value("kind", std::string("gaussian_multiplicative"));
        if (kind == "gaussian_multiplicative" || kind == "gaussian") {
            n.kind = NoiseKind::gaussian_multiplicative;
        } else if (kind == "uniform_multiplicative" || kind == "uniform") {
            n.kind = NoiseKind::uniform_multiplicative;
        } else {
            throw ConfigError("unknown noise kind '" + kind + "'");
        }
        n.sigma_or_halfwidth = j.value("sigma_or_halfwidth", 0.0);
        n.clip = j.value("clip", 0.0);
        n.mean_offset = j.value("mean_offset", 0.0);
        n.validate();
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("noise config: ") + e.what());
    }
}

nlohmann::json to_json(const ChannelConfig& c) {
    if (const auto* p = std::get_if<PDConfig>(&c)) {
        return nlohmann::json{{"model", "PD"}, {"sdf", to_json(p->J)}, {"bath", to_json(p->bath)},
                              {"rho01_abs", p->rho01_abs}};
    }
    const auto& a = std::get<ADConfig>(c);
    return nlohmann::json{{"model", "AD"}, {"sdf", to_json(a.J)}, {"omega_0", a.omega_0},
                          {"rho11_init", a.rho11_init}};
}

ChannelConfig channel_config_from_json(const nlohmann::json& j) {
    try {
        const Channel m = channel_from_string(j.at("model").get<std::string>());
        if (m == Channel::PD) {
            PDConfig p{sdf_from_json(j.at("sdf")), bath_from_json(j.value("bath", nlohmann::json())),
                       j.value("rho01_abs", 0.5)};
            p.validate();
            return p;
        }
        ADConfig a{sdf_from_json(j.at("sdf")), j.value("omega_0", 1.0), j.value("rho11_init", 1.0)};
        a.validate();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("channel config: ") + e.what());
    }
}

nlohmann::json signal_metadata(const Signal& s) {
    nlohmann::json j = to_json(s.config);
    j["grid"] = {{"dt", s.grid.dt()}, {"n_points", s.grid.size()}, {"t_f", s.grid.final_time()}};
    if (s.noise) {
        j["noise"] = to_json(s.noise->spec);
        j["seed"] = s.noise->seed;
    } else {
        j["noise"] = nullptr;
        j["seed"] = nullptr;
    }
    return j;
}

void write_signal(const Signal& s, const std::filesystem::path& csv_path) {
    csv::write(csv_path, {"t", "f"}, {s.grid.times(), s.values});
    auto meta_path = csv_path;
    meta_path.replace_extension(".json");
    std::ofstream os(meta_path);
    if (!os) throw ConfigError("cannot write " + meta_path.string());
    os << signal_metadata(s).dump(2) << '\n';
}

Signal read_signal(const std::filesystem::path& csv_path) {
    auto meta_path = csv_path;
    meta_path.replace_extension(".json");
    std::ifstream is(meta_path);
    if (!is) throw ConfigError("missing signal metadata " + meta_path.string());
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("signal metadata: " + std::string(e.what()));
    }
    const auto table = csv::read(csv_path);
    auto values = table.column_values("f");
    const auto& g = meta.at("grid");
    numerics::UniformTimeGrid grid(g.at("dt").get<double>(), g.at("n_points").get<std::size_t>());
    std::optional<NoiseRecord> noise;
    if (!meta["noise"].is_null()) {
        noise = NoiseRecord{noise_from_json(meta.at("noise")), meta.at("seed").get<std::uint64_t>()};
    }
    const Channel m = channel_from_string(meta.at("model").get<std::string>());
    return Signal(m, grid, std::move(values), channel_config_from_json(meta), noise);
}

} // namespace sdfkit
