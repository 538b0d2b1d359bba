#pragma once

// System parameters and energy accounting.
//
// Bit energy per transmit antenna at each receive antenna is
//   Eb_j = sigma_j^2 P_sum / (2 eta m_j),   eta = N / (N + Ls),
// so the noise level for a target Eb/N0 is N0 = sigma_j^2 P_sum / (2 eta m_j Eb/N0)
// and the regularization term of the MMSE detectors is alpha_j = N0 / sigma_j^2.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scfde/channel.hpp"
#include "scfde/json_source.hpp"
#include "scfde/modem.hpp"

namespace scfde {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// How the per-antenna symbol powers relate when QAM orders differ.
///  equal_ebn0  - powers are rescaled so every input has the same Eb (the
///                configured sigma2 values of inputs with the largest
///                sigma2/m ratio are kept); a sweep value is every input's Eb/N0.
///  fixed_sigma - configured powers are transmitted as-is; a sweep value is
///                the Eb/N0 of input 0 and the others follow from the common N0.
enum class PowerControl { equal_ebn0, fixed_sigma };

enum class ChannelKind { rayleigh, los };

struct AntennaConfig {
    QamScheme scheme;
    double sigma2 = 2.0;
};

struct ScenarioConfig {
    std::size_t n = 256;
    std::size_t cp = 64;
    std::size_t n_t = 1;
    std::size_t n_r = 1;
    std::vector<AntennaConfig> antennas;
    ChannelKind channel = ChannelKind::rayleigh;
    std::string profile_name = "linear";
    PowerDelayProfile profile = PowerDelayProfile::linear_decay(64);
    PowerControl power_control = PowerControl::equal_ebn0;
    std::uint64_t seed = 1;

    double eta() const { return static_cast<double>(n) / static_cast<double>(n + cp); }
    double p_sigma() const { return profile.total(); }

    void validate() const {
        if (n == 0) throw ValidationError("block length N must be positive");
        if (cp >= n) throw ValidationError("cyclic prefix Ls must be shorter than N");
        if (n_t == 0) throw ValidationError("NT must be positive");
        if (n_t > n_r) throw ValidationError("NT must not exceed NR");
        if (antennas.size() != n_t)
            throw ValidationError("per-antenna list has " + std::to_string(antennas.size()) + " entries, NT is " +
                                  std::to_string(n_t));
        for (const auto& a : antennas) {
            a.scheme.validate();
            if (!(a.sigma2 > 0.0) || !std::isfinite(a.sigma2)) throw ValidationError("sigma2 must be positive");
        }
        try {
            profile.validate(cp);
        } catch (const NumericError& e) {
            throw ValidationError(e.what());
        }
    }

    /// Symbol power actually transmitted by each input.
    std::vector<double> effective_sigma2() const {
        std::vector<double> out(antennas.size());
        if (power_control == PowerControl::fixed_sigma) {
            for (std::size_t j = 0; j < antennas.size(); ++j) out[j] = antennas[j].sigma2;
            return out;
        }
        double ratio = 0.0;
        for (const auto& a : antennas) ratio = std::max(ratio, a.sigma2 / a.scheme.m);
        for (std::size_t j = 0; j < antennas.size(); ++j) out[j] = antennas[j].scheme.m * ratio;
        return out;
    }

    std::vector<SymbolFormat> formats() const {
        const auto power = effective_sigma2();
        std::vector<SymbolFormat> out(antennas.size());
        for (std::size_t j = 0; j < antennas.size(); ++j)
            out[j] = {antennas[j].scheme, std::sqrt(power[j] / antennas[j].scheme.lattice_power())};
        return out;
    }

    std::vector<QamScheme> schemes() const {
        std::vector<QamScheme> out;
        for (const auto& a : antennas) out.push_back(a.scheme);
        return out;
    }

    /// Realization `index` of the channel ensemble for this scenario's seed.
    ChannelRealization draw_channel(std::uint64_t index) const { return draw_channel(index, seed); }

    ChannelRealization draw_channel(std::uint64_t index, std::uint64_t stream_seed) const {
        if (channel == ChannelKind::los) return los_single_path(n, n_r, p_sigma(), n_t);
        Rng rng = substream(stream_seed, index, StreamPurpose::channel);
        return draw_rayleigh(profile, n, n_t, n_r, rng);
    }
};

/// Homogeneous scenario: every input uses `scheme` at its lattice power.
inline ScenarioConfig make_scenario(std::size_t n_t, std::size_t n_r, QamScheme scheme, std::size_t n = 256,
                                    std::size_t cp = 64) {
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.cp = cp;
    cfg.n_t = n_t;
    cfg.n_r = n_r;
    cfg.antennas.assign(n_t, {scheme, scheme.lattice_power()});
    cfg.profile = PowerDelayProfile::linear_decay(std::min<std::size_t>(cp, 64));
    return cfg;
}

struct NoiseConfig {
    double n0 = 0.0;
    double sigma_n2 = 0.0;       // frequency-domain noise variance, N0 * N
    std::vector<double> alpha;   // N0 / sigma_j^2
    std::vector<double> ebn0_db;
};

/// Per-input Eb/N0 implied by a sweep value under the scenario's power control.
inline std::vector<double> per_input_ebn0(const ScenarioConfig& cfg, double sweep_db) {
    std::vector<double> out(cfg.n_t, sweep_db);
    if (cfg.power_control == PowerControl::equal_ebn0) return out;
    const auto power = cfg.effective_sigma2();
    const double ref = power[0] / cfg.antennas[0].scheme.m;
    for (std::size_t j = 0; j < cfg.n_t; ++j)
        out[j] = sweep_db + linear_to_db((power[j] / cfg.antennas[j].scheme.m) / ref);
    return out;
}

inline NoiseConfig derive_noise(const ScenarioConfig& cfg, std::span<const double> ebn0_db) {
    if (ebn0_db.size() != cfg.n_t) throw ValidationError("one Eb/N0 value per input is required");
    const auto power = cfg.effective_sigma2();
    const double p_sigma = cfg.p_sigma();
    NoiseConfig out;
    out.ebn0_db.assign(ebn0_db.begin(), ebn0_db.end());
    out.alpha.resize(cfg.n_t);
    for (std::size_t j = 0; j < cfg.n_t; ++j) {
        const double lin = db_to_linear(ebn0_db[j]);
        if (!(lin > 0.0) || std::isnan(lin)) throw ValidationError("Eb/N0 must be a positive linear value");
        const double n0 = power[j] * p_sigma / (2.0 * cfg.eta() * cfg.antennas[j].scheme.m * lin);
        if (j == 0)
            out.n0 = n0;
        else if (std::abs(n0 - out.n0) > 1e-9 * std::max(n0, out.n0))
            throw ValidationError("per-input Eb/N0 values imply different noise levels at the receiver");
    }
    for (std::size_t j = 0; j < cfg.n_t; ++j) out.alpha[j] = out.n0 / power[j];
    out.sigma_n2 = out.n0 * static_cast<double>(cfg.n);
    return out;
}

inline NoiseConfig derive_noise(const ScenarioConfig& cfg, double sweep_db) {
    const auto per_input = per_input_ebn0(cfg, sweep_db);
    return derive_noise(cfg, per_input);
}

/// Inverse of derive_noise: per-input Eb/N0 (dB) for a receiver noise level.
inline std::vector<double> ebn0_from_noise(const ScenarioConfig& cfg, double n0) {
    const auto power = cfg.effective_sigma2();
    std::vector<double> out(cfg.n_t);
    for (std::size_t j = 0; j < cfg.n_t; ++j)
        out[j] = linear_to_db(power[j] * cfg.p_sigma() / (2.0 * cfg.eta() * cfg.antennas[j].scheme.m * n0));
    return out;
}

// Scenario files:
//   { "N": 256, "Ls": 64, "NT": 12, "NR": 60,
//     "per_antenna": [ {"qam": 64, "count": 4, "sigma2": 42}, ... ],
//     "profile": "linear" | "flat" | "los" | {"taps": [...]},
//     "power_control": "equal_ebn0" | "fixed_sigma",
//     "seed": 1 }

namespace detail {

inline std::size_t require_size(const JsonSource& src, const std::string& ptr, std::size_t min_value) {
    if (!src.has(ptr)) src.fail(ptr, "missing required field");
    const json& v = src.at(ptr);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value))
        src.fail(ptr, "expected an integer >= " + std::to_string(min_value));
    return v.get<std::size_t>();
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const JsonSource& src, const std::string& base = "") {
    const json& root = base.empty() ? src.root() : src.at(base);
    if (!root.is_object()) src.fail(base, "scenario must be a JSON object");
    static const char* known[] = {"N", "Ls", "NT", "NR", "per_antenna", "profile", "power_control", "seed", "name",
                                  "description"};
    for (const auto& [key, _] : root.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            src.fail(base + "/" + key, "unknown scenario field");
    }

    ScenarioConfig cfg;
    cfg.n = detail::require_size(src, base + "/N", 2);
    cfg.cp = detail::require_size(src, base + "/Ls", 0);
    cfg.n_t = detail::require_size(src, base + "/NT", 1);
    cfg.n_r = detail::require_size(src, base + "/NR", 1);
    if (cfg.cp >= cfg.n) src.fail(base + "/Ls", "cyclic prefix must be shorter than N");
    if (cfg.n_t > cfg.n_r) src.fail(base + "/NT", "NT must not exceed NR");

    const std::string pa = base + "/per_antenna";
    if (!src.has(pa) || !src.at(pa).is_array() || src.at(pa).empty())
        src.fail(pa, "expected a nonempty array of {qam, sigma2, count}");
    for (std::size_t e = 0; e < src.at(pa).size(); ++e) {
        const std::string ep = pa + "/" + std::to_string(e);
        const json& entry = src.at(ep);
        if (!entry.is_object() || !entry.contains("qam")) src.fail(ep, "entry needs a \"qam\" order");
        if (!entry["qam"].is_number_integer()) src.fail(ep + "/qam", "expected 4, 16 or 64");
        AntennaConfig a;
        try {
            a.scheme = QamScheme::from_order(entry["qam"].get<int>());
        } catch (const ValidationError& err) {
            src.fail(ep + "/qam", err.field_message());
        }
        a.sigma2 = a.scheme.lattice_power();
        if (entry.contains("sigma2")) {
            if (!entry["sigma2"].is_number() || !(entry["sigma2"].get<double>() > 0.0))
                src.fail(ep + "/sigma2", "expected a positive number");
            a.sigma2 = entry["sigma2"].get<double>();
        }
        std::size_t count = 1;
        if (entry.contains("count")) count = detail::require_size(src, ep + "/count", 1);
        for (const auto& [key, _] : entry.items())
            if (key != "qam" && key != "sigma2" && key != "count") src.fail(ep + "/" + key, "unknown field");
        cfg.antennas.insert(cfg.antennas.end(), count, a);
    }
    if (cfg.antennas.size() != cfg.n_t)
        src.fail(pa, "antenna counts add up to " + std::to_string(cfg.antennas.size()) + ", NT is " +
                         std::to_string(cfg.n_t));

    const std::string pp = base + "/profile";
    if (src.has(pp)) {
        const json& p = src.at(pp);
        if (p.is_string()) {
            const auto name = p.get<std::string>();
            cfg.profile_name = name;
            if (name == "linear")
                cfg.profile = PowerDelayProfile::linear_decay(std::min<std::size_t>(cfg.cp, 64));
            else if (name == "flat")
                cfg.profile = PowerDelayProfile::single_tap();
            else if (name == "los") {
                cfg.channel = ChannelKind::los;
                cfg.profile = PowerDelayProfile::single_tap();
            } else
                src.fail(pp, "unknown profile \"" + name + "\" (expected linear, flat, los or {\"taps\": [...]})");
        } else if (p.is_object() && p.contains("taps") && p["taps"].is_array()) {
            cfg.profile_name = "custom";
            for (const auto& t : p["taps"])
                if (!t.is_number()) src.fail(pp + "/taps", "taps must be numbers");
            cfg.profile.taps.clear();
            for (const auto& t : p["taps"]) cfg.profile.taps.push_back(t.get<double>());
            try {
                cfg.profile.validate(cfg.cp);
            } catch (const NumericError& e) {
                src.fail(pp + "/taps", e.what());
            }
        } else {
            src.fail(pp, "expected a profile name or {\"taps\": [...]}");
        }
    } else {
        cfg.profile = PowerDelayProfile::linear_decay(std::min<std::size_t>(cfg.cp, 64));
    }

    const std::string pc = base + "/power_control";
    if (src.has(pc)) {
        const json& v = src.at(pc);
        if (v == "equal_ebn0")
            cfg.power_control = PowerControl::equal_ebn0;
        else if (v == "fixed_sigma")
            cfg.power_control = PowerControl::fixed_sigma;
        else
            src.fail(pc, "expected \"equal_ebn0\" or \"fixed_sigma\"");
    }
    const std::string ps = base + "/seed";
    if (src.has(ps)) {
        if (!src.at(ps).is_number_unsigned()) src.fail(ps, "expected a nonnegative integer");
        cfg.seed = src.at(ps).get<std::uint64_t>();
    }
    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        src.fail(base, e.field_message());
    }
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) { return scenario_from_json(JsonSource::load(path)); }

inline json scenario_to_json(const ScenarioConfig& cfg) {
    json j;
    j["N"] = cfg.n;
    j["Ls"] = cfg.cp;
    j["NT"] = cfg.n_t;
    j["NR"] = cfg.n_r;
    json pa = json::array();
    for (std::size_t a = 0; a < cfg.antennas.size();) {
        std::size_t b = a;
        while (b < cfg.antennas.size() && cfg.antennas[b].scheme == cfg.antennas[a].scheme &&
               cfg.antennas[b].sigma2 == cfg.antennas[a].sigma2)
            ++b;
        pa.push_back({{"qam", cfg.antennas[a].scheme.order()}, {"sigma2", cfg.antennas[a].sigma2}, {"count", b - a}});
        a = b;
    }
    j["per_antenna"] = pa;
    if (cfg.profile_name == "custom")
        j["profile"] = {{"taps", cfg.profile.taps}};
    else
        j["profile"] = cfg.profile_name;
    j["power_control"] = cfg.power_control == PowerControl::equal_ebn0 ? "equal_ebn0" : "fixed_sigma";
    j["seed"] = cfg.seed;
    return j;
}

}  // namespace scfde
