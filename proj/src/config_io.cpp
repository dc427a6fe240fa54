#include "mashvco/config_io.hpp"

#include <fstream>
#include <set>

namespace mashvco {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ValidationError("config field '" + field + "': " + why);
}

template <typename T>
T get_as(const json& j, const std::string& field) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        fail(field, e.what());
    }
}

json curve_to_json(const TuningCurve& c) {
    return json{{"name", c.name},   {"f0", c.f0},       {"gain_k", c.gain_k},
                {"nl_poly", c.nl_poly}, {"x_min", c.x_min}, {"x_max", c.x_max}};
}

TuningCurve curve_from_json(const json& j, const std::string& field) {
    if (j.is_string()) {
        try {
            return tuning_preset(j.get<std::string>());
        } catch (const std::exception& e) {
            fail(field, e.what());
        }
    }
    if (!j.is_object()) fail(field, "expected preset name or object");
    if (j.contains("preset")) {
        try {
            return tuning_preset(get_as<std::string>(j.at("preset"), field));
        } catch (const std::exception& e) {
            fail(field, e.what());
        }
    }
    if (j.contains("table")) {
        const auto path = get_as<std::string>(j.at("table"), field + ".table");
        const unsigned order =
            j.contains("order") ? get_as<unsigned>(j.at("order"), field + ".order") : 5u;
        try {
            return fit_curve_from_table(read_curve_table_csv(path), order).curve;
        } catch (const std::exception& e) {
            fail(field, e.what());
        }
    }
    TuningCurve c;
    static const std::set<std::string> known = {"name",    "f0",   "gain_k",
                                                "nl_poly", "x_min", "x_max"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) fail(field + "." + k, "unknown key");
    if (!j.contains("f0") || !j.contains("gain_k"))
        fail(field, "explicit curve needs f0 and gain_k");
    c.f0 = get_as<double>(j.at("f0"), field + ".f0");
    c.gain_k = get_as<double>(j.at("gain_k"), field + ".gain_k");
    if (j.contains("nl_poly"))
        c.nl_poly = get_as<std::vector<double>>(j.at("nl_poly"), field + ".nl_poly");
    if (j.contains("x_min")) c.x_min = get_as<double>(j.at("x_min"), field + ".x_min");
    if (j.contains("x_max")) c.x_max = get_as<double>(j.at("x_max"), field + ".x_max");
    if (j.contains("name")) c.name = get_as<std::string>(j.at("name"), field + ".name");
    return c;
}

} // namespace

nlohmann::json config_to_json(const SimConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["fs"] = cfg.fs;
    j["osr"] = cfg.osr;
    j["n_phi1"] = cfg.n_phi1;
    j["n_phi2"] = cfg.n_phi2;
    j["curve1"] = curve_to_json(cfg.curve1);
    j["curve2"] = curve_to_json(cfg.curve2);
    j["architecture"] = std::string(to_string(cfg.architecture));
    j["differential_stage1"] = cfg.differential_stage1;
    json tones = json::array();
    for (const auto& t : cfg.stimulus)
        tones.push_back({{"amp", t.amp}, {"freq", t.freq}, {"phase_rad", t.phase_rad}});
    j["stimulus"] = tones;
    j["stimulus_offset"] = cfg.stimulus_offset;
    j["n_samples"] = cfg.n_samples;
    j["pw_errors"] = {{"tr", cfg.pw_errors.tr}, {"tf", cfg.pw_errors.tf}};
    j["metastability"] = {{"enabled", cfg.metastability.enabled},
                          {"tau", cfg.metastability.tau},
                          {"t_max", cfg.metastability.t_max}};
    if (cfg.thermal_snr_target_db)
        j["thermal_snr_target_db"] = *cfg.thermal_snr_target_db;
    else
        j["thermal_snr_target_db"] = nullptr;
    j["thermal_sigma_override"] = cfg.thermal_sigma_override;
    j["stage1_deriv_poly"] = cfg.stage1_deriv_poly;
    j["seed"] = cfg.seed;
    j["grid"] = {{"points_per_period", cfg.grid.points_per_period}};
    if (cfg.g_override)
        j["g_override"] = *cfg.g_override;
    else
        j["g_override"] = nullptr;
    j["keep_e_trace"] = cfg.keep_e_trace;
    return j;
}

SimConfig config_from_json(const nlohmann::json& j, const SimConfig& base) {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    static const std::set<std::string> known = {
        "schema",        "fs",          "osr",
        "n_phi1",        "n_phi2",      "curve1",
        "curve2",        "architecture", "differential_stage1",
        "stimulus",      "stimulus_offset", "n_samples",
        "pw_errors",     "metastability", "thermal_snr_target_db",
        "thermal_sigma_override", "stage1_deriv_poly", "seed",
        "grid",          "g_override",  "keep_e_trace"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) fail(k, "unknown key");
    if (j.contains("schema") && get_as<int>(j.at("schema"), "schema") != 1)
        fail("schema", "unsupported version (expected 1)");

    SimConfig cfg = base;
    if (j.contains("fs")) cfg.fs = get_as<double>(j.at("fs"), "fs");
    if (j.contains("osr")) cfg.osr = get_as<unsigned>(j.at("osr"), "osr");
    if (j.contains("n_phi1")) cfg.n_phi1 = get_as<unsigned>(j.at("n_phi1"), "n_phi1");
    if (j.contains("n_phi2")) cfg.n_phi2 = get_as<unsigned>(j.at("n_phi2"), "n_phi2");
    if (j.contains("curve1")) cfg.curve1 = curve_from_json(j.at("curve1"), "curve1");
    if (j.contains("curve2")) cfg.curve2 = curve_from_json(j.at("curve2"), "curve2");
    if (j.contains("architecture")) {
        const auto s = get_as<std::string>(j.at("architecture"), "architecture");
        try {
            cfg.architecture = architecture_from_string(s);
        } catch (const std::exception& e) {
            fail("architecture", e.what());
        }
    }
    if (j.contains("differential_stage1"))
        cfg.differential_stage1 =
            get_as<bool>(j.at("differential_stage1"), "differential_stage1");
    if (j.contains("stimulus")) {
        const auto& arr = j.at("stimulus");
        if (!arr.is_array()) fail("stimulus", "expected an array of tones");
        cfg.stimulus.clear();
        std::size_t idx = 0;
        for (const auto& t : arr) {
            const std::string f = "stimulus[" + std::to_string(idx++) + "]";
            Tone tone;
            if (!t.is_object() || !t.contains("amp") || !t.contains("freq"))
                fail(f, "tone needs amp and freq");
            tone.amp = get_as<double>(t.at("amp"), f + ".amp");
            tone.freq = get_as<double>(t.at("freq"), f + ".freq");
            if (t.contains("phase_rad"))
                tone.phase_rad = get_as<double>(t.at("phase_rad"), f + ".phase_rad");
            cfg.stimulus.push_back(tone);
        }
    }
    if (j.contains("stimulus_offset"))
        cfg.stimulus_offset = get_as<double>(j.at("stimulus_offset"), "stimulus_offset");
    if (j.contains("n_samples"))
        cfg.n_samples = get_as<std::size_t>(j.at("n_samples"), "n_samples");
    if (j.contains("pw_errors")) {
        const auto& p = j.at("pw_errors");
        if (!p.is_object()) fail("pw_errors", "expected an object");
        if (p.contains("max_skew")) {
            cfg.pw_errors = gradient_pw_errors(
                cfg.n_phi1, get_as<double>(p.at("max_skew"), "pw_errors.max_skew"));
        } else {
            if (p.contains("tr"))
                cfg.pw_errors.tr =
                    get_as<std::vector<double>>(p.at("tr"), "pw_errors.tr");
            if (p.contains("tf"))
                cfg.pw_errors.tf =
                    get_as<std::vector<double>>(p.at("tf"), "pw_errors.tf");
        }
    }
    if (j.contains("metastability")) {
        const auto& m = j.at("metastability");
        if (!m.is_object()) fail("metastability", "expected an object");
        if (m.contains("enabled"))
            cfg.metastability.enabled =
                get_as<bool>(m.at("enabled"), "metastability.enabled");
        if (m.contains("tau"))
            cfg.metastability.tau = get_as<double>(m.at("tau"), "metastability.tau");
        if (m.contains("t_max"))
            cfg.metastability.t_max =
                get_as<double>(m.at("t_max"), "metastability.t_max");
    }
    if (j.contains("thermal_snr_target_db")) {
        const auto& t = j.at("thermal_snr_target_db");
        if (t.is_null())
            cfg.thermal_snr_target_db.reset();
        else
            cfg.thermal_snr_target_db =
                get_as<double>(t, "thermal_snr_target_db");
    }
    if (j.contains("thermal_sigma_override"))
        cfg.thermal_sigma_override =
            get_as<double>(j.at("thermal_sigma_override"), "thermal_sigma_override");
    if (j.contains("stage1_deriv_poly"))
        cfg.stage1_deriv_poly = get_as<std::vector<double>>(
            j.at("stage1_deriv_poly"), "stage1_deriv_poly");
    if (j.contains("seed"))
        cfg.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (g.is_number())
            cfg.grid.points_per_period = get_as<unsigned>(g, "grid");
        else if (g.is_object() && g.contains("points_per_period"))
            cfg.grid.points_per_period =
                get_as<unsigned>(g.at("points_per_period"), "grid.points_per_period");
        else
            fail("grid", "expected a number or {points_per_period}");
    }
    if (j.contains("g_override")) {
        const auto& g = j.at("g_override");
        if (g.is_null())
            cfg.g_override.reset();
        else
            cfg.g_override = get_as<double>(g, "g_override");
    }
    if (j.contains("keep_e_trace"))
        cfg.keep_e_trace = get_as<bool>(j.at("keep_e_trace"), "keep_e_trace");

    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return cfg;
}

SimConfig read_config_file(const std::string& path, const SimConfig& base) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return config_from_json(j, base);
}

void merge_json(nlohmann::json& base, const nlohmann::json& overlay) {
    if (!base.is_object() || !overlay.is_object()) {
        base = overlay;
        return;
    }
    for (const auto& [k, v] : overlay.items()) {
        if (base.contains(k))
            merge_json(base[k], v);
        else
            base[k] = v;
    }
}

nlohmann::json parse_kv_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("override must look like key=value: '" + kv + "'");
    const std::string path = kv.substr(0, eq);
    const std::string text = kv.substr(eq + 1);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text; // plain string (preset names, file paths)
    }

    // Build the nested object inside-out along the dotted path.
    json node = value;
    std::size_t end = path.size();
    while (true) {
        const auto dot = path.rfind('.', end - 1);
        const std::size_t start = (dot == std::string::npos) ? 0 : dot + 1;
        const std::string key = path.substr(start, end - start);
        if (key.empty())
            throw ValidationError("override has an empty path segment: '" + kv + "'");
        node = json{{key, node}};
        if (dot == std::string::npos) break;
        end = dot;
    }
    return node;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t config_hash(const nlohmann::json& canonical) {
    return fnv1a(canonical.dump());
}

} // namespace mashvco
