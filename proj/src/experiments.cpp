#include "mashvco/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <utility>

#include "mashvco/decimate.hpp"
#include "mashvco/lut.hpp"
#include "mashvco/nlmodel.hpp"
#include "mashvco/sinefit.hpp"
#include "mashvco/theory.hpp"

namespace mashvco {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string gstr(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string csv_safe(std::string s) {
    for (auto& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    return s;
}

std::string iso_utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

// ---------------------------------------------------------------- recipes

// All bundled captures run at the nominal clock with a 2^17 record, so any
// tone snapped here stays coherent after every power-of-two decimation.
constexpr double kRecipeFs = 3.5e9;
constexpr std::size_t kRecipeFft = 131072;

double snapped(double f) {
    return coherent_bin_frequency(f, kRecipeFs, kRecipeFft);
}

json tone_json(double amp, double freq) {
    return json{{"amp", amp}, {"freq", freq}, {"phase_rad", 0.0}};
}

json spec_head(const char* name, const char* kind) {
    return json{{"schema", 1}, {"name", name}, {"kind", kind}};
}

json recipe_fig5_theory() {
    json s = spec_head("fig5_theory", "theory");
    s["config"] = json::object();
    s["theory"] = {{"osr_values", {2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0}},
                   {"amplitude_fraction", 1.0}};
    return s;
}

json recipe_fig7_nphi1_sweep() {
    json s = spec_head("fig7_nphi1_sweep", "sweep");
    s["config"] = {{"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    s["sweep"] = {{"param", "n_phi1"},
                  {"values", {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}}};
    return s;
}

json recipe_nl_leakage() {
    json s = spec_head("nl_leakage", "set");
    s["config"] = {{"architecture", "mash_se"},
                   {"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    s["variants"] = json::array({
        json{{"name", "ideal"}, {"config", {{"curve2", "stage2_linear"}}}},
        json{{"name", "bent"}, {"config", {{"curve2", "stage2_inl18"}}}},
    });
    s["derive"] = json::array({json{{"key", "leakage_loss_db"},
                                    {"op", "sub"},
                                    {"a", "ideal.sndr_db"},
                                    {"b", "bent.sndr_db"}}});
    return s;
}

json recipe_crosscoupling() {
    json s = spec_head("crosscoupling", "set");
    s["config"] = {{"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    s["variants"] = json::array({
        json{{"name", "ideal"}, {"config", {{"curve2", "stage2_linear"}}}},
        json{{"name", "bent"}, {"config", {{"curve2", "stage2_inl18"}}}},
    });
    s["derive"] = json::array({json{{"key", "cc_loss_db"},
                                    {"op", "sub"},
                                    {"a", "ideal.sndr_db"},
                                    {"b", "bent.sndr_db"}}});
    return s;
}

json recipe_pw_stress() {
    // Ideal tuning curves throughout: the reference runs are the clean
    // architecture baselines, so the losses isolate the skew itself instead of
    // mixing in curve distortion.
    json s = spec_head("pw_stress", "set");
    s["config"] = {{"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    const json skew = {{"max_skew", 75e-12}};
    s["variants"] = json::array({
        json{{"name", "se_ref"}, {"config", {{"architecture", "mash_se"}}}},
        json{{"name", "se_skew"},
             {"config", {{"architecture", "mash_se"}, {"pw_errors", skew}}}},
        json{{"name", "cc_ref"}, {"config", json::object()}},
        json{{"name", "cc_skew"}, {"config", {{"pw_errors", skew}}}},
    });
    s["derive"] = json::array({
        json{{"key", "se_loss_db"}, {"op", "sub"}, {"a", "se_ref.sndr_db"}, {"b", "se_skew.sndr_db"}},
        json{{"key", "cc_loss_db"}, {"op", "sub"}, {"a", "cc_ref.sndr_db"}, {"b", "cc_skew.sndr_db"}},
    });
    return s;
}

json recipe_g_sweep() {
    json s = spec_head("g_sweep", "sweep");
    s["config"] = {{"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    s["sweep"] = {{"param", "g_rel_mismatch"},
                  {"values", {-0.13, -0.10, -0.06, -0.03, 0.0, 0.03, 0.06, 0.10, 0.13}}};
    return s;
}

json recipe_dr_sweep() {
    json s = spec_head("dr_sweep", "sweep");
    s["config"] = {{"stimulus", json::array({tone_json(0.375, snapped(31.25e6))})}};
    json values = json::array();
    for (double db : {-60.0, -50.0, -40.0, -30.0, -25.0, -20.0, -15.0, -10.0,
                      -6.0, -3.0, -1.58, 0.0})
        values.push_back(kFullScaleAmpVolts * std::pow(10.0, db / 20.0));
    s["sweep"] = {{"param", "amplitude"}, {"values", values}};
    return s;
}

// Bent first stage for the calibration demos: a compressive cubic sized for
// roughly -40 dB third harmonic at the 750 mVpp tone, plus a slope-dependent
// phase term that makes the bend frequency-dependent.
json bent_stage1_config(double tone_freq) {
    json curve1 = {{"name", "stage1_bent"},
                   {"f0", 1.0e9},
                   {"gain_k", 1.21e9 / 0.75},
                   {"nl_poly", {0.0, 0.0, 0.0, -9.7e7}},
                   {"x_min", -0.375},
                   {"x_max", 0.375}};
    return json{{"curve1", curve1},
                {"stage1_deriv_poly", {0.0, 0.0, 0.0, 1.84}},
                {"stimulus", json::array({tone_json(0.375, tone_freq)})},
                // 2^17 plus filter headroom: the pre-decimated record still
                // holds a full 2^15 window after edge trimming.
                {"n_samples", 132096},
                {"thermal_snr_target_db", 71.0}};
}

json recipe_cal_demo() {
    json s = spec_head("cal_demo", "calibration");
    s["config"] = bent_stage1_config(snapped(26.5e6));
    s["cal"] = {{"orders", {5, 5, 2}}, {"pre", 4}, {"post", 4}};
    return s;
}

json recipe_twotone() {
    json s = recipe_cal_demo();
    s["name"] = "twotone";
    const double amp = kFullScaleAmpVolts * std::pow(10.0, -8.5 / 20.0);
    s["cal"]["apply"] = {{"stimulus", json::array({
                              tone_json(amp, snapped(85e6)),
                              tone_json(amp, snapped(89.99e6)),
                          })}};
    return s;
}

const std::vector<RecipeInfo>& recipe_table() {
    static const std::vector<RecipeInfo> t = {
        {"fig5_theory", "closed-form quantization limits vs OSR for one stage and the cascade"},
        {"fig7_nphi1_sweep", "SNDR vs first-stage phase count at OSR 16"},
        {"nl_leakage", "single-ended cascade: bent second stage leaking shaped noise"},
        {"crosscoupling", "cross-coupled second stage canceling the even-order bend"},
        {"pw_stress", "readout pulse-width gradient, both architectures vs their clean baselines"},
        {"g_sweep", "SNDR vs relative recombination gain mismatch"},
        {"dr_sweep", "SNDR vs input amplitude; reports the usable dynamic range"},
        {"cal_demo", "single-tone fit, LUT build, fixed-point correction, before/after SNDR"},
        {"twotone", "two-tone verification reusing the single-tone calibration"},
    };
    return t;
}

// ------------------------------------------------------------- validation

[[noreturn]] void bad(const std::string& why) { throw ValidationError(why); }

void check_name_component(const std::string& s, const char* what) {
    if (s.empty()) bad(std::string(what) + ": empty name");
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
              c == '-' || c == '.'))
            bad(std::string(what) + " '" + s + "': use [A-Za-z0-9_.-] only");
    if (s.find("..") != std::string::npos)
        bad(std::string(what) + " '" + s + "': '..' not allowed");
}

bool is_pow2(unsigned long long v) { return v != 0 && (v & (v - 1)) == 0; }

struct AnalysisOpt {
    unsigned osr = 0;        // 0: config osr
    std::size_t n_fft = 0;   // 0: largest power of two that fits
    Window window = Window::rectangular;
    unsigned n_harmonics = 5;
};

AnalysisOpt parse_analysis(const json& spec) {
    AnalysisOpt an;
    if (!spec.contains("analysis")) return an;
    const json& a = spec.at("analysis");
    if (!a.is_object()) bad("analysis: expected an object");
    for (const auto& [k, v] : a.items()) {
        if (k == "osr") {
            if (!v.is_number_unsigned() || v.get<unsigned>() == 0)
                bad("analysis.osr: positive integer expected");
            an.osr = v.get<unsigned>();
        } else if (k == "n_fft") {
            if (!v.is_number_unsigned() || !is_pow2(v.get<std::uint64_t>()))
                bad("analysis.n_fft: power of two expected");
            an.n_fft = v.get<std::size_t>();
        } else if (k == "window") {
            const std::string w = v.is_string() ? v.get<std::string>() : "";
            if (w == "rect" || w == "rectangular")
                an.window = Window::rectangular;
            else if (w == "hann")
                an.window = Window::hann;
            else
                bad("analysis.window: 'rect' or 'hann'");
        } else if (k == "n_harmonics") {
            if (!v.is_number_unsigned() || v.get<unsigned>() < 1)
                bad("analysis.n_harmonics: positive integer expected");
            an.n_harmonics = v.get<unsigned>();
        } else {
            bad("analysis." + k + ": unknown key");
        }
    }
    return an;
}

void check_derive(const json& spec) {
    if (!spec.contains("derive")) return;
    const json& d = spec.at("derive");
    if (!d.is_array()) bad("derive: expected an array");
    for (const auto& e : d) {
        if (!e.is_object() || !e.contains("key") || !e.contains("a") ||
            !e.contains("b"))
            bad("derive: entries need key, a, b");
        if (e.value("op", "sub") != std::string("sub"))
            bad("derive.op: only 'sub' is defined");
        for (const char* f : {"key", "a", "b"})
            if (!e.at(f).is_string()) bad(std::string("derive.") + f + ": string expected");
    }
}

void check_spec(const json& spec) {
    if (!spec.is_object()) bad("spec: expected a JSON object");
    static const std::set<std::string> known = {
        "schema", "name",     "kind",   "config", "analysis", "theory",
        "sweep",  "variants", "derive", "cal",    "output_dir"};
    for (const auto& [k, v] : spec.items())
        if (!known.count(k)) bad("spec: unknown key '" + k + "'");
    if (spec.contains("schema") &&
        (!spec.at("schema").is_number_integer() || spec.at("schema") != 1))
        bad("spec.schema: unsupported version (expected 1)");
    if (!spec.contains("name") || !spec.at("name").is_string())
        bad("spec.name: required string");
    check_name_component(spec.at("name").get<std::string>(), "spec.name");
    if (!spec.contains("kind") || !spec.at("kind").is_string())
        bad("spec.kind: required string");
    const std::string kind = spec.at("kind").get<std::string>();
    static const std::set<std::string> kinds = {"theory", "single", "set",
                                                "sweep", "calibration"};
    if (!kinds.count(kind))
        bad("spec.kind: '" + kind +
            "' (expected theory|single|set|sweep|calibration)");
    if (spec.contains("config") && !spec.at("config").is_object())
        bad("spec.config: expected an object");
    parse_analysis(spec);

    if (kind == "theory") {
        if (!spec.contains("theory") || !spec.at("theory").is_object())
            bad("theory spec needs a 'theory' section");
        const json& t = spec.at("theory");
        for (const auto& [k, v] : t.items()) {
            if (k == "osr_values") {
                if (!v.is_array() || v.empty())
                    bad("theory.osr_values: nonempty array expected");
                for (const auto& x : v)
                    if (!x.is_number() || x.get<double>() < 1.0)
                        bad("theory.osr_values: numbers >= 1 expected");
            } else if (k == "amplitude_fraction") {
                if (!v.is_number() || v.get<double>() <= 0.0)
                    bad("theory.amplitude_fraction: positive number expected");
            } else {
                bad("theory." + k + ": unknown key");
            }
        }
        if (!t.contains("osr_values")) bad("theory.osr_values: required");
    } else if (kind == "sweep") {
        if (!spec.contains("sweep") || !spec.at("sweep").is_object())
            bad("sweep spec needs a 'sweep' section");
        const json& s = spec.at("sweep");
        for (const auto& [k, v] : s.items()) {
            if (k == "param") {
                if (!v.is_string()) bad("sweep.param: string expected");
                try {
                    sweep_param_from_string(v.get<std::string>());
                } catch (const std::exception& e) {
                    bad(std::string("sweep.param: ") + e.what());
                }
            } else if (k == "values") {
                if (!v.is_array()) bad("sweep.values: array expected");
                for (const auto& x : v)
                    if (!x.is_number()) bad("sweep.values: numbers expected");
            } else {
                bad("sweep." + k + ": unknown key");
            }
        }
        if (!s.contains("param") || !s.contains("values"))
            bad("sweep: param and values are required");
    } else if (kind == "set") {
        if (!spec.contains("variants") || !spec.at("variants").is_array() ||
            spec.at("variants").empty())
            bad("set spec needs a nonempty 'variants' array");
        for (const auto& v : spec.at("variants")) {
            if (!v.is_object() || !v.contains("name") || !v.at("name").is_string())
                bad("variants: each entry needs a string 'name'");
            check_name_component(v.at("name").get<std::string>(), "variant name");
            if (v.contains("config") && !v.at("config").is_object())
                bad("variant config: expected an object");
            for (const auto& el : v.items())
                if (el.key() != "name" && el.key() != "config")
                    bad("variants." + el.key() + ": unknown key");
        }
        check_derive(spec);
    } else if (kind == "calibration") {
        if (!spec.contains("cal") || !spec.at("cal").is_object())
            bad("calibration spec needs a 'cal' section");
        const json& c = spec.at("cal");
        for (const auto& [k, v] : c.items()) {
            if (k == "orders") {
                if (!v.is_array() || v.size() != 3)
                    bad("cal.orders: [ni, nj, nk] expected");
                for (const auto& x : v)
                    if (!x.is_number_integer() || x.get<long long>() < 1)
                        bad("cal.orders: positive integers expected");
            } else if (k == "pre" || k == "post") {
                if (!v.is_number_integer() || v.get<long long>() < 2 ||
                    !is_pow2(static_cast<unsigned long long>(v.get<long long>())))
                    bad("cal." + k + ": power of two >= 2 expected");
            } else if (k == "apply") {
                if (!v.is_object()) bad("cal.apply: config overlay object expected");
            } else {
                bad("cal." + k + ": unknown key");
            }
        }
    }
}

// --------------------------------------------------------------- plumbing

struct OutDir {
    fs::path root;
    std::vector<std::string> files;
    std::string file(const std::string& rel) {
        files.push_back(rel);
        return (root / rel).string();
    }
};

json metrics_to_json(const Metrics& m) {
    return json{{"sndr_db", m.sndr_db},     {"snr_db", m.snr_db},
                {"sfdr_db", m.sfdr_db},     {"thd_db", m.thd_db},
                {"enob", m.enob},           {"signal_dbfs", m.signal_db},
                {"signal_freq_hz", m.signal_freq}, {"band_hz", m.band_hz},
                {"signal_bin", m.signal_bin}};
}

void put_metrics(RunManifest& man, const std::string& prefix, const Metrics& m) {
    man.headline[prefix + "sndr_db"] = m.sndr_db;
    man.headline[prefix + "snr_db"] = m.snr_db;
    man.headline[prefix + "sfdr_db"] = m.sfdr_db;
    man.headline[prefix + "signal_dbfs"] = m.signal_db;
}

std::size_t pick_n_fft(const AnalysisOpt& an, std::size_t available,
                       const char* what) {
    std::size_t n = an.n_fft ? an.n_fft : std::bit_floor(available);
    if (n < 2 || n > available)
        bad(std::string(what) + ": record too short for the requested FFT (" +
            std::to_string(available) + " samples)");
    return n;
}

// One simulate + spectrum + metrics pass, shared by single and set kinds.
Metrics run_capture(const SimConfig& cfg, const AnalysisOpt& an,
                    const std::string& file_prefix,
                    const std::string& key_prefix, OutDir& out,
                    RunManifest& man, json& metrics_json, bool save_streams) {
    if (cfg.stimulus.empty())
        bad("config.stimulus: this experiment kind needs a test tone");
    const SimResult r = simulate(cfg);
    const std::size_t n_fft = pick_n_fft(an, r.d.size(), "capture");
    const auto sp = spectrum(r.d, n_fft, 1, an.window, full_scale_code_amp(r.config));
    const Metrics m = metrics(sp, cfg.stimulus[0].freq,
                              an.osr ? an.osr : cfg.osr, an.n_harmonics);
    write_spectrum_csv(out.file(file_prefix + "spectrum.csv"), sp);
    if (save_streams) write_csv(r.d, out.file(file_prefix + "d.csv"));
    json mj = metrics_to_json(m);
    mj["g_used"] = r.g_used;
    mj["clamp_events"] = r.clamp_events;
    if (r.thermal_sigma > 0.0) mj["thermal_sigma_v"] = r.thermal_sigma;
    metrics_json = std::move(mj);
    put_metrics(man, key_prefix, m);
    man.headline[key_prefix + "g_used"] = r.g_used;
    return m;
}

// -------------------------------------------------------------- executors

void run_theory(const json& spec, const SimConfig& cfg, OutDir& out,
                RunManifest& man) {
    const json& t = spec.at("theory");
    TheoryParams p;
    p.fs = cfg.fs;
    p.osr = cfg.osr;
    p.n_phi1 = cfg.n_phi1;
    p.n_phi2 = cfg.n_phi2;
    p.f_range1 = cfg.curve1.gain_k * (cfg.curve1.x_max - cfg.curve1.x_min);
    p.f_range2 = cfg.curve2.gain_k * (cfg.curve2.x_max - cfg.curve2.x_min);
    p.f0_1 = cfg.curve1.f0;
    p.f0_2 = cfg.curve2.f0;
    p.amplitude_fraction = t.value("amplitude_fraction", 1.0);

    std::vector<double> osr_values;
    for (const auto& v : t.at("osr_values")) osr_values.push_back(v.get<double>());
    const auto rows = sqnr_curve(p, osr_values);
    write_sqnr_curve_csv(out.file("sqnr_vs_osr.csv"), rows);
    for (const auto& row : rows) {
        man.headline["single_osr" + gstr(row.osr) + "_db"] = row.single_db;
        man.headline["mash_osr" + gstr(row.osr) + "_db"] = row.mash_db;
    }
    man.headline["g_opt"] = g_opt(cfg).g;
    man.headline["pfm_center1_hz"] = pfm_sideband_center(cfg.n_phi1, cfg.curve1.f0);
}

void run_single(const json&, const SimConfig& cfg, const AnalysisOpt& an,
                OutDir& out, RunManifest& man, bool save_streams) {
    json mj;
    run_capture(cfg, an, "", "", out, man, mj, save_streams);
    auto f = open_out(out.file("metrics.json"));
    f << mj.dump(2) << '\n';
}

void run_set(const json& spec, const SimConfig& base, const AnalysisOpt& an,
             OutDir& out, RunManifest& man, bool save_streams) {
    json all = json::object();
    for (const auto& v : spec.at("variants")) {
        const std::string name = v.at("name").get<std::string>();
        if (all.contains(name)) bad("variants: duplicate name '" + name + "'");
        SimConfig cfg = base;
        if (v.contains("config")) {
            try {
                cfg = config_from_json(v.at("config"), base);
            } catch (const ValidationError& e) {
                bad("variant '" + name + "': " + e.what());
            }
        }
        json mj;
        run_capture(cfg, an, name + "_", name + ".", out, man, mj, save_streams);
        all[name] = std::move(mj);
    }
    if (spec.contains("derive")) {
        for (const auto& d : spec.at("derive")) {
            const std::string key = d.at("key").get<std::string>();
            const std::string a = d.at("a").get<std::string>();
            const std::string b = d.at("b").get<std::string>();
            if (!man.headline.count(a) || !man.headline.count(b))
                bad("derive '" + key + "': unknown headline key");
            man.headline[key] = man.headline.at(a) - man.headline.at(b);
        }
    }
    auto f = open_out(out.file("metrics.json"));
    f << all.dump(2) << '\n';
}

void run_sweep(const json& spec, const SimConfig& base, const AnalysisOpt& an,
               OutDir& out, RunManifest& man, const RunOptions& opt) {
    const json& sj = spec.at("sweep");
    const SweepParam param = sweep_param_from_string(sj.at("param").get<std::string>());
    std::vector<double> values;
    for (const auto& v : sj.at("values")) values.push_back(v.get<double>());

    SweepOptions sw;
    sw.n_fft = an.n_fft;
    sw.osr = an.osr;
    sw.n_harmonics = an.n_harmonics;
    sw.max_workers = opt.max_workers;
    const auto rows = sweep(base, param, values, sw);

    auto f = open_out(out.file("sweep.csv"));
    f << "value,ok,sndr_db,snr_db,sfdr_db,thd_db,enob,signal_dbfs,g_used,error\n";
    char line[256];
    for (const auto& r : rows) {
        if (r.ok) {
            std::snprintf(line, sizeof line,
                          "%.10g,1,%.4f,%.4f,%.4f,%.4f,%.3f,%.4f,%.8f,\n",
                          r.value, r.metrics.sndr_db, r.metrics.snr_db,
                          r.metrics.sfdr_db, r.metrics.thd_db, r.metrics.enob,
                          r.metrics.signal_db, r.g_used);
            f << line;
        } else {
            std::snprintf(line, sizeof line, "%.10g,0,,,,,,,,", r.value);
            f << line << csv_safe(r.error) << '\n';
        }
    }
    f.flush();
    if (!f) throw std::runtime_error("short write: sweep.csv");

    std::size_t n_ok = 0;
    const SweepRow* best = nullptr;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        ++n_ok;
        man.headline["sndr_db@" + gstr(r.value)] = r.metrics.sndr_db;
        if (!best || r.metrics.sndr_db > best->metrics.sndr_db) best = &r;
    }
    man.headline["points"] = static_cast<double>(rows.size());
    man.headline["points_ok"] = static_cast<double>(n_ok);
    if (best) {
        man.headline["peak_sndr_db"] = best->metrics.sndr_db;
        man.headline["peak_value"] = best->value;
    }

    // Usable range for amplitude sweeps: input level, in dB below full
    // scale, where SNDR crosses zero (linear interpolation between points).
    if (param == SweepParam::amplitude && n_ok >= 2) {
        std::vector<const SweepRow*> ok;
        for (const auto& r : rows)
            if (r.ok && r.value > 0.0) ok.push_back(&r);
        std::sort(ok.begin(), ok.end(), [](const SweepRow* x, const SweepRow* y) {
            return x->value < y->value;
        });
        auto dbfs = [](double v) { return 20.0 * std::log10(v / kFullScaleAmpVolts); };
        double dr = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < ok.size(); ++i) {
            if (ok[i]->metrics.sndr_db <= 0.0) continue;
            if (i == 0) {
                dr = -dbfs(ok[0]->value); // everything measured was usable
            } else {
                const double s0 = ok[i - 1]->metrics.sndr_db;
                const double s1 = ok[i]->metrics.sndr_db;
                const double x0 = dbfs(ok[i - 1]->value);
                const double x1 = dbfs(ok[i]->value);
                dr = -(x0 + (0.0 - s0) * (x1 - x0) / (s1 - s0));
            }
            break;
        }
        if (!std::isnan(dr)) man.headline["dynamic_range_db"] = dr;
    }
}

// In-band spur search that ignores the carrier bins themselves.
double max_inband_spur_db(const Spectrum& sp, std::span<const Tone> tones,
                          unsigned osr) {
    const double bw = sp.bin_width();
    const double band = sp.rate / (2.0 * osr);
    std::size_t last = static_cast<std::size_t>(std::floor(band / bw));
    last = std::min(last, sp.power_db.size() - 1);
    std::set<std::size_t> skip = {0};
    for (const auto& t : tones) {
        const auto k = static_cast<std::size_t>(std::llround(t.freq / bw));
        for (std::size_t d = 0; d < 2; ++d) {
            if (k >= d) skip.insert(k - d);
            skip.insert(k + d);
        }
    }
    double best = kSpectrumFloorDb;
    for (std::size_t k = 1; k <= last; ++k)
        if (!skip.count(k)) best = std::max(best, sp.power_db[k]);
    return best;
}

void run_calibration(const json& spec, const SimConfig& cfg,
                     const AnalysisOpt& an, OutDir& out, RunManifest& man,
                     bool save_streams) {
    const json& cal = spec.at("cal");
    NlOrders orders;
    if (cal.contains("orders")) {
        orders.ni = cal.at("orders")[0].get<unsigned>();
        orders.nj = cal.at("orders")[1].get<unsigned>();
        orders.nk = cal.at("orders")[2].get<unsigned>();
    }
    const unsigned pre = cal.value("pre", 4u);
    const unsigned post = cal.value("post", 4u);
    if (cfg.osr % pre != 0 || cfg.osr / pre < 1)
        bad("cal.pre must divide config.osr");
    const unsigned osr_mid = an.osr ? an.osr : cfg.osr / pre;
    if (cfg.stimulus.size() != 1)
        bad("calibration fit wants a single-tone capture; put extra tones in cal.apply");

    const DecimationSpec dec = make_decimation_spec(pre, post);
    const SimResult r = simulate(cfg);
    const double f_sig = cfg.stimulus[0].freq;
    const double fscale = full_scale_code_amp(r.config);

    {
        // Full-rate view of the capture, mostly for plotting.
        const std::size_t nf = std::bit_floor(r.d.size());
        write_spectrum_csv(out.file("spectrum_capture.csv"),
                           spectrum(r.d, nf, 1, an.window, fscale));
    }
    if (save_streams) write_csv(r.d, out.file("d.csv"));

    SampleStream dpre = apply_stages(r.d, dec.pre);
    const std::size_t n_use = pick_n_fft(an, dpre.size(), "pre-decimated capture");
    dpre.samples.resize(n_use);

    const Decomposition parts = decompose(dpre, f_sig, an.n_harmonics);
    SampleStream d_cl = parts.signal;
    d_cl.label = dpre.label + ".clean";
    for (std::size_t i = 0; i < n_use; ++i)
        d_cl.samples[i] += parts.distortion.samples[i];

    const NlModel model = fit_nl(d_cl, parts.distortion, orders);
    const CorrectionLUT lut = build_lut(model);
    write_nlmodel_json(out.file("model.json"), model);
    write_lut_json(out.file("lut.json"), lut);
    write_lut_hex(lut, out.file("lut_a.hex"), out.file("lut_b.hex"));

    auto mid_spectrum = [&](const SampleStream& s, const char* what) {
        if (s.size() < n_use)
            throw std::runtime_error(std::string(what) + ": corrected stream shorter than the analysis window");
        SampleStream t = s;
        t.samples.resize(n_use);
        return spectrum(t, n_use, 1, an.window, fscale);
    };

    const auto sp_uncal = mid_spectrum(dpre, "uncal");
    const Metrics m_uncal = metrics(sp_uncal, f_sig, osr_mid, an.n_harmonics);
    write_spectrum_csv(out.file("spectrum_uncal.csv"), sp_uncal);

    const CorrectionResult rf = correct_float(r.d, model, dec);
    const auto sp_float = mid_spectrum(rf.corrected_mid, "cal_float");
    const Metrics m_float = metrics(sp_float, f_sig, osr_mid, an.n_harmonics);
    write_spectrum_csv(out.file("spectrum_cal_float.csv"), sp_float);

    const CorrectionResult rx = correct(r.d, lut, dec);
    const auto sp_fixed = mid_spectrum(rx.corrected_mid, "cal_fixed");
    const Metrics m_fixed = metrics(sp_fixed, f_sig, osr_mid, an.n_harmonics);
    write_spectrum_csv(out.file("spectrum_cal_fixed.csv"), sp_fixed);
    if (save_streams) write_csv(rx.corrected, out.file("corrected.csv"));

    put_metrics(man, "uncal_", m_uncal);
    put_metrics(man, "cal_float_", m_float);
    put_metrics(man, "cal_fixed_", m_fixed);
    man.headline["fit_iterations"] = model.iterations;
    man.headline["fit_rms_norm"] = model.fit_rms;
    man.headline["domain_clamps"] = static_cast<double>(rx.domain_clamps);
    man.headline["saturations"] = static_cast<double>(rx.saturations);
    man.headline["g_used"] = r.g_used;
    if (r.thermal_sigma > 0.0) man.headline["thermal_sigma_v"] = r.thermal_sigma;

    json mj;
    mj["uncal"] = metrics_to_json(m_uncal);
    mj["cal_float"] = metrics_to_json(m_float);
    mj["cal_fixed"] = metrics_to_json(m_fixed);
    mj["fit"] = {{"iterations", model.iterations},
                 {"rms_norm", model.fit_rms},
                 {"norm_offset", model.norm_offset},
                 {"norm_scale", model.norm_scale},
                 {"domain_clamps", rx.domain_clamps},
                 {"saturations", rx.saturations}};

    if (cal.contains("apply")) {
        SimConfig vcfg;
        try {
            vcfg = config_from_json(cal.at("apply"), cfg);
        } catch (const ValidationError& e) {
            bad(std::string("cal.apply: ") + e.what());
        }
        if (vcfg.stimulus.empty()) bad("cal.apply: verification capture needs a stimulus");
        const SimResult vr = simulate(vcfg);
        const double vfs = full_scale_code_amp(vr.config);

        SampleStream vpre = apply_stages(vr.d, dec.pre);
        const std::size_t n_v = pick_n_fft(an, vpre.size(), "verify capture");
        vpre.samples.resize(n_v);
        const auto sp_vu = spectrum(vpre, n_v, 1, an.window, vfs);
        write_spectrum_csv(out.file("spectrum_verify_uncal.csv"), sp_vu);

        const CorrectionResult vx = correct(vr.d, lut, dec);
        if (vx.corrected_mid.size() < n_v)
            throw std::runtime_error("verify: corrected stream shorter than the analysis window");
        SampleStream vmid = vx.corrected_mid;
        vmid.samples.resize(n_v);
        const auto sp_vc = spectrum(vmid, n_v, 1, an.window, vfs);
        write_spectrum_csv(out.file("spectrum_verify_cal.csv"), sp_vc);

        json vj;
        if (vcfg.stimulus.size() >= 2) {
            const double spur_u = max_inband_spur_db(sp_vu, vcfg.stimulus, osr_mid);
            const double spur_c = max_inband_spur_db(sp_vc, vcfg.stimulus, osr_mid);
            man.headline["verify_spur_uncal_dbfs"] = spur_u;
            man.headline["verify_spur_cal_dbfs"] = spur_c;
            vj = {{"spur_uncal_dbfs", spur_u}, {"spur_cal_dbfs", spur_c}};
            const double bw = sp_vc.bin_width();
            for (std::size_t i = 0; i < vcfg.stimulus.size(); ++i) {
                const auto k = static_cast<std::size_t>(
                    std::llround(vcfg.stimulus[i].freq / bw));
                if (k < sp_vc.power_db.size())
                    vj["tone" + std::to_string(i + 1) + "_dbfs"] = sp_vc.power_db[k];
            }
        } else {
            const double f_v = vcfg.stimulus[0].freq;
            const Metrics mu = metrics(sp_vu, f_v, osr_mid, an.n_harmonics);
            const Metrics mc = metrics(sp_vc, f_v, osr_mid, an.n_harmonics);
            man.headline["verify_sndr_uncal_db"] = mu.sndr_db;
            man.headline["verify_sndr_cal_db"] = mc.sndr_db;
            vj = {{"uncal", metrics_to_json(mu)}, {"cal", metrics_to_json(mc)}};
        }
        man.headline["verify_domain_clamps"] = static_cast<double>(vx.domain_clamps);
        mj["verify"] = std::move(vj);
    }

    auto f = open_out(out.file("metrics.json"));
    f << mj.dump(2) << '\n';
}

json manifest_to_json(const RunManifest& m) {
    return json{{"schema", m.schema},       {"name", m.name},
                {"kind", m.kind},           {"timestamp", m.timestamp},
                {"seed", m.seed},           {"config_hash", m.config_hash},
                {"files", m.files},         {"headline", m.headline}};
}

} // namespace

// ----------------------------------------------------------------- public

std::vector<RecipeInfo> bundled_recipes() { return recipe_table(); }

bool is_bundled_recipe(const std::string& name) {
    for (const auto& r : recipe_table())
        if (r.name == name) return true;
    return false;
}

json recipe_spec(const std::string& name) {
    if (name == "fig5_theory") return recipe_fig5_theory();
    if (name == "fig7_nphi1_sweep") return recipe_fig7_nphi1_sweep();
    if (name == "nl_leakage") return recipe_nl_leakage();
    if (name == "crosscoupling") return recipe_crosscoupling();
    if (name == "pw_stress") return recipe_pw_stress();
    if (name == "g_sweep") return recipe_g_sweep();
    if (name == "dr_sweep") return recipe_dr_sweep();
    if (name == "cal_demo") return recipe_cal_demo();
    if (name == "twotone") return recipe_twotone();
    throw ValidationError("unknown recipe: " + name);
}

json resolve_spec(const std::string& name_or_path,
                  const std::vector<std::string>& kv_overrides) {
    json spec;
    if (is_bundled_recipe(name_or_path)) {
        spec = recipe_spec(name_or_path);
    } else {
        std::ifstream in(name_or_path);
        if (!in)
            throw ValidationError("not a bundled recipe and cannot open file: " +
                                  name_or_path);
        json user;
        try {
            in >> user;
        } catch (const std::exception& e) {
            throw ValidationError("spec parse (" + name_or_path + "): " + e.what());
        }
        if (!user.is_object()) throw ValidationError("spec: expected a JSON object");
        if (user.contains("recipe")) {
            if (!user.at("recipe").is_string())
                throw ValidationError("spec.recipe: string expected");
            spec = recipe_spec(user.at("recipe").get<std::string>());
            user.erase("recipe");
            merge_json(spec, user);
        } else {
            spec = std::move(user);
        }
    }
    for (const auto& kv : kv_overrides) {
        json overlay = parse_kv_override(kv);
        merge_json(spec, overlay);
    }
    return spec;
}

RunManifest run_experiment(const json& spec, const RunOptions& opt) {
    check_spec(spec);
    const std::string name = spec.at("name").get<std::string>();
    const std::string kind = spec.at("kind").get<std::string>();

    fs::path dir;
    if (!opt.output_dir.empty())
        dir = opt.output_dir;
    else if (spec.contains("output_dir"))
        dir = spec.at("output_dir").get<std::string>();
    else if (const char* env = std::getenv("MASHVCO_OUT"); env && *env)
        dir = fs::path(env) / name;
    else
        dir = fs::path("out") / name;
    fs::create_directories(dir);

    // The hash covers the resolved spec, not where it was written.
    json hashed = spec;
    hashed.erase("output_dir");

    const SimConfig cfg = spec.contains("config")
                              ? config_from_json(spec.at("config"))
                              : config_from_json(json::object());
    const AnalysisOpt an = parse_analysis(spec);

    RunManifest man;
    man.name = name;
    man.kind = kind;
    man.seed = cfg.seed;
    man.output_dir = dir.string();
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(hashed)));
    man.config_hash = hex;

    OutDir out{dir, {}};
    try {
        {
            auto f = open_out(out.file("spec.json"));
            f << spec.dump(2) << '\n';
        }
        if (kind == "theory")
            run_theory(spec, cfg, out, man);
        else if (kind == "single")
            run_single(spec, cfg, an, out, man, opt.save_streams);
        else if (kind == "set")
            run_set(spec, cfg, an, out, man, opt.save_streams);
        else if (kind == "sweep")
            run_sweep(spec, cfg, an, out, man, opt);
        else
            run_calibration(spec, cfg, an, out, man, opt.save_streams);

        man.timestamp = iso_utc_now();
        man.files = out.files;
        auto f = open_out((dir / "manifest.json").string());
        f << manifest_to_json(man).dump(2) << '\n';
    } catch (...) {
        std::error_code ec;
        for (const auto& rel : out.files) fs::remove(dir / rel, ec);
        fs::remove(dir / "manifest.json", ec);
        throw;
    }
    return man;
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("manifest parse (" + path + "): " + e.what());
    }
    try {
        RunManifest m;
        m.schema = j.at("schema").get<int>();
        if (m.schema != 1) throw ValidationError("manifest schema: expected 1");
        m.name = j.at("name").get<std::string>();
        m.kind = j.at("kind").get<std::string>();
        m.timestamp = j.value("timestamp", "");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        if (j.contains("files"))
            m.files = j.at("files").get<std::vector<std::string>>();
        for (const auto& [k, v] : j.at("headline").items()) {
            if (!v.is_number())
                throw ValidationError("manifest headline '" + k + "': number expected");
            m.headline[k] = v.get<double>();
        }
        m.output_dir = fs::path(path).parent_path().string();
        return m;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError("manifest fields (" + path + "): " + e.what());
    }
}

CompareReport compare_manifests(const std::string& manifest_a,
                                const std::string& manifest_b,
                                double tolerance_db) {
    const RunManifest a = read_manifest(manifest_a);
    const RunManifest b = read_manifest(manifest_b);
    if (a.name != b.name)
        throw ValidationError("manifests describe different experiments: '" +
                              a.name + "' vs '" + b.name + "'");
    CompareReport rep;
    rep.name = a.name;
    rep.tolerance_db = tolerance_db;
    std::set<std::string> keys;
    for (const auto& [k, v] : a.headline) keys.insert(k);
    for (const auto& [k, v] : b.headline) keys.insert(k);
    for (const auto& k : keys) {
        CompareRow row;
        row.key = k;
        const bool in_a = a.headline.count(k) != 0;
        const bool in_b = b.headline.count(k) != 0;
        row.a = in_a ? a.headline.at(k) : std::numeric_limits<double>::quiet_NaN();
        row.b = in_b ? b.headline.at(k) : std::numeric_limits<double>::quiet_NaN();
        row.delta = row.b - row.a;
        // Tolerance applies to decibel-valued keys; counters and raw values
        // ride along for information only. A key missing on one side is
        // always a breach.
        const bool db_key = k.find("_db") != std::string::npos;
        if (!in_a || !in_b)
            row.breach = true;
        else if (db_key)
            row.breach = !(std::abs(row.delta) <= tolerance_db);
        rep.breach = rep.breach || row.breach;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void write_spectrum_csv(const std::string& path, const Spectrum& sp) {
    auto out = open_out(path);
    out << "freq_hz,power_dbfs\n";
    char line[64];
    for (std::size_t k = 0; k < sp.freq.size(); ++k) {
        std::snprintf(line, sizeof line, "%.10g,%.4f\n", sp.freq[k],
                      sp.power_db[k]);
        out << line;
    }
    out.flush();
    if (!out) throw std::runtime_error("short write: " + path);
}

} // namespace mashvco
