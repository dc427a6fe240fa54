// mashvco: behavioral simulator and analysis toolkit for an open-loop
// two-stage VCO ADC with digital nonlinearity correction.
#include <bit>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mashvco/config_io.hpp"
#include "mashvco/decimate.hpp"
#include "mashvco/experiments.hpp"
#include "mashvco/lut.hpp"
#include "mashvco/nlmodel.hpp"
#include "mashvco/sinefit.hpp"
#include "mashvco/theory.hpp"

namespace {

using namespace mashvco;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitBreach = 3;

struct RunArgs {
    std::string spec;
    std::string out_dir;
    std::vector<std::string> sets;
    long long seed = -1;
    unsigned workers = 0;
    bool no_streams = false;
};

int cmd_run(const RunArgs& a) {
    std::vector<std::string> overrides = a.sets;
    if (a.seed >= 0)
        overrides.push_back("config.seed=" + std::to_string(a.seed));
    const auto spec = resolve_spec(a.spec, overrides);
    RunOptions opt;
    opt.output_dir = a.out_dir;
    opt.max_workers = a.workers;
    opt.save_streams = !a.no_streams;
    const RunManifest man = run_experiment(spec, opt);
    std::printf("%s (%s) -> %s\n", man.name.c_str(), man.kind.c_str(),
                man.output_dir.c_str());
    std::printf("  config hash %s, seed %llu\n", man.config_hash.c_str(),
                static_cast<unsigned long long>(man.seed));
    for (const auto& [k, v] : man.headline)
        std::printf("  %-28s %14.4f\n", k.c_str(), v);
    return kExitOk;
}

int cmd_list() {
    for (const auto& r : bundled_recipes())
        std::printf("%-18s %s\n", r.name.c_str(), r.summary.c_str());
    return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b, double tol) {
    const CompareReport rep = compare_manifests(a, b, tol);
    std::printf("%s: tolerance %.3f dB\n", rep.name.c_str(), rep.tolerance_db);
    std::printf("%-28s %14s %14s %10s\n", "key", "a", "b", "delta");
    for (const auto& row : rep.rows)
        std::printf("%-28s %14.4f %14.4f %10.4f%s\n", row.key.c_str(), row.a,
                    row.b, row.delta, row.breach ? "  BREACH" : "");
    if (rep.breach) {
        std::fprintf(stderr, "comparison breached tolerance\n");
        return kExitBreach;
    }
    return kExitOk;
}

int cmd_theory(const std::vector<double>& osr, double amp_fraction,
               const std::string& out) {
    for (double v : osr)
        if (!(v >= 1.0))
            throw ValidationError("theory --osr: values must be >= 1");
    TheoryParams p;
    p.amplitude_fraction = amp_fraction;
    const auto rows = sqnr_curve(p, osr);
    if (!out.empty()) write_sqnr_curve_csv(out, rows);
    std::printf("%8s %16s %16s\n", "osr", "single_db", "mash_db");
    for (const auto& r : rows)
        std::printf("%8g %16.4f %16.4f\n", r.osr, r.single_db, r.mash_db);
    return kExitOk;
}

struct CalArgs {
    std::string capture;
    std::string out;
    double freq = 0.0; // 0: take the strongest bin
    std::vector<unsigned> orders = {5, 5, 2};
    unsigned harmonics = 5;
    std::string lut_json;
    std::string hex_a;
    std::string hex_b;
};

int cmd_calibrate(const CalArgs& a) {
    if (a.orders.size() != 3)
        throw ValidationError("--orders wants three values: poly,delta,outer");
    SampleStream s = read_csv(a.capture);
    const std::size_t nf = std::bit_floor(s.size());
    if (nf < 16) throw ValidationError("capture too short to calibrate");
    s.samples.resize(nf);

    double f = a.freq;
    if (f <= 0.0) {
        const auto sp = spectrum(s, nf);
        std::size_t peak = 1;
        for (std::size_t k = 2; k < sp.power_db.size(); ++k)
            if (sp.power_db[k] > sp.power_db[peak]) peak = k;
        f = sp.freq[peak];
    }
    const Decomposition parts = decompose(s, f, a.harmonics);
    SampleStream d_cl = parts.signal;
    for (std::size_t i = 0; i < d_cl.size(); ++i)
        d_cl.samples[i] += parts.distortion.samples[i];

    const NlModel model =
        fit_nl(d_cl, parts.distortion, {a.orders[0], a.orders[1], a.orders[2]});
    write_nlmodel_json(a.out, model);
    std::printf("fit: tone %.6g Hz, rms %.3e (normalized), %u iterations\n",
                parts.fundamental.freq, model.fit_rms, model.iterations);
    std::printf("model -> %s\n", a.out.c_str());

    if (!a.lut_json.empty() || !a.hex_a.empty() || !a.hex_b.empty()) {
        const CorrectionLUT lut = build_lut(model);
        if (!a.lut_json.empty()) {
            write_lut_json(a.lut_json, lut);
            std::printf("lut -> %s\n", a.lut_json.c_str());
        }
        if (!a.hex_a.empty() != !a.hex_b.empty())
            throw ValidationError("--hex-a and --hex-b go together");
        if (!a.hex_a.empty()) {
            write_lut_hex(lut, a.hex_a, a.hex_b);
            std::printf("lut words -> %s, %s\n", a.hex_a.c_str(), a.hex_b.c_str());
        }
    }
    return kExitOk;
}

struct CorrectArgs {
    std::string in;
    std::string model;
    std::string out;
    bool fixed = false;
    unsigned pre = 1;
    unsigned post = 1;
};

int cmd_correct(const CorrectArgs& a) {
    const SampleStream d = read_csv(a.in);
    const NlModel model = read_nlmodel_json(a.model);
    const DecimationSpec dec = make_decimation_spec(a.pre, a.post);
    CorrectionResult res;
    if (a.fixed) {
        const CorrectionLUT lut = build_lut(model);
        res = correct(d, lut, dec);
        std::printf("fixed-point: %llu domain clamps, %llu saturations\n",
                    static_cast<unsigned long long>(res.domain_clamps),
                    static_cast<unsigned long long>(res.saturations));
    } else {
        res = correct_float(d, model, dec);
    }
    write_csv(res.corrected, a.out);
    std::printf("corrected %zu samples at %.6g Hz -> %s\n",
                res.corrected.size(), res.corrected.rate, a.out.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VCO ADC simulator: two open-loop oscillator stages, digital "
                 "recombination, nonlinearity calibration"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "execute a bundled recipe or spec file");
    run->add_option("spec", run_args.spec, "recipe name or spec JSON path")
        ->required();
    run->add_option("--out", run_args.out_dir, "output directory");
    run->add_option("--seed", run_args.seed, "override config.seed");
    run->add_option("--workers", run_args.workers, "sweep worker pool size");
    run->add_option("--set", run_args.sets,
                    "key=value override, dotted paths (config.seed=3)")
        ->take_all();
    run->add_flag("--no-streams", run_args.no_streams,
                  "skip writing sample stream CSVs");

    auto* list = app.add_subcommand("list", "show bundled recipes");

    std::string cmp_a, cmp_b;
    double cmp_tol = 0.5;
    auto* cmp = app.add_subcommand("compare", "diff two run manifests");
    cmp->add_option("a", cmp_a, "manifest.json a")->required();
    cmp->add_option("b", cmp_b, "manifest.json b")->required();
    cmp->add_option("--tol-db", cmp_tol, "allowed |delta| on *_db keys");

    std::vector<double> osr_values;
    double amp_fraction = 1.0;
    std::string theory_out;
    auto* theory = app.add_subcommand("theory", "closed-form SQNR limits");
    theory->add_option("--osr", osr_values, "oversampling ratios")
        ->required()
        ->delimiter(',');
    theory->add_option("--amp-fraction", amp_fraction,
                       "input amplitude relative to full range");
    theory->add_option("--out", theory_out, "also write a CSV");

    CalArgs cal_args;
    auto* cal = app.add_subcommand(
        "calibrate", "fit a correction model from a captured code stream");
    cal->add_option("--capture", cal_args.capture, "input stream CSV")->required();
    cal->add_option("--out", cal_args.out, "model JSON path")->required();
    cal->add_option("--freq", cal_args.freq,
                    "tone frequency in Hz (default: strongest bin)");
    cal->add_option("--orders", cal_args.orders, "poly,delta,outer orders")
        ->delimiter(',');
    cal->add_option("--harmonics", cal_args.harmonics, "harmonics in the fit");
    cal->add_option("--lut", cal_args.lut_json, "also write the 512-entry LUT JSON");
    cal->add_option("--hex-a", cal_args.hex_a, "LUT A hex words path");
    cal->add_option("--hex-b", cal_args.hex_b, "LUT B hex words path");

    CorrectArgs cor_args;
    auto* cor = app.add_subcommand("correct", "apply a correction model to a stream");
    cor->add_option("--in", cor_args.in, "input stream CSV")->required();
    cor->add_option("--model", cor_args.model, "model JSON from calibrate")->required();
    cor->add_option("--out", cor_args.out, "corrected stream CSV")->required();
    cor->add_flag("--fixed", cor_args.fixed,
                  "use the 14-bit LUT pipeline instead of float");
    cor->add_option("--pre", cor_args.pre, "decimation before correction");
    cor->add_option("--post", cor_args.post, "decimation after correction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (list->parsed()) return cmd_list();
        if (cmp->parsed()) return cmd_compare(cmp_a, cmp_b, cmp_tol);
        if (theory->parsed())
            return cmd_theory(osr_values, amp_fraction, theory_out);
        if (cal->parsed()) return cmd_calibrate(cal_args);
        if (cor->parsed()) return cmd_correct(cor_args);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
