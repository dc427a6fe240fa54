#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mashvco/metrics.hpp"
#include "mashvco/phase.hpp"
#include "mashvco/readout.hpp"
#include "mashvco/stream.hpp"
#include "mashvco/tuning.hpp"

namespace mashvco {

enum class Architecture { single_stage, mash_se, mash_cc };

std::string_view to_string(Architecture a);
Architecture architecture_from_string(std::string_view s);

// Amplitude of the full-scale reference sine: 900 mVpp. All dBFS figures
// refer to it; the nominal 750 mVpp test tone sits at -1.58 dBFS.
constexpr double kFullScaleAmpVolts = 0.45;

struct SimConfig {
    double fs = 3.5e9;
    unsigned osr = 16;
    unsigned n_phi1 = 32;
    unsigned n_phi2 = 32;
    TuningCurve curve1 = tuning_preset("stage1_linear");
    TuningCurve curve2 = tuning_preset("stage2_linear");
    Architecture architecture = Architecture::mash_cc;
    bool differential_stage1 = true;
    std::vector<Tone> stimulus; // differential volts about the curve midpoint
    double stimulus_offset = 0.0;
    std::size_t n_samples = 131072;
    PulseWidthErrors pw_errors;       // empty = ideal timing
    MetastabilityModel metastability; // disabled by default
    std::optional<double> thermal_snr_target_db;
    double thermal_sigma_override = 0.0; // volts; >0 skips the sizing loop
    // Extra stage-1 phase P(v) in cycles (polynomial in the channel input);
    // models tuning nonlinearity that rides on the drive slope, integrated
    // in closed form as differences of P.
    std::vector<double> stage1_deriv_poly;
    std::uint64_t seed = 0;
    InnerGrid grid;
    std::optional<double> g_override; // sweeps only; default policy is g_opt
    bool keep_e_trace = false;
};

void validate(const SimConfig& cfg); // throws std::invalid_argument

struct NcfGain {
    double g = 1.0;
};

// fs*n_phi1/(2*n_phi2*f_range2), with f_range2 the nominal span of curve2.
NcfGain g_opt(const SimConfig& cfg);

// d[k] = d1[k] + g*(d2[k] - d2[k-1]), d2[-1] = d2[0]. Same length as inputs.
SampleStream ncf_combine(const SampleStream& d1, const SampleStream& d2,
                         NcfGain g);

// Full-scale sine amplitude expressed in first-stage output codes.
double full_scale_code_amp(const SimConfig& cfg);

struct SimResult {
    SampleStream d1; // n_samples+1 entries
    SampleStream d2; // n_samples+1 entries
    SampleStream d;  // n_samples entries (combination latency absorbed)
    SampleStream e_trace; // per-clock mean of the positive stage-2 drive
    double g_used = 0.0;
    double thermal_sigma = 0.0; // volts actually injected
    std::uint64_t clamp_events = 0;
    SimConfig config;
};

SimResult simulate(const SimConfig& cfg);

// Sizes white input-referred noise so a first-stage-only run of this config
// measures thermal_snr_target_db (excess over the quantization-only floor).
double thermal_sigma_for_target(const SimConfig& cfg);

enum class SweepParam { n_phi1, g_rel_mismatch, pw_max_skew, amplitude, f_in };

std::string_view to_string(SweepParam p);
SweepParam sweep_param_from_string(std::string_view s);

// Stage-2 drive spans [0, n_phi1] counts; when n_phi1 changes, the curve
// keeps its nominal span and center but covers the new count range.
TuningCurve rescale_stage2_range(TuningCurve curve, unsigned n_phi1);

SimConfig apply_sweep_value(SimConfig base, SweepParam param, double value);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    Metrics metrics;
    double g_used = 0.0;
    std::string error;
};

struct SweepOptions {
    std::size_t n_fft = 0;    // 0: largest power of two <= d length
    unsigned osr = 0;         // 0: config osr
    unsigned n_harmonics = 5;
    unsigned max_workers = 0; // 0: hardware concurrency
};

// One simulate+metrics per value; per-point failures are recorded in the
// row and the sweep continues. Row order follows the value order.
std::vector<SweepRow> sweep(const SimConfig& base, SweepParam param,
                            std::span<const double> values,
                            const SweepOptions& opt = {});

} // namespace mashvco
