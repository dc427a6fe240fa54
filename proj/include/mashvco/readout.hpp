#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "mashvco/phase.hpp"

namespace mashvco {

// Two-deep sampled history per phase: first flip-flop output (the held
// level driving the error estimator) and the previous clock's value.
struct QsdState {
    std::vector<std::uint8_t> sampled_level;
    std::vector<std::uint8_t> prev_sampled;
};

QsdState make_qsd_state(std::span<const std::uint8_t> initial_levels);

struct PulseWidthErrors {
    std::vector<double> tr; // delay applied to rising edges, per phase
    std::vector<double> tf; // delay applied to falling edges, per phase
};

// Linear skew gradient across the bank: tr_i - tf_i = max_skew*i/(n_phi-1),
// realized as tf = 0, tr = gradient.
PulseWidthErrors gradient_pw_errors(unsigned n_phi, double max_skew);

// Regenerative-latch stand-in: a phase toggling within edge_proximity of the
// clock resolves late by min(t_max, tau*ln(ts/edge_proximity)).
struct MetastabilityModel {
    double tau = 2e-12;
    double t_max = 0.0; // 0 means "half a clock period" at use time
    bool enabled = false;
};

double metastability_delay(const MetastabilityModel& m, double ts,
                           double edge_proximity);

struct QsdOutput {
    std::vector<std::uint8_t> d_bits; // sampled_level XOR prev_sampled
    std::vector<double> zoh_delay;    // seconds the held update lags the clock
};

// Clocks the QSD: captures the bank levels, emits per-phase difference bits
// (both VCO edge directions count), and reports how late each held level
// becomes available when metastability is on.
QsdOutput qsd_sample(QsdState& st, std::span<const std::uint8_t> levels,
                     const MetastabilityModel& meta,
                     std::span<const double> edge_proximity, double ts);

// e = w XOR w_zoh with rising edges delayed tr_i and falling edges delayed
// tf_i; e_bar generated symmetrically from the complement (so its rising
// edges, which are e's falling ones, also get tr_i). Pulses squeezed to
// nonpositive width by the shifts collapse legally. Shifted edges may land
// past the interval the inputs covered; callers own the spill.
struct ErrorPair {
    EdgeWaveform e;
    EdgeWaveform e_bar;
};
ErrorPair estimate_error(const EdgeWaveform& w, const EdgeWaveform& w_zoh,
                         const PulseWidthErrors& pw, unsigned i);

// Integer staircase, the multi-bit counter view of the error bank.
struct StepWaveform {
    int initial_value = 0;
    std::vector<std::pair<double, int>> steps; // (time, new value)
};

StepWaveform sum_error_bits(std::span<const EdgeWaveform> bits);

// Time integrals, used for pulse-area checks and the exact second-stage
// drive integration.
double waveform_area(const EdgeWaveform& w, double t0, double t1);
double step_integral(const StepWaveform& w, double t0, double t1);

// Plumbing shared with the fused simulation path.
EdgeWaveform xor_waveforms(const EdgeWaveform& a, const EdgeWaveform& b);
EdgeWaveform apply_pulse_shifts(const EdgeWaveform& w, double t_rise,
                                double t_fall);

} // namespace mashvco
