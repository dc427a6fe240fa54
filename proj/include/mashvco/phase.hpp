#pragma once
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mashvco/tuning.hpp"

namespace mashvco {

// Accumulated oscillator phase. theta counts whole VCO cycles (monotone,
// unbounded) and starts at initial_offset. The edge bookkeeping runs on
// u = 2*n_phi*theta: every unit crossing of u toggles exactly one of the
// n_phi output phases, so floor(u) is the total edge count since t = 0.
struct PhaseState {
    double theta = 0.0;
    unsigned n_phi = 32;
    double initial_offset = 0.0; // cycles, [0,1)

    double u() const { return 2.0 * static_cast<double>(n_phi) * theta; }
};

PhaseState make_phase_state(unsigned n_phi, double initial_offset_cycles);

// Level of phase i: floor((u+i)/n_phi) mod 2. Phases divide one VCO period
// into 2*n_phi equal steps; consecutive phases toggle in strict alternation.
std::uint8_t phase_level(const PhaseState& st, unsigned i);
std::vector<std::uint8_t> phase_levels(const PhaseState& st);

struct PhaseEdge {
    double time = 0.0; // absolute seconds
    std::uint32_t phase = 0;
    std::uint8_t new_level = 0;
};

// Per-phase square wave as a transition list (times strictly increasing,
// levels alternating).
struct EdgeWaveform {
    std::uint8_t initial_level = 0;
    std::vector<std::pair<double, std::uint8_t>> transitions;

    std::uint8_t value_at(double t) const; // level holding at time t
};

struct PfmInfo {
    double f_eff = 0.0; // 2*n_phi*f0: rest rate of the combined edge stream
};
PfmInfo pfm_info(const TuningCurve& curve, unsigned n_phi);

struct InnerGrid {
    unsigned points_per_period = 32;
};

// Advances phase across [t0, t1] for a sampled continuous drive.
// node_values holds the drive at the n_cells+1 uniform grid nodes
// (trapezoidal integration per cell; crossings by inverse linear
// interpolation inside a cell). extra_cycles, when non-empty (size
// n_cells), adds exact extra phase per cell - used for drive-slope terms
// integrated in closed form. Edges are appended in chronological order.
// Throws when a cell advances u by more than n_phi (a phase would toggle
// twice inside one interpolation cell: the grid is too coarse).
void advance_phase(PhaseState& st, const TuningCurve& curve,
                   std::span<const double> node_values, double t0, double t1,
                   std::vector<PhaseEdge>& edges,
                   std::span<const double> extra_cycles = {},
                   bool* clamped = nullptr);

struct PwcSegment {
    double t_start = 0.0;
    double value = 0.0;
};

// Piecewise-constant drive: integration and crossing times are exact, so an
// arbitrarily long segment is fine. Segments must be time-ordered starting
// at the interval origin; the last one runs to t1.
void advance_phase_pwc(PhaseState& st, const TuningCurve& curve,
                       std::span<const PwcSegment> segments, double t1,
                       std::vector<PhaseEdge>& edges,
                       bool* clamped = nullptr);

// Splits a chronological edge stream into per-phase waveforms given the
// bank's levels at the interval start.
std::vector<EdgeWaveform> per_phase_waveforms(
    std::span<const std::uint8_t> initial_levels,
    std::span<const PhaseEdge> edges);

} // namespace mashvco
