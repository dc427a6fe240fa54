#include "mashvco/phase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mashvco {
namespace {

// Emits the toggle for every integer u crosses in (u_a, u_a+du], assuming u
// moves linearly across [t_a, t_a+dt]. Phase index follows from the residue
// of the crossed integer, the new level from its quotient parity.
void emit_crossings(double u_a, double du, double t_a, double dt,
                    unsigned n_phi, std::vector<PhaseEdge>& edges) {
    if (du <= 0.0) return;
    const auto m0 = static_cast<long long>(std::floor(u_a)) + 1;
    const auto m1 = static_cast<long long>(std::floor(u_a + du));
    if (m1 < m0) return;
    const auto n = static_cast<long long>(n_phi);
    for (long long m = m0; m <= m1; ++m) {
        PhaseEdge e;
        e.time = t_a + dt * (static_cast<double>(m) - u_a) / du;
        const long long r = ((m % n) + n) % n;
        const long long idx = (n - r) % n;
        e.phase = static_cast<std::uint32_t>(idx);
        e.new_level = static_cast<std::uint8_t>(((m + idx) / n) & 1);
        edges.push_back(e);
    }
}

} // namespace

PhaseState make_phase_state(unsigned n_phi, double initial_offset_cycles) {
    if (n_phi < 1) throw std::invalid_argument("phase: n_phi must be >= 1");
    if (initial_offset_cycles < 0.0 || initial_offset_cycles >= 1.0)
        throw std::invalid_argument("phase: initial offset must be in [0,1)");
    PhaseState st;
    st.n_phi = n_phi;
    st.initial_offset = initial_offset_cycles;
    st.theta = initial_offset_cycles;
    return st;
}

std::uint8_t phase_level(const PhaseState& st, unsigned i) {
    const double q = std::floor((st.u() + static_cast<double>(i)) /
                                static_cast<double>(st.n_phi));
    return static_cast<std::uint8_t>(static_cast<long long>(q) & 1);
}

std::vector<std::uint8_t> phase_levels(const PhaseState& st) {
    std::vector<std::uint8_t> lv(st.n_phi);
    for (unsigned i = 0; i < st.n_phi; ++i) lv[i] = phase_level(st, i);
    return lv;
}

std::uint8_t EdgeWaveform::value_at(double t) const {
    auto it = std::upper_bound(
        transitions.begin(), transitions.end(), t,
        [](double tv, const auto& tr) { return tv < tr.first; });
    if (it == transitions.begin()) return initial_level;
    return std::prev(it)->second;
}

PfmInfo pfm_info(const TuningCurve& curve, unsigned n_phi) {
    return {2.0 * static_cast<double>(n_phi) * curve.f0};
}

void advance_phase(PhaseState& st, const TuningCurve& curve,
                   std::span<const double> node_values, double t0, double t1,
                   std::vector<PhaseEdge>& edges,
                   std::span<const double> extra_cycles, bool* clamped) {
    if (node_values.size() < 2)
        throw std::invalid_argument("advance_phase: need at least 2 nodes");
    if (!(t1 > t0)) throw std::invalid_argument("advance_phase: t1 <= t0");
    const std::size_t n_cells = node_values.size() - 1;
    if (!extra_cycles.empty() && extra_cycles.size() != n_cells)
        throw std::invalid_argument("advance_phase: extra_cycles size");

    const double dt = (t1 - t0) / static_cast<double>(n_cells);
    const double two_n = 2.0 * static_cast<double>(st.n_phi);
    double f_a = tuning_frequency(curve, node_values[0], clamped);
    for (std::size_t c = 0; c < n_cells; ++c) {
        const double f_b = tuning_frequency(curve, node_values[c + 1], clamped);
        double d_theta = 0.5 * (f_a + f_b) * dt;
        if (!extra_cycles.empty()) d_theta += extra_cycles[c];
        if (!(d_theta >= 0.0))
            throw std::runtime_error(
                "advance_phase: phase would run backwards (check the curve)");
        const double du = two_n * d_theta;
        if (du > static_cast<double>(st.n_phi))
            throw std::runtime_error(
                "advance_phase: inner grid too coarse for this frequency");
        const double u_a = st.u();
        emit_crossings(u_a, du, t0 + static_cast<double>(c) * dt, dt,
                       st.n_phi, edges);
        st.theta += d_theta;
    }
}

void advance_phase_pwc(PhaseState& st, const TuningCurve& curve,
                       std::span<const PwcSegment> segments, double t1,
                       std::vector<PhaseEdge>& edges, bool* clamped) {
    if (segments.empty())
        throw std::invalid_argument("advance_phase_pwc: no segments");
    const double two_n = 2.0 * static_cast<double>(st.n_phi);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const double t_a = segments[k].t_start;
        const double t_b =
            (k + 1 < segments.size()) ? segments[k + 1].t_start : t1;
        if (!(t_b >= t_a))
            throw std::invalid_argument("advance_phase_pwc: segments unordered");
        if (t_b == t_a) continue;
        const double f = tuning_frequency(curve, segments[k].value, clamped);
        if (!(f >= 0.0))
            throw std::runtime_error("advance_phase_pwc: negative frequency");
        const double dt = t_b - t_a;
        const double d_theta = f * dt;
        emit_crossings(st.u(), two_n * d_theta, t_a, dt, st.n_phi, edges);
        st.theta += d_theta;
    }
}

std::vector<EdgeWaveform> per_phase_waveforms(
    std::span<const std::uint8_t> initial_levels,
    std::span<const PhaseEdge> edges) {
    std::vector<EdgeWaveform> out(initial_levels.size());
    for (std::size_t i = 0; i < initial_levels.size(); ++i)
        out[i].initial_level = initial_levels[i];
    for (const auto& e : edges) {
        if (e.phase >= out.size())
            throw std::invalid_argument("per_phase_waveforms: phase index");
        auto& w = out[e.phase];
        const std::uint8_t prev =
            w.transitions.empty() ? w.initial_level : w.transitions.back().second;
        if (prev == e.new_level)
            throw std::runtime_error("per_phase_waveforms: levels must alternate");
        w.transitions.emplace_back(e.time, e.new_level);
    }
    return out;
}

} // namespace mashvco
