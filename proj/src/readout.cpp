#include "mashvco/readout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mashvco {

QsdState make_qsd_state(std::span<const std::uint8_t> initial_levels) {
    QsdState st;
    st.sampled_level.assign(initial_levels.begin(), initial_levels.end());
    st.prev_sampled = st.sampled_level;
    return st;
}

PulseWidthErrors gradient_pw_errors(unsigned n_phi, double max_skew) {
    if (max_skew < 0.0)
        throw std::invalid_argument("gradient_pw_errors: negative skew");
    PulseWidthErrors pw;
    pw.tr.assign(n_phi, 0.0);
    pw.tf.assign(n_phi, 0.0);
    if (n_phi > 1)
        for (unsigned i = 0; i < n_phi; ++i)
            pw.tr[i] = max_skew * static_cast<double>(i) /
                       static_cast<double>(n_phi - 1);
    return pw;
}

double metastability_delay(const MetastabilityModel& m, double ts,
                           double edge_proximity) {
    if (!m.enabled || edge_proximity <= 0.0) {
        // A toggle exactly on the clock never resolves: cap applies.
        if (m.enabled && edge_proximity <= 0.0)
            return m.t_max > 0.0 ? m.t_max : ts / 2.0;
        return 0.0;
    }
    const double cap = m.t_max > 0.0 ? m.t_max : ts / 2.0;
    const double d = m.tau * std::log(ts / edge_proximity);
    return std::clamp(d, 0.0, cap);
}

QsdOutput qsd_sample(QsdState& st, std::span<const std::uint8_t> levels,
                     const MetastabilityModel& meta,
                     std::span<const double> edge_proximity, double ts) {
    const std::size_t n = st.sampled_level.size();
    if (levels.size() != n)
        throw std::invalid_argument("qsd_sample: level count mismatch");
    if (meta.enabled && edge_proximity.size() != n)
        throw std::invalid_argument("qsd_sample: proximity count mismatch");
    QsdOutput out;
    out.d_bits.resize(n);
    out.zoh_delay.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        st.prev_sampled[i] = st.sampled_level[i];
        st.sampled_level[i] = levels[i];
        out.d_bits[i] = st.prev_sampled[i] ^ st.sampled_level[i];
        if (meta.enabled && st.sampled_level[i] != st.prev_sampled[i])
            out.zoh_delay[i] = metastability_delay(meta, ts, edge_proximity[i]);
    }
    return out;
}

EdgeWaveform xor_waveforms(const EdgeWaveform& a, const EdgeWaveform& b) {
    EdgeWaveform out;
    out.initial_level = a.initial_level ^ b.initial_level;
    std::uint8_t la = a.initial_level, lb = b.initial_level;
    std::size_t ia = 0, ib = 0;
    std::uint8_t cur = out.initial_level;
    while (ia < a.transitions.size() || ib < b.transitions.size()) {
        const bool take_a =
            ib >= b.transitions.size() ||
            (ia < a.transitions.size() &&
             a.transitions[ia].first <= b.transitions[ib].first);
        double t;
        if (take_a) {
            t = a.transitions[ia].first;
            la = a.transitions[ia].second;
            ++ia;
            // simultaneous flip on both inputs leaves the XOR unchanged
            if (ib < b.transitions.size() && b.transitions[ib].first == t) {
                lb = b.transitions[ib].second;
                ++ib;
            }
        } else {
            t = b.transitions[ib].first;
            lb = b.transitions[ib].second;
            ++ib;
        }
        const std::uint8_t nl = la ^ lb;
        if (nl != cur) {
            out.transitions.emplace_back(t, nl);
            cur = nl;
        }
    }
    return out;
}

EdgeWaveform apply_pulse_shifts(const EdgeWaveform& w, double t_rise,
                                double t_fall) {
    if (t_rise < 0.0 || t_fall < 0.0)
        throw std::invalid_argument("apply_pulse_shifts: negative delay");
    EdgeWaveform out;
    out.initial_level = w.initial_level;
    if (t_rise == t_fall) {
        out.transitions = w.transitions;
        if (t_rise != 0.0)
            for (auto& tr : out.transitions) tr.first += t_rise;
        return out;
    }
    // Unequal delays can push an edge past its successor; such a pulse (or
    // gap) has nonpositive width and vanishes. The stack stays sorted because
    // same-direction edges share one delay and keep their relative order.
    for (const auto& [t, lv] : w.transitions) {
        const double ts = t + (lv ? t_rise : t_fall);
        if (!out.transitions.empty() && ts <= out.transitions.back().first)
            out.transitions.pop_back();
        else
            out.transitions.emplace_back(ts, lv);
    }
    return out;
}

ErrorPair estimate_error(const EdgeWaveform& w, const EdgeWaveform& w_zoh,
                         const PulseWidthErrors& pw, unsigned i) {
    if (i >= pw.tr.size() || i >= pw.tf.size())
        throw std::invalid_argument("estimate_error: phase index");
    const EdgeWaveform raw = xor_waveforms(w, w_zoh);
    EdgeWaveform raw_bar;
    raw_bar.initial_level = raw.initial_level ^ 1u;
    raw_bar.transitions = raw.transitions;
    for (auto& tr : raw_bar.transitions) tr.second ^= 1u;
    ErrorPair out;
    out.e = apply_pulse_shifts(raw, pw.tr[i], pw.tf[i]);
    out.e_bar = apply_pulse_shifts(raw_bar, pw.tr[i], pw.tf[i]);
    return out;
}

StepWaveform sum_error_bits(std::span<const EdgeWaveform> bits) {
    StepWaveform out;
    std::vector<std::pair<double, int>> deltas;
    for (const auto& w : bits) {
        out.initial_value += w.initial_level;
        std::uint8_t prev = w.initial_level;
        for (const auto& [t, lv] : w.transitions) {
            deltas.emplace_back(t, lv > prev ? 1 : -1);
            prev = lv;
        }
    }
    std::sort(deltas.begin(), deltas.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    int v = out.initial_value;
    for (std::size_t k = 0; k < deltas.size();) {
        const double t = deltas[k].first;
        while (k < deltas.size() && deltas[k].first == t) {
            v += deltas[k].second;
            ++k;
        }
        const int prev = out.steps.empty() ? out.initial_value
                                           : out.steps.back().second;
        if (v != prev) out.steps.emplace_back(t, v);
    }
    return out;
}

double waveform_area(const EdgeWaveform& w, double t0, double t1) {
    double area = 0.0;
    double t_prev = t0;
    std::uint8_t lv = w.initial_level;
    for (const auto& [t, nl] : w.transitions) {
        if (t >= t1) break;
        if (t > t_prev) {
            if (lv) area += t - std::max(t_prev, t0);
            t_prev = std::max(t, t0);
        }
        lv = nl;
    }
    if (lv && t1 > t_prev) area += t1 - std::max(t_prev, t0);
    return area;
}

double step_integral(const StepWaveform& w, double t0, double t1) {
    double acc = 0.0;
    double t_prev = t0;
    double v = w.initial_value;
    for (const auto& [t, nv] : w.steps) {
        if (t >= t1) break;
        if (t > t_prev) {
            acc += v * (t - std::max(t_prev, t0));
            t_prev = std::max(t, t0);
        }
        v = nv;
    }
    if (t1 > t_prev) acc += v * (t1 - t_prev);
    return acc;
}

} // namespace mashvco
