#include "mashvco/mash.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mashvco/rng.hpp"
#include "mashvco/spectrum.hpp"

namespace mashvco {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double poly_eval(const std::vector<double>& p, double x) {
    double acc = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
    return acc;
}

} // namespace

std::string_view to_string(Architecture a) {
    switch (a) {
    case Architecture::single_stage: return "single_stage";
    case Architecture::mash_se: return "mash_se";
    case Architecture::mash_cc: return "mash_cc";
    }
    return "?";
}

Architecture architecture_from_string(std::string_view s) {
    if (s == "single_stage") return Architecture::single_stage;
    if (s == "mash_se") return Architecture::mash_se;
    if (s == "mash_cc") return Architecture::mash_cc;
    throw std::invalid_argument("unknown architecture: " + std::string(s));
}

std::string_view to_string(SweepParam p) {
    switch (p) {
    case SweepParam::n_phi1: return "n_phi1";
    case SweepParam::g_rel_mismatch: return "g_rel_mismatch";
    case SweepParam::pw_max_skew: return "pw_max_skew";
    case SweepParam::amplitude: return "amplitude";
    case SweepParam::f_in: return "f_in";
    }
    return "?";
}

SweepParam sweep_param_from_string(std::string_view s) {
    if (s == "n_phi1") return SweepParam::n_phi1;
    if (s == "g_rel_mismatch") return SweepParam::g_rel_mismatch;
    if (s == "pw_max_skew") return SweepParam::pw_max_skew;
    if (s == "amplitude") return SweepParam::amplitude;
    if (s == "f_in") return SweepParam::f_in;
    throw std::invalid_argument("unknown sweep parameter: " + std::string(s));
}

void validate(const SimConfig& cfg) {
    if (!(cfg.fs > 0.0)) throw std::invalid_argument("config: fs must be > 0");
    if (cfg.osr < 2 || (cfg.osr & (cfg.osr - 1)) != 0)
        throw std::invalid_argument("config: osr must be a power of two >= 2");
    if (cfg.n_phi1 < 1 || cfg.n_phi2 < 1)
        throw std::invalid_argument("config: phase counts must be >= 1");
    if (cfg.n_samples < 16)
        throw std::invalid_argument("config: n_samples too small");
    if (cfg.grid.points_per_period < 1)
        throw std::invalid_argument("config: inner grid needs >= 1 cell");
    const double ts = 1.0 / cfg.fs;

    const FreqCheck c1 = max_frequency_check(cfg.curve1, cfg.fs);
    if (!c1.pass)
        throw std::invalid_argument(
            "config: stage-1 curve leaves (0, fs/2); margin " +
            std::to_string(c1.margin_hz) + " Hz");
    const bool has_stage2 = cfg.architecture != Architecture::single_stage;
    if (has_stage2) {
        const FreqCheck c2 = max_frequency_check(cfg.curve2, cfg.fs);
        if (!c2.pass)
            throw std::invalid_argument(
                "config: stage-2 curve leaves (0, fs/2); margin " +
                std::to_string(c2.margin_hz) + " Hz");
        if (std::fabs(cfg.curve2.x_min) > 1e-9 ||
            std::fabs(cfg.curve2.x_max - static_cast<double>(cfg.n_phi1)) >
                1e-9)
            throw std::invalid_argument(
                "config: stage-2 curve must span [0, n_phi1] counts");
    }
    if (cfg.architecture == Architecture::mash_cc && !cfg.differential_stage1)
        throw std::invalid_argument(
            "config: cross-coupling needs the pseudo-differential first stage");

    for (const auto& t : cfg.stimulus) {
        if (t.amp < 0.0) throw std::invalid_argument("config: negative amplitude");
        if (t.freq < 0.0 || t.freq >= cfg.fs / 2.0)
            throw std::invalid_argument("config: tone outside [0, fs/2)");
    }
    if (!cfg.pw_errors.tr.empty() || !cfg.pw_errors.tf.empty()) {
        if (cfg.pw_errors.tr.size() != cfg.n_phi1 ||
            cfg.pw_errors.tf.size() != cfg.n_phi1)
            throw std::invalid_argument(
                "config: pulse-width error arrays must match n_phi1");
        for (unsigned i = 0; i < cfg.n_phi1; ++i)
            if (cfg.pw_errors.tr[i] < 0.0 || cfg.pw_errors.tr[i] >= ts ||
                cfg.pw_errors.tf[i] < 0.0 || cfg.pw_errors.tf[i] >= ts)
                throw std::invalid_argument(
                    "config: pulse-width delays must lie in [0, Ts)");
    }
    if (cfg.metastability.enabled) {
        if (cfg.metastability.tau < 0.0)
            throw std::invalid_argument("config: metastability tau < 0");
        if (cfg.metastability.t_max >= ts)
            throw std::invalid_argument("config: metastability cap >= Ts");
    }
    if (cfg.thermal_snr_target_db && cfg.stimulus.empty())
        throw std::invalid_argument(
            "config: thermal sizing needs a stimulus tone");
    if (cfg.g_override && (!std::isfinite(*cfg.g_override) || *cfg.g_override < 0.0))
        throw std::invalid_argument("config: g override must be finite and >= 0");
}

NcfGain g_opt(const SimConfig& cfg) {
    const double f_range2 =
        cfg.curve2.gain_k * (cfg.curve2.x_max - cfg.curve2.x_min);
    if (!(f_range2 > 0.0))
        throw std::invalid_argument("g_opt: stage-2 curve has no span");
    return {cfg.fs * static_cast<double>(cfg.n_phi1) /
            (2.0 * static_cast<double>(cfg.n_phi2) * f_range2)};
}

SampleStream ncf_combine(const SampleStream& d1, const SampleStream& d2,
                         NcfGain g) {
    if (d1.size() != d2.size())
        throw std::invalid_argument("ncf_combine: length mismatch");
    SampleStream out;
    out.rate = d1.rate;
    out.label = "d";
    out.samples.resize(d1.size());
    double prev = d2.samples.empty() ? 0.0 : d2.samples[0];
    for (std::size_t k = 0; k < d1.size(); ++k) {
        out.samples[k] = d1.samples[k] + g.g * (d2.samples[k] - prev);
        prev = d2.samples[k];
    }
    return out;
}

double full_scale_code_amp(const SimConfig& cfg) {
    return 2.0 * static_cast<double>(cfg.n_phi1) * cfg.curve1.gain_k *
           kFullScaleAmpVolts / cfg.fs;
}

namespace {

struct DriveEvent {
    double t;
    double delta;
};

// One-deep normalization buffer per pulse stream: holds the newest shifted
// transition so that a later transition landing at or before it cancels the
// pair (the pulse or gap between them has nonpositive width). Same-direction
// shifts preserve order, so only adjacent transitions can ever cross.
struct NormBuf {
    double t = 0.0;
    double delta = 0.0;
    bool has = false;
};

inline void norm_push(NormBuf& nb, double t, double delta,
                      std::vector<DriveEvent>& out) {
    if (nb.has && t <= nb.t) {
        nb.has = false;
        return;
    }
    if (nb.has) out.push_back({nb.t, nb.delta});
    nb.t = t;
    nb.delta = delta;
    nb.has = true;
}

inline void norm_flush(NormBuf& nb, double t_lim,
                       std::vector<DriveEvent>& out) {
    if (nb.has && nb.t < t_lim) {
        out.push_back({nb.t, nb.delta});
        nb.has = false;
    }
}

struct Stage1Ch {
    PhaseState ph;
    double in_scale = 1.0; // fraction of the differential drive this osc sees
    double out_sign = 1.0;
    double last_floor = 0.0;
    double last_p = 0.0; // running P(v) of the drive-slope term
    std::vector<NormBuf> e_buf, ebar_buf;
    std::vector<std::size_t> last_toggle_period;
};

struct Stage2Ch {
    PhaseState ph;
    double out_sign = 1.0;
    double last_floor = 0.0;
    double value = 0.0; // current drive, counts
    std::vector<DriveEvent> pending;
    std::vector<PwcSegment> segs;
    std::vector<PhaseEdge> scratch;
};

} // namespace

SimResult simulate(const SimConfig& cfg_in) {
    validate(cfg_in);
    SimConfig cfg = cfg_in;
    if (cfg.thermal_snr_target_db && cfg.thermal_sigma_override <= 0.0)
        cfg.thermal_sigma_override = thermal_sigma_for_target(cfg);
    const double sigma = cfg.thermal_sigma_override;

    const double ts = 1.0 / cfg.fs;
    // One extra leading period: the NCF needs the d2 step across the first
    // output sample's boundary, so the streams keep a warmup sample that is
    // trimmed from every returned series.
    const std::size_t n_clk = cfg.n_samples + 2;
    const unsigned n1 = cfg.n_phi1;
    const bool pdiff = cfg.differential_stage1;
    const bool has_stage2 = cfg.architecture != Architecture::single_stage;
    const bool cc = cfg.architecture == Architecture::mash_cc;
    const bool deriv = !cfg.stage1_deriv_poly.empty();
    const unsigned gp = cfg.grid.points_per_period;

    std::vector<double> tr = cfg.pw_errors.tr, tf = cfg.pw_errors.tf;
    if (tr.empty()) tr.assign(n1, 0.0);
    if (tf.empty()) tf.assign(n1, 0.0);

    rng::Stream rng1p(rng::subseed(cfg.seed, "phase.stage1.p"));
    rng::Stream rng1m(rng::subseed(cfg.seed, "phase.stage1.m"));
    rng::Stream rng2p(rng::subseed(cfg.seed, "phase.stage2.p"));
    rng::Stream rng2m(rng::subseed(cfg.seed, "phase.stage2.m"));
    rng::Stream rng_th(rng::subseed(cfg.seed, "thermal"));

    std::vector<Stage1Ch> ch1;
    {
        Stage1Ch p;
        p.ph = make_phase_state(n1, rng1p.uniform());
        p.in_scale = pdiff ? 0.5 : 1.0;
        p.out_sign = 1.0;
        ch1.push_back(std::move(p));
        if (pdiff) {
            Stage1Ch m;
            m.ph = make_phase_state(n1, rng1m.uniform());
            m.in_scale = -0.5;
            m.out_sign = -1.0;
            ch1.push_back(std::move(m));
        }
        for (auto& c : ch1) {
            c.last_floor = std::floor(c.ph.u());
            c.e_buf.assign(n1, {});
            if (cc) c.ebar_buf.assign(n1, {});
            c.last_toggle_period.assign(n1, static_cast<std::size_t>(-1));
        }
    }

    std::vector<Stage2Ch> ch2;
    if (has_stage2) {
        const std::size_t n_ch2 = (cc || pdiff) ? 2 : 1;
        for (std::size_t c = 0; c < n_ch2; ++c) {
            Stage2Ch s;
            s.ph = make_phase_state(cfg.n_phi2,
                                    (c == 0 ? rng2p : rng2m).uniform());
            s.out_sign = c == 0 ? 1.0 : -1.0;
            s.last_floor = std::floor(s.ph.u());
            // Cross-coupled drives rest at midrange: all E bits low, all
            // complement bits high.
            s.value = cc ? static_cast<double>(n1) / 2.0 : 0.0;
            ch2.push_back(std::move(s));
        }
    }
    double cc_last_floor =
        cc ? std::floor(ch2[0].ph.u() - ch2[1].ph.u()) : 0.0;

    auto tone_at = [&cfg](double t) {
        double v = cfg.stimulus_offset;
        for (const auto& tn : cfg.stimulus)
            v += tn.amp * std::sin(kTwoPi * tn.freq * t + tn.phase_rad);
        return v;
    };

    std::vector<double> vnodes(gp + 1), nodes(gp + 1), extra;
    if (deriv) extra.resize(gp);
    std::vector<PhaseEdge> edges;
    std::vector<double> d1v(n_clk, 0.0), d2v(n_clk, 0.0), etr;
    if (cfg.keep_e_trace) etr.resize(n_clk, 0.0);

    // Half-unit sources realize the cross-coupled recombination
    // (E_p - E_m + n_phi1)/2 bit by bit; single-ended drives use whole units.
    const double w = cc ? 0.5 : 1.0;
    bool clamp_flag = false;
    std::uint64_t clamp_events = 0;

    // Initialize the drive-slope accumulators at t = 0.
    if (deriv) {
        const double v0 = tone_at(0.0);
        for (auto& c : ch1)
            c.last_p = poly_eval(cfg.stage1_deriv_poly, c.in_scale * v0);
    }

    for (std::size_t k = 0; k < n_clk; ++k) {
        const double t_a = static_cast<double>(k) * ts;
        const double t_b = static_cast<double>(k + 1) * ts;
        const double noise = sigma > 0.0 ? sigma * rng_th.gaussian() : 0.0;
        for (unsigned j = 0; j <= gp; ++j)
            vnodes[j] = tone_at(t_a + ts * static_cast<double>(j) /
                                          static_cast<double>(gp)) +
                        noise;

        for (std::size_t c = 0; c < ch1.size(); ++c) {
            Stage1Ch& s = ch1[c];
            for (unsigned j = 0; j <= gp; ++j)
                nodes[j] = s.in_scale * vnodes[j];
            if (deriv) {
                for (unsigned j = 0; j < gp; ++j) {
                    const double pj =
                        poly_eval(cfg.stage1_deriv_poly, nodes[j + 1]);
                    extra[j] = pj - s.last_p;
                    s.last_p = pj;
                }
            }
            edges.clear();
            advance_phase(s.ph, cfg.curve1, nodes, t_a, t_b, edges,
                          deriv ? std::span<const double>(extra)
                                : std::span<const double>(),
                          &clamp_flag);
            if (clamp_flag) {
                ++clamp_events;
                clamp_flag = false;
            }
            const double fl = std::floor(s.ph.u());
            d1v[k] += s.out_sign * (fl - s.last_floor);
            s.last_floor = fl;

            if (!has_stage2) continue;
            // Route this channel's error pulses: E_c drives stage-2 channel
            // c in every variant; cross-coupling adds the complement bits to
            // the opposite channel, so ch2[0] integrates (E_p + Ebar_m)/2.
            Stage2Ch* e_dst = &ch2[c];
            Stage2Ch* ebar_dst = cc ? &ch2[1 - c] : nullptr;
            for (const PhaseEdge& e : edges) {
                const unsigned i = e.phase;
                if (s.last_toggle_period[i] == k)
                    throw std::runtime_error(
                        "simulate: phase toggled twice in one clock period");
                s.last_toggle_period[i] = k;
                const double prox = t_b - e.time;
                const double dm =
                    metastability_delay(cfg.metastability, ts, prox);
                // Pulse runs from the toggle to the next held update; a held
                // update resolving after the following toggle merges pulses
                // in the normalization buffer.
                norm_push(s.e_buf[i], e.time + tr[i], +w, e_dst->pending);
                norm_push(s.e_buf[i], t_b + dm + tf[i], -w, e_dst->pending);
                if (cc) {
                    norm_push(s.ebar_buf[i], e.time + tf[i], -w,
                              ebar_dst->pending);
                    norm_push(s.ebar_buf[i], t_b + dm + tr[i], +w,
                              ebar_dst->pending);
                }
            }
            for (unsigned i = 0; i < n1; ++i) {
                norm_flush(s.e_buf[i], t_b, e_dst->pending);
                if (cc) norm_flush(s.ebar_buf[i], t_b, ch2[1 - c].pending);
            }
        }

        for (std::size_t c = 0; c < ch2.size(); ++c) {
            Stage2Ch& s = ch2[c];
            std::sort(s.pending.begin(), s.pending.end(),
                      [](const DriveEvent& a, const DriveEvent& b) {
                          return a.t < b.t;
                      });
            s.segs.clear();
            s.segs.push_back({t_a, s.value});
            std::size_t used = 0;
            while (used < s.pending.size() && s.pending[used].t < t_b) {
                s.value += s.pending[used].delta;
                if (s.pending[used].t == s.segs.back().t_start)
                    s.segs.back().value = s.value;
                else
                    s.segs.push_back({s.pending[used].t, s.value});
                ++used;
            }
            s.pending.erase(s.pending.begin(),
                            s.pending.begin() + static_cast<long>(used));
            if (s.value < -1e-9 ||
                s.value > static_cast<double>(n1) + 1e-9)
                throw std::logic_error("simulate: stage-2 drive out of range");
            s.scratch.clear();
            advance_phase_pwc(s.ph, cfg.curve2, s.segs, t_b, s.scratch,
                              &clamp_flag);
            if (clamp_flag) {
                ++clamp_events;
                clamp_flag = false;
            }
            if (!cc) {
                const double fl = std::floor(s.ph.u());
                d2v[k] += s.out_sign * (fl - s.last_floor);
                s.last_floor = fl;
            }
            if (cfg.keep_e_trace && c == 0) {
                double acc = 0.0;
                for (std::size_t q = 0; q < s.segs.size(); ++q) {
                    const double seg_end = q + 1 < s.segs.size()
                                               ? s.segs[q + 1].t_start
                                               : t_b;
                    acc += s.segs[q].value * (seg_end - s.segs[q].t_start);
                }
                etr[k] = acc / ts;
            }
        }
        if (cc) {
            // The cross-coupled pair is sensed as one differential counter:
            // the sampled count is the integer part of the ring pair's phase
            // difference in tap edges. Counting each ring separately and
            // subtracting would fold the rings' relative tap-grid offset
            // into the count as extra, unshaped error.
            const double fl = std::floor(ch2[0].ph.u() - ch2[1].ph.u());
            d2v[k] = fl - cc_last_floor;
            cc_last_floor = fl;
        }
    }

    SimResult res;
    res.config = cfg;
    res.thermal_sigma = sigma;
    res.clamp_events = clamp_events;
    res.g_used = has_stage2 ? (cfg.g_override ? *cfg.g_override
                                              : g_opt(cfg).g)
                            : 0.0;
    res.d1.samples.assign(d1v.begin() + 1, d1v.end());
    res.d1.rate = cfg.fs;
    res.d1.label = "d1";
    res.d2.samples.assign(d2v.begin() + 1, d2v.end());
    res.d2.rate = cfg.fs;
    res.d2.label = "d2";
    // The count describing d1[k]'s sampling error lands in d2[k+1]: stage 2
    // integrates each residual during the period after stage 1 sampled it.
    // The NCF therefore pairs d1[k] with the d2 step ending at k+1 (same
    // filter as ncf_combine, applied to the latency-aligned streams); at
    // g = 0 this reduces to d1 minus its final sample, which the
    // single-stage build matches bit for bit.
    res.d.rate = cfg.fs;
    res.d.label = "d";
    if (has_stage2) {
        res.d.samples.resize(cfg.n_samples);
        for (std::size_t j = 0; j < cfg.n_samples; ++j)
            res.d.samples[j] =
                res.d1.samples[j] +
                res.g_used * (res.d2.samples[j + 1] - res.d2.samples[j]);
    } else {
        res.d.samples.assign(res.d1.samples.begin(),
                             res.d1.samples.end() - 1);
    }
    if (cfg.keep_e_trace) {
        res.e_trace.samples.assign(etr.begin() + 1, etr.end());
        res.e_trace.rate = cfg.fs;
        res.e_trace.label = "e_trace";
    }
    return res;
}

double thermal_sigma_for_target(const SimConfig& cfg) {
    if (!cfg.thermal_snr_target_db)
        throw std::invalid_argument("thermal sizing: no target set");
    const double target = *cfg.thermal_snr_target_db;
    SimConfig base = cfg;
    base.architecture = Architecture::single_stage;
    base.thermal_snr_target_db.reset();
    base.thermal_sigma_override = 0.0;
    base.keep_e_trace = false;
    base.g_override.reset();
    base.n_samples = std::min<std::size_t>(cfg.n_samples, 32768);
    const std::size_t n_fft = std::bit_floor(base.n_samples);
    base.stimulus[0].freq =
        coherent_bin_frequency(base.stimulus[0].freq, base.fs, n_fft);
    const double a = base.stimulus[0].amp;
    if (!(a > 0.0))
        throw std::invalid_argument("thermal sizing: zero-amplitude tone");

    auto run = [&](double sig) {
        SimConfig c = base;
        c.thermal_sigma_override = sig;
        const SimResult r = simulate(c);
        const Spectrum sp = spectrum(r.d, n_fft, 1, Window::rectangular,
                                     full_scale_code_amp(c));
        const Metrics m = metrics(sp, c.stimulus[0].freq, c.osr);
        const double psig = std::pow(10.0, m.signal_db / 10.0);
        return std::pair<double, double>(
            psig, psig * std::pow(10.0, -m.sndr_db / 10.0));
    };

    const double p_floor = run(0.0).second;
    double sigma = a * std::pow(10.0, -target / 20.0) *
                   std::sqrt(static_cast<double>(cfg.osr) / 2.0);
    double best_sigma = sigma, best_err = 1e300;
    for (int it = 0; it < 8; ++it) {
        const auto [psig, p_tot] = run(sigma);
        const double p_th = p_tot - p_floor;
        if (p_th <= 0.0) {
            sigma *= 4.0;
            continue;
        }
        const double err = 10.0 * std::log10(psig / p_th) - target;
        if (std::fabs(err) < best_err) {
            best_err = std::fabs(err);
            best_sigma = sigma;
        }
        if (std::fabs(err) <= 0.1) return sigma;
        sigma *= std::pow(10.0, err / 20.0);
    }
    return best_sigma;
}

TuningCurve rescale_stage2_range(TuningCurve curve, unsigned n_phi1) {
    if (n_phi1 < 1)
        throw std::invalid_argument("rescale_stage2_range: n_phi1 < 1");
    const double span_hz = curve.gain_k * (curve.x_max - curve.x_min);
    curve.x_min = 0.0;
    curve.x_max = static_cast<double>(n_phi1);
    curve.gain_k = span_hz / static_cast<double>(n_phi1);
    return curve;
}

SimConfig apply_sweep_value(SimConfig base, SweepParam param, double value) {
    switch (param) {
    case SweepParam::n_phi1: {
        const auto n = static_cast<long long>(std::llround(value));
        if (n < 1)
            throw std::invalid_argument("sweep: n_phi1 value must be >= 1");
        if (!base.pw_errors.tr.empty())
            throw std::invalid_argument(
                "sweep: n_phi1 sweep needs ideal pulse widths");
        base.n_phi1 = static_cast<unsigned>(n);
        base.curve2 = rescale_stage2_range(base.curve2, base.n_phi1);
        break;
    }
    case SweepParam::g_rel_mismatch:
        base.g_override = g_opt(base).g * (1.0 + value);
        break;
    case SweepParam::pw_max_skew:
        base.pw_errors = gradient_pw_errors(base.n_phi1, value);
        break;
    case SweepParam::amplitude:
        if (base.stimulus.empty())
            throw std::invalid_argument("sweep: no stimulus tone to scale");
        base.stimulus[0].amp = value;
        break;
    case SweepParam::f_in:
        if (base.stimulus.empty())
            throw std::invalid_argument("sweep: no stimulus tone to retune");
        base.stimulus[0].freq = value;
        break;
    }
    return base;
}

std::vector<SweepRow> sweep(const SimConfig& base, SweepParam param,
                            std::span<const double> values,
                            const SweepOptions& opt) {
    std::vector<SweepRow> rows(values.size());
    if (values.empty()) return rows;
    std::atomic<std::size_t> next{0};
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(
        values.size(), opt.max_workers ? opt.max_workers : hw));

    auto work = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= values.size()) return;
            SweepRow& row = rows[idx];
            row.value = values[idx];
            try {
                const SimConfig cfg =
                    apply_sweep_value(base, param, values[idx]);
                const SimResult r = simulate(cfg);
                const std::size_t n_fft =
                    opt.n_fft ? opt.n_fft : std::bit_floor(r.d.size());
                const Spectrum sp =
                    spectrum(r.d, n_fft, 1, Window::rectangular,
                             full_scale_code_amp(cfg));
                const double f_sig =
                    cfg.stimulus.empty() ? 0.0 : cfg.stimulus[0].freq;
                row.metrics = metrics(sp, f_sig,
                                      opt.osr ? opt.osr : cfg.osr,
                                      opt.n_harmonics);
                row.g_used = r.g_used;
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };

    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return rows;
}

} // namespace mashvco
