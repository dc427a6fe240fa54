#include "mashvco/sinefit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mashvco/kernels.hpp"
#include "mashvco/linalg.hpp"

namespace mashvco {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double fold(double f, double rate) {
    double r = std::fmod(f, rate);
    if (r < 0.0) r += rate;
    return (r > rate / 2.0) ? rate - r : r;
}

} // namespace

SineFit sine_fit(const SampleStream& x, double f_guess, bool refine_freq) {
    const std::size_t n = x.size();
    if (n < 8) throw std::invalid_argument("sine_fit: record too short");
    if (x.rate <= 0.0) throw std::invalid_argument("sine_fit: bad rate");
    if (!(f_guess > 0.0) || f_guess >= x.rate / 2.0)
        throw std::invalid_argument("sine_fit: frequency guess out of range");

    // Time is centered so the frequency-derivative column stays nearly
    // orthogonal to the carrier columns; phase is mapped back at the end.
    const double mid = 0.5 * static_cast<double>(n - 1);
    double w = kTwoPi * f_guess / x.rate; // rad per sample

    std::vector<double> c(n), s(n), ones(n, 1.0), dcol;
    auto rebuild = [&](double wv) {
        for (std::size_t k = 0; k < n; ++k) {
            const double t = (static_cast<double>(k) - mid) * wv;
            c[k] = std::cos(t);
            s[k] = std::sin(t);
        }
    };

    rebuild(w);
    std::vector<double> coef;
    if (!lin::lstsq({c, s, ones}, x.samples, coef))
        throw std::runtime_error("sine_fit: degenerate base fit");
    double A = coef[0], B = coef[1], C = coef[2];

    unsigned iters = 0;
    if (refine_freq) {
        dcol.resize(n);
        for (; iters < 30; ++iters) {
            for (std::size_t k = 0; k < n; ++k) {
                const double t = static_cast<double>(k) - mid;
                dcol[k] = t * (-A * s[k] + B * c[k]);
            }
            if (!lin::lstsq({c, s, ones, dcol}, x.samples, coef)) break;
            A = coef[0];
            B = coef[1];
            C = coef[2];
            const double dw = coef[3];
            w += dw;
            if (!(w > 0.0) || w >= std::numbers::pi)
                throw std::runtime_error("sine_fit: frequency ran away");
            rebuild(w);
            if (std::fabs(dw) <= 1e-12 * w) {
                ++iters;
                break;
            }
        }
        // One clean linear solve at the settled frequency.
        if (!lin::lstsq({c, s, ones}, x.samples, coef))
            throw std::runtime_error("sine_fit: degenerate final fit");
        A = coef[0];
        B = coef[1];
        C = coef[2];
    }

    // A*cos(w(k-mid)) + B*sin(w(k-mid)) rewritten about k = 0.
    const double psi = w * mid;
    const double a0 = A * std::cos(psi) - B * std::sin(psi);
    const double b0 = A * std::sin(psi) + B * std::cos(psi);

    SineFit fit;
    fit.amp = std::hypot(a0, b0);
    fit.freq = w * x.rate / kTwoPi;
    fit.phase_rad = std::atan2(a0, b0);
    fit.offset = C;
    fit.iterations = iters;

    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double m = C + A * c[k] + B * s[k];
        const double r = x.samples[k] - m;
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

Decomposition decompose(const SampleStream& x, double f_guess,
                        unsigned n_harmonics) {
    const std::size_t n = x.size();
    Decomposition out;
    out.fundamental = sine_fit(x, f_guess, true);
    const SineFit& f = out.fundamental;
    const double w = kTwoPi * f.freq / x.rate;

    out.signal.rate = x.rate;
    out.signal.label = x.label + ".signal";
    out.signal.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        out.signal.samples[k] =
            f.offset + f.amp * std::sin(w * static_cast<double>(k) + f.phase_rad);

    std::vector<double> rem(n);
    for (std::size_t k = 0; k < n; ++k)
        rem[k] = x.samples[k] - out.signal.samples[k];

    // Harmonics are fitted where they actually land after aliasing. The
    // record can only separate tones spaced by at least rate/n.
    const double sep = x.rate / static_cast<double>(n);
    std::vector<double> targets;
    for (unsigned h = 2; h <= n_harmonics; ++h) {
        const double fh = fold(static_cast<double>(h) * f.freq, x.rate);
        if (std::fabs(fh - f.freq) < sep)
            throw std::runtime_error(
                "decompose: harmonic aliases onto the fundamental");
        if (fh < sep) continue; // folded to DC, already in the offset
        bool dup = false;
        for (double t : targets)
            if (std::fabs(t - fh) < sep / 2.0) { dup = true; break; }
        if (!dup) targets.push_back(fh);
    }

    out.distortion.rate = x.rate;
    out.distortion.label = x.label + ".dist";
    out.distortion.samples.assign(n, 0.0);
    if (!targets.empty()) {
        std::vector<std::vector<double>> cols;
        for (double fh : targets) {
            const double wh = kTwoPi * fh / x.rate;
            std::vector<double> ch(n), sh(n);
            for (std::size_t k = 0; k < n; ++k) {
                ch[k] = std::cos(wh * static_cast<double>(k));
                sh[k] = std::sin(wh * static_cast<double>(k));
            }
            cols.push_back(std::move(ch));
            // At Nyquist the sine column vanishes; keep cosine only.
            const double norm =
                kern::active().sum_squares(sh.data(), n);
            if (norm > 1e-12 * static_cast<double>(n))
                cols.push_back(std::move(sh));
        }
        std::vector<double> coef;
        if (!lin::lstsq(cols, rem, coef))
            throw std::runtime_error("decompose: harmonic fit is degenerate");
        for (std::size_t j = 0; j < cols.size(); ++j)
            kern::active().axpy(coef[j], cols[j].data(),
                                out.distortion.samples.data(), n);
    }

    out.residual.rate = x.rate;
    out.residual.label = x.label + ".residual";
    out.residual.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        out.residual.samples[k] = rem[k] - out.distortion.samples[k];
    return out;
}

} // namespace mashvco
