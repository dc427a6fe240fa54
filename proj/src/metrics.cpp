#include "mashvco/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mashvco {
namespace {

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

double lin_to_db(double lin) {
    return 10.0 * std::log10(std::max(lin, 1e-30));
}

// Fold a frequency into the first Nyquist zone [0, rate/2].
double fold(double f, double rate) {
    double r = std::fmod(f, rate);
    if (r < 0.0) r += rate;
    return (r > rate / 2.0) ? rate - r : r;
}

} // namespace

Metrics metrics(const Spectrum& sp, double f_signal, unsigned osr,
                unsigned n_harmonics) {
    if (osr == 0) throw std::invalid_argument("metrics: osr must be >= 1");
    if (sp.power_db.empty() || sp.rate <= 0.0)
        throw std::invalid_argument("metrics: empty spectrum");

    const double bw = sp.bin_width();
    const double band = sp.rate / (2.0 * static_cast<double>(osr));
    const std::size_t n_bins = sp.power_db.size(); // n_fft/2 + 1
    std::size_t last = static_cast<std::size_t>(std::floor(band / bw + 1e-9));
    if (last >= n_bins) last = n_bins - 1;
    if (last < 2)
        throw std::invalid_argument("metrics: band too narrow for this FFT");

    const auto sig_bin =
        static_cast<std::size_t>(std::llround(f_signal / bw));
    if (sig_bin < 1 || sig_bin > last)
        throw std::invalid_argument("metrics: signal frequency out of band");

    // Roles per in-band bin: 0 noise, 1 signal, 2 harmonic. DC stays out.
    std::vector<std::uint8_t> role(last + 1, 0);
    for (std::size_t b = sig_bin - 1; b <= sig_bin + 1 && b <= last; ++b)
        if (b >= 1) role[b] = 1;

    for (unsigned h = 2; h <= n_harmonics; ++h) {
        double fh = fold(static_cast<double>(h) * f_signal, sp.rate);
        auto hb = static_cast<std::size_t>(std::llround(fh / bw));
        if (hb < 1 || hb > last) continue; // harmonic fell out of band
        for (std::size_t b = (hb > 1 ? hb - 1 : 1); b <= hb + 1 && b <= last;
             ++b)
            if (role[b] == 0) role[b] = 2; // never reclaim signal bins
    }

    double p_sig = 0.0, p_harm = 0.0, p_noise = 0.0;
    double max_spur = 0.0;
    for (std::size_t b = 1; b <= last; ++b) {
        const double p = db_to_lin(sp.power_db[b]);
        switch (role[b]) {
        case 1: p_sig += p; break;
        case 2: p_harm += p; break;
        default: p_noise += p; break;
        }
        if (role[b] != 1 && p > max_spur) max_spur = p;
    }
    if (p_sig <= 0.0)
        throw std::runtime_error("metrics: no signal power at requested bin");

    Metrics m;
    m.band_hz = band;
    m.signal_bin = sig_bin;
    m.signal_freq = static_cast<double>(sig_bin) * bw;
    m.signal_db = lin_to_db(p_sig);
    m.sndr_db = lin_to_db(p_sig) - lin_to_db(p_noise + p_harm);
    m.snr_db = lin_to_db(p_sig) - lin_to_db(p_noise);
    m.sfdr_db = lin_to_db(p_sig) - lin_to_db(max_spur);
    m.thd_db = lin_to_db(p_harm) - lin_to_db(p_sig);
    m.enob = (m.sndr_db - 1.76) / 6.02;
    return m;
}

} // namespace mashvco
