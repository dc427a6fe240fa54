#include "mashvco/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "mashvco/kernels.hpp"

namespace mashvco {

namespace {
bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
} // namespace

void fft_radix2(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft_radix2: size must be a power of two");
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : x) v *= inv;
    }
}

double coherent_bin_frequency(double f_target, double rate, std::size_t n_fft) {
    if (!(rate > 0.0)) throw std::invalid_argument("coherent_bin_frequency: rate must be positive");
    if (!is_pow2(n_fft)) throw std::invalid_argument("coherent_bin_frequency: n_fft must be a power of two");
    if (f_target < 0.0 || f_target >= rate / 2.0)
        throw std::invalid_argument("coherent_bin_frequency: target outside [0, rate/2)");
    double nd = static_cast<double>(n_fft);
    long long bin = std::llround(f_target * nd / rate);
    if (bin % 2 == 0) bin += 1;
    if (bin >= static_cast<long long>(n_fft / 2)) bin -= 2;
    if (bin < 1)
        throw std::invalid_argument("coherent_bin_frequency: no odd bin available below rate/2");
    return static_cast<double>(bin) * rate / nd;
}

Spectrum spectrum(const SampleStream& s, std::size_t n_fft, std::size_t n_avg,
                  Window window, double full_scale) {
    if (!is_pow2(n_fft)) throw std::invalid_argument("spectrum: n_fft must be a power of two");
    if (n_avg == 0) throw std::invalid_argument("spectrum: n_avg must be >= 1");
    if (s.samples.size() < n_fft * n_avg)
        throw std::invalid_argument("spectrum: stream shorter than n_fft * n_avg");
    if (!(s.rate > 0.0)) throw std::invalid_argument("spectrum: stream rate must be positive");
    if (!(full_scale > 0.0)) throw std::invalid_argument("spectrum: full_scale must be positive");

    std::vector<double> win(n_fft, 1.0);
    if (window == Window::hann) {
        for (std::size_t i = 0; i < n_fft; ++i)
            win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_fft));
    }
    // Coherent gain keeps tone amplitudes window-independent.
    double wsum = kern::active().sum(win.data(), n_fft);

    const std::size_t nbins = n_fft / 2 + 1;
    std::vector<double> pow_lin(nbins, 0.0);
    std::vector<std::complex<double>> buf(n_fft);
    std::vector<double> re(nbins), im(nbins);
    const double seg_scale = 1.0 / static_cast<double>(n_avg);

    for (std::size_t seg = 0; seg < n_avg; ++seg) {
        const double* src = s.samples.data() + seg * n_fft;
        for (std::size_t i = 0; i < n_fft; ++i) buf[i] = {src[i] * win[i], 0.0};
        fft_radix2(buf);
        for (std::size_t b = 0; b < nbins; ++b) {
            re[b] = buf[b].real();
            im[b] = buf[b].imag();
        }
        kern::active().power_accum(pow_lin.data(), re.data(), im.data(), seg_scale, nbins);
    }

    // Single-sided tone power per bin: |X|^2 * 2 / wsum^2 (DC and Nyquist not doubled).
    Spectrum out;
    out.rate = s.rate;
    out.n_fft = n_fft;
    out.n_avg = n_avg;
    out.full_scale = full_scale;
    out.freq.resize(nbins);
    out.power_db.resize(nbins);
    const double fs_power = full_scale * full_scale / 2.0; // 0 dBFS reference
    for (std::size_t b = 0; b < nbins; ++b) {
        out.freq[b] = static_cast<double>(b) * s.rate / static_cast<double>(n_fft);
        double two = (b == 0 || b == n_fft / 2) ? 1.0 : 2.0;
        double p = pow_lin[b] * two / (wsum * wsum) / fs_power;
        double db = (p > 0.0) ? 10.0 * std::log10(p) : kSpectrumFloorDb;
        out.power_db[b] = std::max(db, kSpectrumFloorDb);
    }
    return out;
}

} // namespace mashvco
