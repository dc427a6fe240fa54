#pragma once
#include <complex>
#include <cstddef>
#include <vector>

#include "mashvco/stream.hpp"

namespace mashvco {

enum class Window { rectangular, hann };

// Single-sided averaged power spectrum, normalized so a full-scale sine
// (amplitude = full_scale) reads 0 dBFS in its bin. Power entries are clamped
// at -200 dBFS.
struct Spectrum {
    std::vector<double> freq;     // Hz, bins 0..n_fft/2 inclusive
    std::vector<double> power_db; // dBFS per bin
    double rate = 0.0;
    std::size_t n_fft = 0;
    std::size_t n_avg = 0;
    double full_scale = 1.0;

    double bin_width() const { return rate / static_cast<double>(n_fft); }
};

// In-place radix-2 complex FFT (n must be a power of two).
void fft_radix2(std::vector<std::complex<double>>& x, bool inverse = false);

// Snap a target frequency onto an odd FFT bin so an n_fft-point window holds
// an integer (and fs-coprime) number of cycles: bin = round(f*n/rate), bumped
// to the next odd index when even. Returns the snapped frequency.
double coherent_bin_frequency(double f_target, double rate, std::size_t n_fft);

// Mean of n_avg magnitude-squared periodograms over disjoint segments.
// Requires s.size() >= n_fft * n_avg and power-of-two n_fft.
Spectrum spectrum(const SampleStream& s, std::size_t n_fft, std::size_t n_avg = 1,
                  Window window = Window::rectangular, double full_scale = 1.0);

constexpr double kSpectrumFloorDb = -200.0;

} // namespace mashvco
