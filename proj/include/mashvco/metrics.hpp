#pragma once
#include <cstddef>

#include "mashvco/spectrum.hpp"

namespace mashvco {

struct Metrics {
    double sndr_db = 0.0;
    double snr_db = 0.0;
    double sfdr_db = 0.0;
    double thd_db = 0.0;  // total harmonic power relative to the carrier (dBc)
    double enob = 0.0;
    double signal_db = 0.0; // carrier power in dBFS
    double signal_freq = 0.0;
    double band_hz = 0.0;
    std::size_t signal_bin = 0;
};

// In-band metrics over (0, rate/(2*osr)]. The signal is taken at the bin
// nearest f_signal with +-1 neighbor bins included; DC is excluded; harmonics
// 2..n_harmonics are folded across Nyquist and excluded from SNR.
Metrics metrics(const Spectrum& sp, double f_signal, unsigned osr,
                unsigned n_harmonics = 5);

} // namespace mashvco
