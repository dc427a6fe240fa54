#pragma once
#include <span>
#include <string>
#include <vector>

namespace mashvco {

struct TheoryParams {
    double fs = 3.5e9;
    unsigned osr = 16;
    unsigned n_phi1 = 32;
    unsigned n_phi2 = 32;
    double f_range1 = 1.21e9;
    double f_range2 = 1.57e9;
    double f0_1 = 1.0e9;
    double f0_2 = 0.9e9;
    double amplitude_fraction = 1.0; // input amplitude relative to full range
};

// Second-order-shaped quantization limit of the cascade:
// 6.02*log2(n_phi2*f_range1*f_range2/fs^2) + 50*log10(osr) + 0.9052,
// shifted by 20*log10(amplitude_fraction) for partial drive.
double sqnr_mash_db(const TheoryParams& p);

// First-order single-stage limit with the small-band approximation
// pi^2/(3*osr^3) for the shaped noise integral.
double sqnr_single_db(const TheoryParams& p);

// Same quantity with the in-band noise integral in closed form,
// (2/pi)*(pi/osr - sin(pi/osr))/12; the approximation above is its small
// band limit and drifts at low OSR.
double sqnr_single_exact_db(const TheoryParams& p);

struct SqnrRow {
    double osr = 0.0;
    double single_db = 0.0;
    double mash_db = 0.0;
};

std::vector<SqnrRow> sqnr_curve(const TheoryParams& p,
                                std::span<const double> osr_values);
void write_sqnr_curve_csv(const std::string& path,
                          std::span<const SqnrRow> rows);

// First spectral concentration of the pulse-frequency-modulated edge train.
double pfm_sideband_center(unsigned n_phi, double f0);

} // namespace mashvco
