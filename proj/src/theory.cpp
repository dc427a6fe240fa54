#include "mashvco/theory.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace mashvco {
namespace {

constexpr double kPi = std::numbers::pi;

void check(const TheoryParams& p) {
    if (!(p.fs > 0.0) || p.osr < 1 || p.n_phi1 < 1 || p.n_phi2 < 1 ||
        !(p.f_range1 > 0.0) || !(p.f_range2 > 0.0) ||
        !(p.amplitude_fraction > 0.0))
        throw std::invalid_argument("theory: parameters must be positive");
}

// Output-code amplitude of the sine: n_phi1*f_range1*alpha/fs (the combined
// edge count swings by 2*n_phi1*K1*A/fs with f_range1 = 2*K1*A_max).
double code_amp(const TheoryParams& p) {
    return static_cast<double>(p.n_phi1) * p.f_range1 *
           p.amplitude_fraction / p.fs;
}

} // namespace

double sqnr_mash_db(const TheoryParams& p) {
    check(p);
    const double arg = static_cast<double>(p.n_phi2) * p.f_range1 *
                       p.f_range2 / (p.fs * p.fs);
    return 6.02 * std::log2(arg) + 50.0 * std::log10(p.osr) + 0.9052 +
           20.0 * std::log10(p.amplitude_fraction);
}

double sqnr_single_db(const TheoryParams& p) {
    check(p);
    const double a = code_amp(p);
    const double osr3 = std::pow(static_cast<double>(p.osr), 3.0);
    return 10.0 * std::log10(a * a / 2.0 * 36.0 * osr3 / (kPi * kPi));
}

double sqnr_single_exact_db(const TheoryParams& p) {
    check(p);
    const double a = code_amp(p);
    const double x = kPi / static_cast<double>(p.osr);
    const double noise = (2.0 / kPi) * (x - std::sin(x)) / 12.0;
    return 10.0 * std::log10(a * a / 2.0 / noise);
}

std::vector<SqnrRow> sqnr_curve(const TheoryParams& p,
                                std::span<const double> osr_values) {
    std::vector<SqnrRow> rows;
    rows.reserve(osr_values.size());
    for (double osr : osr_values) {
        if (!(osr >= 1.0))
            throw std::invalid_argument("sqnr_curve: osr must be >= 1");
        // Evaluate at the requested (possibly non-integer) OSR directly.
        const double a = code_amp(p);
        const double single =
            10.0 * std::log10(a * a / 2.0 * 36.0 * std::pow(osr, 3.0) /
                              (kPi * kPi));
        const double arg = static_cast<double>(p.n_phi2) * p.f_range1 *
                           p.f_range2 / (p.fs * p.fs);
        const double mash = 6.02 * std::log2(arg) + 50.0 * std::log10(osr) +
                            0.9052 +
                            20.0 * std::log10(p.amplitude_fraction);
        rows.push_back({osr, single, mash});
    }
    return rows;
}

void write_sqnr_curve_csv(const std::string& path,
                          std::span<const SqnrRow> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write curve csv: " + path);
    out.precision(10);
    out << "osr,sqnr_single_db,sqnr_mash_db\n";
    for (const auto& r : rows)
        out << r.osr << ',' << r.single_db << ',' << r.mash_db << '\n';
}

double pfm_sideband_center(unsigned n_phi, double f0) {
    if (n_phi < 1 || f0 < 0.0)
        throw std::invalid_argument("pfm_sideband_center: bad inputs");
    return 2.0 * static_cast<double>(n_phi) * f0;
}

} // namespace mashvco
