#pragma once
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mashvco {

// Static oscillator tuning curve. Frequency at absolute input x is
//   f(x) = f0 + gain_k*(x - mid) + nl_poly(s),  s = (x - mid)/half
// with mid/half taken from input_range, so nl coefficients are dimensionless
// in s and nl_poly(0) must be 0 (f at midpoint is exactly f0).
struct TuningCurve {
    double f0 = 0.0;     // Hz at the midpoint of input_range
    double gain_k = 0.0; // Hz per input unit
    std::vector<double> nl_poly; // constant term first; [0] must be 0
    double x_min = -1.0;
    double x_max = 1.0;
    std::string name;

    double midpoint() const { return 0.5 * (x_min + x_max); }
    double half_range() const { return 0.5 * (x_max - x_min); }
};

// Inputs outside input_range clamp (oscillator saturates); *clamped is set
// so callers can count saturation events.
double tuning_frequency(const TuningCurve& curve, double x,
                        bool* clamped = nullptr);

struct FreqCheck {
    bool pass = false;
    double f_min = 0.0;
    double f_max = 0.0;
    double margin_hz = 0.0; // fs/2 - f_max (negative on breach)
};

// Oscillation stays physical only while 0 < f < fs/2 across the whole input
// range; evaluated on a dense grid.
FreqCheck max_frequency_check(const TuningCurve& curve, double fs);

// max |f - least-squares line| / (f_max - f_min) over input_range.
double curve_inl(const TuningCurve& curve);

// Odd part of the curve about its midpoint: what a cross-coupled pair with
// summed drive currents effectively sees. Even-order bend cancels.
TuningCurve cross_coupled_equivalent(const TuningCurve& curve);

struct FitReport {
    TuningCurve curve;
    double rms_residual = 0.0;
    double max_residual = 0.0;
};

// Least-squares polynomial fit to tabulated (x, Hz) points, x strictly
// increasing, n_points >= max(2, order+1).
FitReport fit_curve_from_table(
    const std::vector<std::pair<double, double>>& points, unsigned order);

// Two-column CSV (x,Hz per line; '#' comments allowed).
std::vector<std::pair<double, double>> read_curve_table_csv(
    const std::string& path);
void write_curve_table_csv(const std::string& path,
                           const std::vector<std::pair<double, double>>& pts);

// Named presets:
//   stage1_linear  1.0 GHz center, 1.21 GHz span over +-375 mV drive
//   stage2_linear  0.9 GHz center, 49.0625 MHz per count over 0..32 counts
//   stage2_inl18   bent single-ended curve, 18% INL
//   stage2_inl3    its odd-symmetric counterpart, 3% INL
TuningCurve tuning_preset(std::string_view name);
std::vector<std::string> tuning_preset_names();

} // namespace mashvco
