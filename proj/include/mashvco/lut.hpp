#pragma once
// Bit-accurate realization of the nonlinearity correction: the two inner
// polynomials become 512-entry lookup tables in signed 14-bit fixed point,
// indexed by the top 9 bits of the normalized code with the remaining bits
// interpolating linearly. The outer c coefficients stay in full precision.

#include <array>
#include <cstdint>
#include <string>

#include "mashvco/decimate.hpp"
#include "mashvco/nlmodel.hpp"
#include "mashvco/stream.hpp"

namespace mashvco {

inline constexpr std::size_t kLutSize = 512;
inline constexpr int kFixedBits = 14;
// Q1.13: code = value * 8192, representable range [-1, 0.99988].
inline constexpr int kFixedOne = 8192;
inline constexpr int kFixedMax = kFixedOne - 1;
inline constexpr int kFixedMin = -kFixedOne;

struct CorrectionLUT {
    std::array<std::int16_t, kLutSize> lut_a{};
    std::array<std::int16_t, kLutSize> lut_b{};
    std::vector<double> c; // retained in full form
    NlOrders orders;
    double norm_offset = 0.0;
    double norm_scale = 1.0;

    // Normalized value of LUT node m (top-9-bit grid over [-1, 1)).
    static double node(std::size_t m) {
        return static_cast<double>(m) / 256.0 - 1.0;
    }
};

// Tabulate the model's inner polynomials at the 512 grid nodes and quantize
// round-half-to-even. Throws if any node value falls outside the 14-bit
// range (the model normalization is expected to keep values well inside).
CorrectionLUT build_lut(const NlModel& m);

enum class CorrectPlacement {
    after_pre_decimation, // the normal pipeline
    before_decimation,    // A/B reference: correct at full rate, then decimate
};

struct CorrectionResult {
    SampleStream corrected;     // at rate / (pre_factor * post_factor)
    SampleStream corrected_mid; // after correction, before post decimation
    std::uint64_t domain_clamps = 0; // codes outside the LUT domain
    std::uint64_t saturations = 0;   // 14-bit overflows inside the arithmetic
};

// Fixed-point path: pre-decimate, quantize codes to 14 bits, subtract the
// LUT-evaluated nonlinearity estimate, post-decimate.
CorrectionResult correct(const SampleStream& d, const CorrectionLUT& lut,
                         const DecimationSpec& dec,
                         CorrectPlacement placement =
                             CorrectPlacement::after_pre_decimation);

// Float reference path through the same pipeline (no quantization).
CorrectionResult correct_float(const SampleStream& d, const NlModel& m,
                               const DecimationSpec& dec,
                               CorrectPlacement placement =
                                   CorrectPlacement::after_pre_decimation);

// JSON round-trip (entries exact integers, c as decimal strings) and a
// hardware-style export: one 14-bit two's-complement hex word per line.
std::string lut_to_json(const CorrectionLUT& lut);
CorrectionLUT lut_from_json(const std::string& text);
void write_lut_json(const std::string& path, const CorrectionLUT& lut);
CorrectionLUT read_lut_json(const std::string& path);
void write_lut_hex(const CorrectionLUT& lut, const std::string& path_a,
                   const std::string& path_b);

} // namespace mashvco
