#pragma once
// Linear-phase FIR decimation. Output keeps only fully-overlapped,
// group-delay-compensated samples: edge transients are trimmed, not
// zero-filled, so a decimated capture can go straight into a spectrum.

#include <span>
#include <vector>

#include "mashvco/stream.hpp"

namespace mashvco {

struct DecimationStage {
    unsigned factor = 2;
    std::vector<double> taps; // odd length, symmetric, DC gain 1
};

// The correction pipeline decimates in two places: by pre_factor before the
// nonlinearity correction (removes out-of-band shaped noise that the
// nonlinearity would fold in-band) and by post_factor after it.
struct DecimationSpec {
    std::vector<DecimationStage> pre;
    std::vector<DecimationStage> post;
    unsigned pre_factor() const;
    unsigned post_factor() const;
};

// Kaiser-windowed lowpass; frequencies are fractions of the sample rate.
std::vector<double> kaiser_lowpass(double pass_frac, double stop_frac,
                                   double atten_db);
// Half-band special case: stopband edge mirrors the passband edge about
// rate/4, every second tap is structurally zero.
std::vector<double> kaiser_halfband(double pass_frac, double atten_db);

// Cascaded half-band stages for the given factors (powers of two). Each
// stage protects an eighth of its input rate; the last post stage uses a
// tighter transition since its output Nyquist sits at the band edge.
DecimationSpec make_decimation_spec(unsigned pre = 4, unsigned post = 4,
                                    double atten_db = 80.0);

// Filter + keep every factor-th sample. Only samples where the filter fully
// overlaps the input are emitted, aligned to the filter center, so the
// output is delay-compensated. Throws if the stream is shorter than taps.
SampleStream decimate(const SampleStream& in, unsigned factor,
                      std::span<const double> taps);

SampleStream apply_stages(const SampleStream& in,
                          std::span<const DecimationStage> stages);

} // namespace mashvco
