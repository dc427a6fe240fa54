#pragma once
#include <span>
#include <string>
#include <vector>

namespace mashvco {

// Uniformly sampled real-valued signal.
struct SampleStream {
    std::vector<double> samples;
    double rate = 0.0; // Hz, > 0
    std::string label;

    std::size_t size() const { return samples.size(); }
};

struct Tone {
    double amp = 0.0;       // peak amplitude, same unit as the stream
    double freq = 0.0;      // Hz, must be < rate/2
    double phase_rad = 0.0;
};

// x[k] = offset + sum_i amp_i * sin(2*pi*f_i * k/rate + phase_i)
SampleStream generate_tone_sum(std::span<const Tone> tones, double offset,
                               double rate, std::size_t n,
                               const std::string& label = "tone");

// CSV layout: "label,<text>" line, "rate,<hz>" line, then one sample per line.
void write_csv(const SampleStream& s, const std::string& path);
SampleStream read_csv(const std::string& path);

// Raw little-endian float64 samples plus a JSON sidecar (<path>.json) carrying
// {schema, label, rate, count}.
void write_f64(const SampleStream& s, const std::string& path);
SampleStream read_f64(const std::string& path);

} // namespace mashvco
