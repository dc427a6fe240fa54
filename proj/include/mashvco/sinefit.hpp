#pragma once
#include "mashvco/stream.hpp"

namespace mashvco {

struct SineFit {
    double amp = 0.0;       // nonnegative
    double freq = 0.0;      // Hz
    double phase_rad = 0.0; // x[k] ~ offset + amp*sin(2*pi*freq*k/rate + phase)
    double offset = 0.0;
    double rms_residual = 0.0;
    unsigned iterations = 0;
};

// Least-squares single-tone fit. With refine_freq the frequency joins the
// parameter vector (Newton steps on the linearized model); otherwise f_guess
// is trusted and only amplitude/phase/offset are solved.
SineFit sine_fit(const SampleStream& x, double f_guess,
                 bool refine_freq = true);

struct Decomposition {
    SampleStream signal;     // offset + fitted fundamental
    SampleStream distortion; // harmonics 2..n_harmonics at folded frequencies
    SampleStream residual;   // x - signal - distortion
    SineFit fundamental;
};

// Splits a captured record into fundamental, harmonic distortion, and
// residual. Harmonics are fitted at their aliased frequencies; an order whose
// alias lands on the fundamental is an error (the record cannot separate
// them), so pick tone frequencies that keep harmonic folds clear.
Decomposition decompose(const SampleStream& x, double f_guess,
                        unsigned n_harmonics = 5);

} // namespace mashvco
