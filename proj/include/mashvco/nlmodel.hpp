#pragma once
// Frequency-dependent nonlinearity model: a polynomial in the clean code x
// plus a polynomial in the first difference of powers of x (the discrete
// time-derivative term), wrapped in an outer power series:
//
//   NL(x[n]) = sum_k c_k * ( sum_i a_i x^i[n] + sum_j b_j (x^j[n]-x^j[n-1]) )^k
//
// x is the capture code mapped to a normalized fit domain by (d-offset)/scale.

#include <string>
#include <vector>

#include "mashvco/stream.hpp"

namespace mashvco {

struct NlOrders {
    unsigned ni = 5; // static polynomial, exponents 0..ni
    unsigned nj = 5; // derivative polynomial, exponents 1..nj
    unsigned nk = 2; // outer power series, exponents 1..nk
};

struct NlModel {
    std::vector<double> a; // ni+1 entries, a[i] multiplies x^i
    std::vector<double> b; // nj entries, b[j-1] multiplies x^j[n]-x^j[n-1]
    std::vector<double> c; // nk entries, c[k-1] multiplies inner^k
    NlOrders orders;
    // x = (code - norm_offset) / norm_scale
    double norm_offset = 0.0;
    double norm_scale = 1.0;
    double fit_rms = 0.0; // residual after fitting, in normalized units
    unsigned iterations = 0;

    double normalize(double code) const { return (code - norm_offset) / norm_scale; }
    double denormalize(double x) const { return x * norm_scale + norm_offset; }
};

// Least-squares fit of the model to an extracted distortion stream. Both
// streams come from decompose() on the same capture: d_cl is signal plus
// distortion, dist is the distortion alone. Alternates a Gauss-Newton step
// on (a, b) with a linear solve for c until the residual stops moving
// (relative change < 1e-9). Throws on rank deficiency (insufficient code
// coverage) or failure to converge within 50 alternations.
NlModel fit_nl(const SampleStream& d_cl, const SampleStream& dist,
               NlOrders orders = {});

// Evaluate the model on a stream of raw codes. First sample uses a zero
// difference term. Output is scaled back to code units (it is a deviation,
// so only norm_scale applies, not the offset).
SampleStream eval_nl(const NlModel& m, const SampleStream& d_cl);

// Versioned JSON round-trip; coefficients are serialized as decimal strings
// with 17 significant digits so a reload is bit-exact.
std::string nlmodel_to_json(const NlModel& m);
NlModel nlmodel_from_json(const std::string& text);
void write_nlmodel_json(const std::string& path, const NlModel& m);
NlModel read_nlmodel_json(const std::string& path);

} // namespace mashvco
