#pragma once
#include <cstddef>
#include <string_view>

namespace mashvco::kern {

// Data-parallel inner loops used by the analysis and filtering paths.
// Scalar implementations are the reference; wider variants must match them
// within floating-point reassociation tolerance (equivalence-tested).
struct Ops {
    // sum(a[i] * b[i])
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum(x[i]^2)
    double (*sum_squares)(const double* x, std::size_t n);
    // sum(x[i])
    double (*sum)(const double* x, std::size_t n);
    // acc[i] += (re[i]^2 + im[i]^2) * scale
    void (*power_accum)(double* acc, const double* re, const double* im,
                        double scale, std::size_t n);
    // out[i] = c[0] + c[1]*x[i] + ... + c[nc-1]*x[i]^(nc-1)  (Horner)
    void (*poly_eval)(const double* coef, std::size_t nc, const double* x,
                      double* out, std::size_t n);
    // y[i] = a*x[i] + y[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

// Backend selected once at startup: AVX2 when the CPU supports it, else scalar.
const Ops& active();
// Always the scalar reference backend (used by equivalence tests).
const Ops& scalar();
// Name of the active backend ("scalar", "avx2").
std::string_view active_name();

} // namespace mashvco::kern
