#include "mashvco/kernels.hpp"

namespace mashvco::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void power_accum_scalar(double* acc, const double* re, const double* im,
                        double scale, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        acc[i] += (re[i] * re[i] + im[i] * im[i]) * scale;
}

void poly_eval_scalar(const double* coef, std::size_t nc, const double* x,
                      double* out, std::size_t n) {
    if (nc == 0) {
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = coef[nc - 1];
        for (std::size_t k = nc - 1; k-- > 0;) v = v * x[i] + coef[k];
        out[i] = v;
    }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

} // namespace

const Ops& scalar() {
    static const Ops ops{dot_scalar,        sum_squares_scalar, sum_scalar,
                         power_accum_scalar, poly_eval_scalar,  axpy_scalar};
    return ops;
}

} // namespace mashvco::kern
