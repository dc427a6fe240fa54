#if defined(__x86_64__) || defined(_M_X64)
#include "mashvco/kernels.hpp"
#include <immintrin.h>

namespace mashvco::kern {

namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum256(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_squares_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d v0 = _mm256_loadu_pd(x + i);
        __m256d v1 = _mm256_loadu_pd(x + i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
    }
    double acc = hsum256(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum256(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void power_accum_avx2(double* acc, const double* re, const double* im,
                      double scale, std::size_t n) {
    __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_loadu_pd(re + i);
        __m256d m = _mm256_loadu_pd(im + i);
        __m256d p = _mm256_fmadd_pd(m, m, _mm256_mul_pd(r, r));
        __m256d a = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(p, vs, a));
    }
    for (; i < n; ++i) acc[i] += (re[i] * re[i] + im[i] * im[i]) * scale;
}

void poly_eval_avx2(const double* coef, std::size_t nc, const double* x,
                    double* out, std::size_t n) {
    if (nc == 0) {
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
        return;
    }
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d v = _mm256_set1_pd(coef[nc - 1]);
        for (std::size_t k = nc - 1; k-- > 0;)
            v = _mm256_fmadd_pd(v, xv, _mm256_set1_pd(coef[k]));
        _mm256_storeu_pd(out + i, v);
    }
    for (; i < n; ++i) {
        double v = coef[nc - 1];
        for (std::size_t k = nc - 1; k-- > 0;) v = v * x[i] + coef[k];
        out[i] = v;
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yv));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops{dot_avx2,        sum_squares_avx2, sum_avx2,
                         power_accum_avx2, poly_eval_avx2,  axpy_avx2};
    return ops;
}

} // namespace mashvco::kern
#endif
