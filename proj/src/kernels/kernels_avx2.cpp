// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include "hioscar/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace hioscar::kernels::avx2 {

namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d low = _mm256_castpd256_pd128(v);
    const __m128d high = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(low, high);
    const __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double sum = horizontal_sum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void gemv(const double* w, const double* bias, const double* x, double* out, std::size_t rows, std::size_t cols) {
    std::size_t r = 0;
    // Four rows at a time share each load of x.
    for (; r + 4 <= rows; r += 4) {
        const double* w0 = w + r * cols;
        const double* w1 = w0 + cols;
        const double* w2 = w1 + cols;
        const double* w3 = w2 + cols;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        __m256d acc2 = _mm256_setzero_pd();
        __m256d acc3 = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            const __m256d xv = _mm256_loadu_pd(x + c);
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), xv, acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), xv, acc1);
            acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), xv, acc2);
            acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), xv, acc3);
        }
        double s0 = horizontal_sum(acc0);
        double s1 = horizontal_sum(acc1);
        double s2 = horizontal_sum(acc2);
        double s3 = horizontal_sum(acc3);
        for (; c < cols; ++c) {
            s0 += w0[c] * x[c];
            s1 += w1[c] * x[c];
            s2 += w2[c] * x[c];
            s3 += w3[c] * x[c];
        }
        out[r] = bias[r] + s0;
        out[r + 1] = bias[r + 1] + s1;
        out[r + 2] = bias[r + 2] + s2;
        out[r + 3] = bias[r + 3] + s3;
    }
    for (; r < rows; ++r) {
        out[r] = bias[r] + dot(w + r * cols, x, cols);
    }
}

void adam_step(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamCoefficients& coeff) {
    const __m256d b1 = _mm256_set1_pd(coeff.beta1);
    const __m256d b2 = _mm256_set1_pd(coeff.beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - coeff.beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - coeff.beta2);
    const __m256d bc1 = _mm256_set1_pd(coeff.bias_correction1);
    const __m256d bc2 = _mm256_set1_pd(coeff.bias_correction2);
    const __m256d lr = _mm256_set1_pd(coeff.learning_rate);
    const __m256d eps = _mm256_set1_pd(coeff.epsilon);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
        const __m256d vv =
            _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d m_hat = _mm256_div_pd(mv, bc1);
        const __m256d v_hat = _mm256_div_pd(vv, bc2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
    }
    scalar::adam_step(param + i, grad + i, m + i, v + i, n - i, coeff);
}

}  // namespace hioscar::kernels::avx2
