#pragma once

// Dense double-precision kernels behind the head's forward/backward pass,
// the optimizer, and the distance computations. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant. The variant
// is picked once at startup from CPUID; HIOSCAR_SIMD=scalar|avx2 overrides.

#include <cstddef>
#include <span>
#include <string_view>

namespace hioscar::kernels {

struct AdamCoefficients {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    std::string_view name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // out[r] = bias[r] + sum_c w[r * cols + c] * x[c]
    void (*gemv)(const double* w, const double* bias, const double* x, double* out, std::size_t rows,
                 std::size_t cols);
    void (*adam_step)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoefficients& coeff);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();
const KernelTable& active();

/// Forces a variant by name ("scalar", "avx2"); returns false if unavailable.
bool select(std::string_view name);

// Span conveniences routed through the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_distance(std::span<const double> a, std::span<const double> b);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void gemv(const double* w, const double* bias, const double* x, double* out, std::size_t rows, std::size_t cols);
void adam_step(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamCoefficients& coeff);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void gemv(const double* w, const double* bias, const double* x, double* out, std::size_t rows, std::size_t cols);
void adam_step(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamCoefficients& coeff);
}  // namespace avx2

}  // namespace hioscar::kernels
