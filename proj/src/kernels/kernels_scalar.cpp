#include "hioscar/kernels.hpp"

#include <cmath>

namespace hioscar::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

void gemv(const double* w, const double* bias, const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = bias[r] + dot(w + r * cols, x, cols);
    }
}

void adam_step(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamCoefficients& coeff) {
    const double one_minus_b1 = 1.0 - coeff.beta1;
    const double one_minus_b2 = 1.0 - coeff.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = coeff.beta1 * m[i] + one_minus_b1 * grad[i];
        v[i] = coeff.beta2 * v[i] + one_minus_b2 * (grad[i] * grad[i]);
        const double m_hat = m[i] / coeff.bias_correction1;
        const double v_hat = v[i] / coeff.bias_correction2;
        param[i] -= coeff.learning_rate * m_hat / (std::sqrt(v_hat) + coeff.epsilon);
    }
}

}  // namespace hioscar::kernels::scalar
