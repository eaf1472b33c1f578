#include "hioscar/common.hpp"
#include "hioscar/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace hioscar;
namespace k = hioscar::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

// Lengths straddle the 4- and 8-wide vector bodies and their remainders.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 257};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(a)); }

}  // namespace

TEST_CASE("scalar kernels against hand computation") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, -5, 6};
    CHECK(k::scalar::dot(a.data(), b.data(), 3) == 12.0);
    CHECK(k::scalar::squared_distance(a.data(), b.data(), 3) == 9.0 + 49.0 + 9.0);

    std::vector<double> y{1, 1, 1};
    k::scalar::axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3, 5, 7});

    // 2x3 matrix times x plus bias.
    const std::vector<double> w{1, 0, 2, -1, 1, 0};
    const std::vector<double> bias{0.5, -0.5};
    std::vector<double> out(2);
    k::scalar::gemv(w.data(), bias.data(), a.data(), out.data(), 2, 3);
    CHECK(out[0] == 7.5);
    CHECK(out[1] == 0.5);
}

TEST_CASE("scalar adam step matches the textbook update") {
    std::vector<double> p{1.0, -1.0};
    const std::vector<double> g{0.5, -0.25};
    std::vector<double> m(2, 0.0), v(2, 0.0);
    const k::AdamCoefficients c{0.1, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999};
    k::scalar::adam_step(p.data(), g.data(), m.data(), v.data(), 2, c);
    // First step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) up to eps.
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(p[1] == doctest::Approx(-0.9).epsilon(1e-7));
    CHECK(m[0] == doctest::Approx(0.05));
    CHECK(v[1] == doctest::Approx(0.001 * 0.0625));
}

TEST_CASE("avx2 variant matches scalar reference") {
    const auto* simd = k::avx2_table();
    if (simd == nullptr) {
        MESSAGE("AVX2 unavailable on this machine; equivalence skipped");
        return;
    }
    const auto& ref = k::scalar_table();
    Rng rng(7);
    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const auto a = random_vector(n, rng);
        const auto b = random_vector(n, rng);
        CHECK(close(simd->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-12));
        CHECK(close(simd->squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n), 1e-12));

        auto y1 = b;
        auto y2 = b;
        simd->axpy(0.37, a.data(), y1.data(), n);
        ref.axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-15));

        for (std::size_t rows : {1u, 3u, 4u, 5u, 9u}) {
            const auto w = random_vector(rows * n, rng);
            const auto bias = random_vector(rows, rng);
            std::vector<double> o1(rows), o2(rows);
            simd->gemv(w.data(), bias.data(), a.data(), o1.data(), rows, n);
            ref.gemv(w.data(), bias.data(), a.data(), o2.data(), rows, n);
            for (std::size_t r = 0; r < rows; ++r) CHECK(close(o1[r], o2[r], 1e-12));
        }

        auto p1 = a;
        auto p2 = a;
        std::vector<double> m1(n, 0.1), m2(n, 0.1), v1(n, 0.2), v2(n, 0.2);
        const k::AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 1.0 - std::pow(0.9, 3), 1.0 - std::pow(0.999, 3)};
        for (int step = 0; step < 3; ++step) {
            simd->adam_step(p1.data(), b.data(), m1.data(), v1.data(), n, c);
            ref.adam_step(p2.data(), b.data(), m2.data(), v2.data(), n, c);
        }
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(close(p1[i], p2[i], 1e-13));
            CHECK(close(m1[i], m2[i], 1e-15));
            CHECK(close(v1[i], v2[i], 1e-15));
        }
    }
}

TEST_CASE("runtime selection") {
    const std::string before(k::active().name);
    CHECK(k::select("scalar"));
    CHECK(k::active().name == "scalar");
    CHECK_FALSE(k::select("neon-does-not-exist"));
    if (k::avx2_table() != nullptr) {
        CHECK(k::select("avx2"));
        CHECK(k::active().name == "avx2");
    }
    const std::vector<double> a{3, 4};
    CHECK(k::dot(a, a) == 25.0);
    CHECK(k::select(before));
}
