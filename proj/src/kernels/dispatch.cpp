#include "hioscar/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace hioscar::kernels {

namespace {

constexpr KernelTable kScalar{"scalar", scalar::dot, scalar::axpy, scalar::squared_distance, scalar::gemv,
                              scalar::adam_step};

#if HIOSCAR_HAVE_AVX2
constexpr KernelTable kAvx2{"avx2", avx2::dot, avx2::axpy, avx2::squared_distance, avx2::gemv, avx2::adam_step};

bool cpu_has_avx2() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* detect() {
    const KernelTable* best = &kScalar;
    if (const KernelTable* wide = avx2_table()) {
        best = wide;
    }
    if (const char* forced = std::getenv("HIOSCAR_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") {
            return &kScalar;
        }
        if (name == "avx2" && avx2_table() != nullptr) {
            return avx2_table();
        }
    }
    return best;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{detect()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if HIOSCAR_HAVE_AVX2
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
    if (name == "scalar") {
        current().store(&kScalar);
        return true;
    }
    if (name == "avx2" && avx2_table() != nullptr) {
        current().store(avx2_table());
        return true;
    }
    return false;
}

double dot(std::span<const double> a, std::span<const double> b) { return active().dot(a.data(), b.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace hioscar::kernels
