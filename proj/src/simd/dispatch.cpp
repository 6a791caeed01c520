#include <cstdlib>
#include <string_view>

#include "conelab/simd.hpp"

namespace conelab::simd {

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", &scalar::dot, &scalar::axpy, &scalar::max_value};
    return table;
}

const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(__i386__)
    static const KernelTable table{"avx2", &avx2::dot, &avx2::axpy, &avx2::max_value};
    if (__builtin_cpu_supports("avx2")) return &table;
#endif
    return nullptr;
}

const KernelTable* neon_table() {
#if defined(__aarch64__)
    static const KernelTable table{"neon", &neon::dot, &neon::axpy, &neon::max_value};
    return &table;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& choose() {
    const char* env = std::getenv("CONELAB_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    if (const KernelTable* t = neon_table()) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = choose();
    return table;
}

}  // namespace conelab::simd
