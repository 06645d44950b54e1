// SPDX-License-Identifier: Apache-2.0
#include "l2a/vecops.hpp"

#include <cstdlib>
#include <stdexcept>

namespace l2a::vecops {

float dot_scalar(const float* a, const float* b, int n) {
    float acc = 0.0f;
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(float* x, float alpha, int n) {
    for (int i = 0; i < n; ++i) x[i] *= alpha;
}

namespace {

struct Dispatch {
    Backend backend;
    float (*dot)(const float*, const float*, int);
    void (*axpy)(float, const float*, float*, int);
    void (*scale)(float*, float, int);
};

Dispatch make_dispatch(Backend b) {
    switch (b) {
#ifdef L2A_HAVE_AVX2
        case Backend::kAvx2:
            return {Backend::kAvx2, dot_avx2, axpy_avx2, scale_avx2};
#endif
#ifdef L2A_HAVE_NEON
        case Backend::kNeon:
            return {Backend::kNeon, dot_neon, axpy_neon, scale_neon};
#endif
        default:
            return {Backend::kScalar, dot_scalar, axpy_scalar, scale_scalar};
    }
}

Dispatch g_dispatch = make_dispatch(Backend::kScalar);
bool g_initialized = false;

void ensure_initialized() {
    if (!g_initialized) {
        g_initialized = true;
        select_backend_from_env();
    }
}

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::kScalar: return "scalar";
        case Backend::kAvx2: return "avx2";
        case Backend::kNeon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::kScalar:
            return true;
        case Backend::kAvx2:
#if defined(L2A_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::kNeon:
#ifdef L2A_HAVE_NEON
            return true;  // NEON is baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Backend best_available() {
    if (backend_available(Backend::kAvx2)) return Backend::kAvx2;
    if (backend_available(Backend::kNeon)) return Backend::kNeon;
    return Backend::kScalar;
}

Backend active_backend() {
    ensure_initialized();
    return g_dispatch.backend;
}

void set_backend(Backend b) {
    if (!backend_available(b))
        throw std::runtime_error(std::string("simd backend not available: ") + backend_name(b));
    g_initialized = true;
    g_dispatch = make_dispatch(b);
}

void select_backend_by_name(const std::string& name) {
    if (name == "auto" || name.empty()) {
        set_backend(best_available());
    } else if (name == "scalar") {
        set_backend(Backend::kScalar);
    } else if (name == "avx2") {
        set_backend(Backend::kAvx2);
    } else if (name == "neon") {
        set_backend(Backend::kNeon);
    } else {
        throw std::runtime_error("unknown simd backend: " + name);
    }
}

void select_backend_from_env() {
    const char* env = std::getenv("L2A_SIMD");
    select_backend_by_name(env ? std::string(env) : "auto");
}

float dot(const float* a, const float* b, int n) {
    ensure_initialized();
    return g_dispatch.dot(a, b, n);
}

void axpy(float alpha, const float* x, float* y, int n) {
    ensure_initialized();
    g_dispatch.axpy(alpha, x, y, n);
}

void scale(float* x, float alpha, int n) {
    ensure_initialized();
    g_dispatch.scale(x, alpha, n);
}

}  // namespace l2a::vecops
