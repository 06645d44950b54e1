// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

// Vector primitives behind the tiled attention kernel's inner loops.
// A scalar reference implementation always exists; AVX2 (x86-64) and NEON
// (aarch64) variants are compiled when the toolchain supports them and
// selected at runtime from CPU features, the L2A_SIMD environment variable,
// or an explicit set_backend() call. The dense reference attention in
// attn_ref deliberately does not use these, so kernel-vs-oracle equivalence
// tests also cover the SIMD paths.
namespace l2a::vecops {

enum class Backend { kScalar, kAvx2, kNeon };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend best_available();
Backend active_backend();
// Throws std::runtime_error if the backend is not available on this machine.
void set_backend(Backend b);
// Honors L2A_SIMD=scalar|avx2|neon|auto; unset or "auto" picks best_available().
void select_backend_from_env();
// Parses the same names as L2A_SIMD; used by CLI config.
void select_backend_by_name(const std::string& name);

// y dot x over n entries.
float dot(const float* a, const float* b, int n);
// y += alpha * x
void axpy(float alpha, const float* x, float* y, int n);
// x *= alpha
void scale(float* x, float alpha, int n);

// Reference implementations, fixed ascending accumulation order.
float dot_scalar(const float* a, const float* b, int n);
void axpy_scalar(float alpha, const float* x, float* y, int n);
void scale_scalar(float* x, float alpha, int n);

#ifdef L2A_HAVE_AVX2
float dot_avx2(const float* a, const float* b, int n);
void axpy_avx2(float alpha, const float* x, float* y, int n);
void scale_avx2(float* x, float alpha, int n);
#endif

#ifdef L2A_HAVE_NEON
float dot_neon(const float* a, const float* b, int n);
void axpy_neon(float alpha, const float* x, float* y, int n);
void scale_neon(float* x, float alpha, int n);
#endif

}  // namespace l2a::vecops
