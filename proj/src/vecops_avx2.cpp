// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only called when cpuid reports AVX2+FMA.
#include "l2a/vecops.hpp"

#ifdef L2A_HAVE_AVX2

#include <immintrin.h>

namespace l2a::vecops {

float dot_avx2(const float* a, const float* b, int n) {
    __m256 acc = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        acc = _mm256_fmadd_ps(va, vb, acc);
    }
    // horizontal sum of the 8 lanes
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_hadd_ps(s, s);
    s = _mm_hadd_ps(s, s);
    float out = _mm_cvtss_f32(s);
    for (; i < n; ++i) out += a[i] * b[i];
    return out;
}

void axpy_avx2(float alpha, const float* x, float* y, int n) {
    __m256 va = _mm256_set1_ps(alpha);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        __m256 vx = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, vx, vy));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(float* x, float alpha, int n) {
    __m256 va = _mm256_set1_ps(alpha);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace l2a::vecops

#endif  // L2A_HAVE_AVX2
