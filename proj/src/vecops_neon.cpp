// SPDX-License-Identifier: Apache-2.0
#include "l2a/vecops.hpp"

#ifdef L2A_HAVE_NEON

#include <arm_neon.h>

namespace l2a::vecops {

float dot_neon(const float* a, const float* b, int n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    }
    float out = vaddvq_f32(acc);
    for (; i < n; ++i) out += a[i] * b[i];
    return out;
}

void axpy_neon(float alpha, const float* x, float* y, int n) {
    float32x4_t va = vdupq_n_f32(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(float* x, float alpha, int n) {
    float32x4_t va = vdupq_n_f32(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(x + i, vmulq_f32(vld1q_f32(x + i), va));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace l2a::vecops

#endif  // L2A_HAVE_NEON
