// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace l2a {

// Counter-based splittable generator. Each output is a stateless hash of
// (key, counter), so streams derived via split() never shift when another
// stream draws more or fewer values. Identical seed gives an identical u64
// stream on every platform.
struct Rng {
    uint64_t key = 0;
    uint64_t counter = 0;

    static constexpr uint64_t kPhi = 0x9E3779B97F4A7C15ull;

    static uint64_t mix64(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static Rng seeded(uint64_t seed) { return Rng{mix64(seed + kPhi), 0}; }

    // Independent stream for a tagged purpose, e.g. (layer, step).
    Rng split(uint64_t tag) const { return Rng{mix64(key ^ mix64(tag + kPhi)), 0}; }
    Rng split2(uint64_t a, uint64_t b) const { return split(a).split(b); }

    uint64_t next_u64() {
        ++counter;
        return mix64(key + counter * kPhi);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float next_float() { return static_cast<float>(next_double()); }

    // Uniform in [lo, hi).
    float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    int next_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    bool bernoulli(double p) { return next_double() < p; }

    // Box-Muller; two draws per sample, no cached state.
    float normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
    }
};

}  // namespace l2a
