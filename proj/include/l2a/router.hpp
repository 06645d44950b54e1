// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "l2a/mat.hpp"
#include "l2a/rng.hpp"

// Routing function: linear score + sigmoid, threshold decision,
// straight-through gradient, and the Bernoulli forced-global draw that
// prevents router collapse.
namespace l2a {

struct RouterParams {
    SeqMatrix w;  // 1 x d, zero-initialized so every token routes at start

    static RouterParams zeros(int d) {
        RouterParams p;
        p.w = SeqMatrix(1, d);
        return p;
    }
};

struct RoutingState {
    std::vector<float> scores;       // sigmoid(w . s_t), in [0,1]
    std::vector<uint8_t> decisions;  // scores[t] >= threshold (ties route to global)
    float threshold = 0.5f;
    bool forced_global = false;
};

RoutingState route(const SeqMatrix& s, const RouterParams& p, float threshold);

struct RouterGrads {
    SeqMatrix d_w;  // 1 x d
    SeqMatrix d_s;  // n x d
};

// Straight-through estimator: gradients flow through the sigmoid as if the
// discrete decision were the continuous score.
// d_w = sum_t d_wrt_dhat[t] * dhat_t (1 - dhat_t) * s_t^T, d_s analogous.
RouterGrads router_backward_ste(const SeqMatrix& s, const RouterParams& p, const RoutingState& state,
                                const std::vector<float>& d_wrt_dhat);

// One draw per training iteration; heads means compute global attention for
// every token this step (output still masked by the decisions).
bool sample_forced_global(Rng& rng, float p_force);

struct EffectiveMasks {
    std::vector<uint8_t> compute_mask;  // which queries the kernel computes
    std::vector<uint8_t> output_mask;   // what multiplies a_t; always the decisions
};

EffectiveMasks effective_decisions(const RoutingState& state);

}  // namespace l2a
