// SPDX-License-Identifier: Apache-2.0
#include "l2a/router.hpp"

#include <cmath>

namespace l2a {

RoutingState route(const SeqMatrix& s, const RouterParams& p, float threshold) {
    if (p.w.rows != 1 || p.w.cols != s.cols) throw ShapeError("route: router weight must be 1 x d");
    RoutingState state;
    state.threshold = threshold;
    state.scores.resize(s.rows);
    state.decisions.resize(s.rows);
    const float* w = p.w.row(0);
    for (int t = 0; t < s.rows; ++t) {
        const float* sr = s.row(t);
        float z = 0;
        for (int j = 0; j < s.cols; ++j) z += w[j] * sr[j];
        const float score = 1.0f / (1.0f + std::exp(-z));
        state.scores[t] = score;
        state.decisions[t] = score >= threshold ? 1 : 0;
    }
    return state;
}

RouterGrads router_backward_ste(const SeqMatrix& s, const RouterParams& p, const RoutingState& state,
                                const std::vector<float>& d_wrt_dhat) {
    if (static_cast<int>(d_wrt_dhat.size()) != s.rows) throw ShapeError("router_backward_ste: upstream length mismatch");
    RouterGrads g;
    g.d_w = SeqMatrix(1, s.cols);
    g.d_s = SeqMatrix(s.rows, s.cols);
    float* dw = g.d_w.row(0);
    const float* w = p.w.row(0);
    for (int t = 0; t < s.rows; ++t) {
        const float dhat = state.scores[t];
        const float dz = d_wrt_dhat[t] * dhat * (1.0f - dhat);
        if (dz == 0.0f) continue;
        const float* sr = s.row(t);
        float* dsr = g.d_s.row(t);
        for (int j = 0; j < s.cols; ++j) {
            dw[j] += dz * sr[j];
            dsr[j] = dz * w[j];
        }
    }
    return g;
}

bool sample_forced_global(Rng& rng, float p_force) {
    if (p_force <= 0.0f) {
        rng.next_u64();  // keep the stream aligned regardless of p
        return false;
    }
    if (p_force >= 1.0f) {
        rng.next_u64();
        return true;
    }
    return rng.bernoulli(p_force);
}

EffectiveMasks effective_decisions(const RoutingState& state) {
    EffectiveMasks m;
    m.output_mask = state.decisions;
    if (state.forced_global) {
        m.compute_mask.assign(state.decisions.size(), 1);
    } else {
        m.compute_mask = state.decisions;
    }
    return m;
}

}  // namespace l2a
