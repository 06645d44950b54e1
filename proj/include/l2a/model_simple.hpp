// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "l2a/model.hpp"

// Straight-line forward evaluation of the model with dense global attention
// and no instrumentation. Instantiated at double precision it is the
// finite-difference oracle for the full backward pass; at float it is a
// second route through the math that the kernel-based forward must match.
namespace l2a {

template <typename T>
struct SimpleForwardOpts {
    bool relaxed = false;  // multiply the global branch by the continuous score
    std::optional<float> threshold_override;
    const std::vector<uint8_t>* decisions_override = nullptr;
};

template <typename T>
struct SimpleForwardResult {
    Mat<T> logits;
    std::vector<std::vector<T>> scores;  // per layer, per token (empty rows for pruned layers)
};

template <typename T>
Mat<T> mha_forward_simple(const Mat<T>& x, const AttnParamsT<T>& p, const CausalMaskSpec& mask) {
    const int n = x.rows, hd = p.head_dim();
    std::vector<int> positions(n);
    for (int t = 0; t < n; ++t) positions[t] = t;
    RopeConfig rope = p.rope;
    rope.head_dim = hd;
    const Mat<T> qf = matmul(x, p.w_q), kf = matmul(x, p.w_k), vf = matmul(x, p.w_v);
    Mat<T> concat(n, p.dim());
    for (int h = 0; h < p.num_heads; ++h) {
        Mat<T> qh = apply_rope(slice_cols(qf, h * hd, hd), positions, rope);
        Mat<T> kh = apply_rope(slice_cols(kf, h * hd, hd), positions, rope);
        auto res = dense_causal_attention(qh, kh, slice_cols(vf, h * hd, hd), mask);
        paste_cols(concat, res.out, h * hd);
    }
    return matmul(concat, p.w_o);
}

template <typename T>
SimpleForwardResult<T> model_forward_simple(const ModelT<T>& model, const std::vector<int>& tokens,
                                            const SimpleForwardOpts<T>& opts = {}) {
    const int n = static_cast<int>(tokens.size());
    const int d = model.d;
    SimpleForwardResult<T> res;
    res.scores.resize(model.layers.size());

    Mat<T> x(n, d);
    for (int t = 0; t < n; ++t)
        for (int c = 0; c < d; ++c) x.at(t, c) = model.embed.at(tokens[t], c);

    for (size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        const Mat<T> raw_l = mha_forward_simple(x, layer.local, CausalMaskSpec::windowed(layer.window));
        const Mat<T> ln_l = layer_norm(raw_l, layer.ln_local.gamma, layer.ln_local.beta, static_cast<T>(model.ln_eps));
        Mat<T> s = x + ln_l;
        Mat<T> out = s;
        if (!layer.pruned && layer.global_attn) {
            Mat<T> router_src = (model.router_input == RouterInput::kPostLn) ? s : (x + raw_l);
            std::vector<T>& scores = res.scores[li];
            scores.resize(n);
            const T thr = static_cast<T>(opts.threshold_override.value_or(layer.threshold));
            std::vector<uint8_t> decisions(n);
            for (int t = 0; t < n; ++t) {
                T z = 0;
                for (int c = 0; c < d; ++c) z += layer.router_w.at(0, c) * router_src.at(t, c);
                scores[t] = T(1) / (T(1) + std::exp(-z));
                decisions[t] = scores[t] >= thr ? 1 : 0;
            }
            if (opts.decisions_override) decisions = *opts.decisions_override;
            const Mat<T> a_raw = mha_forward_simple(s, *layer.global_attn, CausalMaskSpec::global());
            const Mat<T> a =
                layer_norm(a_raw, layer.ln_global.gamma, layer.ln_global.beta, static_cast<T>(model.ln_eps));
            for (int t = 0; t < n; ++t) {
                const T scale = opts.relaxed ? scores[t] : static_cast<T>(decisions[t]);
                if (scale == T(0)) continue;
                for (int c = 0; c < d; ++c) out.at(t, c) += scale * a.at(t, c);
            }
        }
        const auto& ffn = model.ffn[li];
        Mat<T> h = matmul(out, ffn.w1);
        for (auto& v : h.data) v = gelu(v);
        x = out + matmul(h, ffn.w2);
    }

    res.logits = model.tie_embeddings ? matmul(x, transpose(model.embed)) : matmul(x, model.unembed);
    return res;
}

// Mean token cross-entropy with a stable log-softmax.
template <typename T>
T cross_entropy(const Mat<T>& logits, const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != logits.rows) throw ShapeError("cross_entropy: target length mismatch");
    T total = 0;
    for (int t = 0; t < logits.rows; ++t) {
        const T* row = logits.row(t);
        T m = row[0];
        for (int j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        T sum = 0;
        for (int j = 0; j < logits.cols; ++j) sum += std::exp(row[j] - m);
        total += m + std::log(sum) - row[targets[t]];
    }
    return total / static_cast<T>(logits.rows);
}

// Full objective of the relaxed forward: NTP + (lambda/(n L)) sum of squared
// scores. This is the function the analytic backward is checked against.
template <typename T>
T relaxed_loss(const ModelT<T>& model, const std::vector<int>& tokens, const std::vector<int>& targets,
               T lambda) {
    SimpleForwardOpts<T> opts;
    opts.relaxed = true;
    auto fw = model_forward_simple(model, tokens, opts);
    T loss = cross_entropy(fw.logits, targets);
    if (lambda != T(0)) {
        const int L = static_cast<int>(model.layers.size());
        const int n = static_cast<int>(tokens.size());
        T reg = 0;
        for (const auto& layer_scores : fw.scores)
            for (T sc : layer_scores) reg += sc * sc;
        loss += lambda / (static_cast<T>(n) * static_cast<T>(L)) * reg;
    }
    return loss;
}

}  // namespace l2a
