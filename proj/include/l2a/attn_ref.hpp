// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "l2a/mat.hpp"
#include "l2a/numcore.hpp"

// Reference attention: dense causal and sliding-window forward plus analytic
// backward. These are both model components (the local path) and the
// correctness oracles for the tiled kernel, so they use plain scalar loops
// rather than the dispatched vecops primitives.
namespace l2a {

struct CausalMaskSpec {
    enum class Kind { kGlobal, kWindow };
    Kind kind = Kind::kGlobal;
    int window = 0;

    static CausalMaskSpec global() { return {Kind::kGlobal, 0}; }
    // Token t attends to itself and the w preceding tokens: 0 <= qpos - kpos <= w.
    static CausalMaskSpec windowed(int w) { return {Kind::kWindow, w}; }

    bool valid(int qpos, int kpos) const {
        const int delta = qpos - kpos;
        if (delta < 0) return false;
        return kind == Kind::kGlobal || delta <= window;
    }
};

template <typename T>
struct DenseAttnResult {
    Mat<T> out;
    std::vector<T> lse;  // per query row: max + log sum exp over valid keys
};

// Single-head attention over already-projected q/k/v. Query rows are aligned
// to the tail of the key sequence: absolute position of query row t is
// k.rows - q.rows + t (prefill convention).
template <typename T>
DenseAttnResult<T> dense_causal_attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v,
                                          const CausalMaskSpec& mask) {
    if (q.cols != k.cols || k.cols != v.cols) throw ShapeError("dense_causal_attention: head_dim mismatch");
    if (k.rows != v.rows) throw ShapeError("dense_causal_attention: k/v row mismatch");
    if (q.rows > k.rows) throw ShapeError("dense_causal_attention: more queries than keys");
    const int n_q = q.rows, n_k = k.rows, hd = q.cols;
    const int offset = n_k - n_q;
    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(hd));
    const T neg_inf = -std::numeric_limits<T>::infinity();

    DenseAttnResult<T> res;
    res.out = Mat<T>(n_q, hd);
    res.lse.assign(n_q, neg_inf);
    std::vector<T> scores(n_k);
    for (int t = 0; t < n_q; ++t) {
        const int qpos = offset + t;
        const T* qr = q.row(t);
        T m = neg_inf;
        for (int j = 0; j < n_k; ++j) {
            if (!mask.valid(qpos, j)) {
                scores[j] = neg_inf;
                continue;
            }
            const T* kr = k.row(j);
            T s = 0;
            for (int c = 0; c < hd; ++c) s += qr[c] * kr[c];
            s *= inv_sqrt_d;
            scores[j] = s;
            if (s > m) m = s;
        }
        if (m == neg_inf) continue;  // no valid keys: zero output row
        T sum = 0;
        T* orow = res.out.row(t);
        for (int j = 0; j < n_k; ++j) {
            if (scores[j] == neg_inf) continue;
            T p = std::exp(scores[j] - m);
            sum += p;
            const T* vr = v.row(j);
            for (int c = 0; c < hd; ++c) orow[c] += p * vr[c];
        }
        for (int c = 0; c < hd; ++c) orow[c] /= sum;
        res.lse[t] = m + std::log(sum);
    }
    return res;
}

// Forward tensors retained for the analytic backward.
struct DenseAttnSaved {
    SeqMatrix q, k, v, out;
    std::vector<float> lse;
    CausalMaskSpec mask;
};

inline DenseAttnResult<float> dense_causal_attention_saved(const SeqMatrix& q, const SeqMatrix& k,
                                                           const SeqMatrix& v, const CausalMaskSpec& mask,
                                                           DenseAttnSaved* saved) {
    DenseAttnResult<float> res = dense_causal_attention(q, k, v, mask);
    if (saved) *saved = DenseAttnSaved{q, k, v, res.out, res.lse, mask};
    return res;
}

struct AttnGradsQKV {
    SeqMatrix d_q, d_k, d_v;
};

// Analytic gradients of dense masked attention wrt q, k, v; recomputes the
// probabilities per row from the saved log-sum-exp.
AttnGradsQKV dense_attention_backward(const DenseAttnSaved& saved, const SeqMatrix& d_out);

template <typename T>
struct AttnParamsT {
    Mat<T> w_q, w_k, w_v, w_o;  // each d x d
    int num_heads = 1;
    RopeConfig rope;

    int dim() const { return w_q.rows; }
    int head_dim() const { return dim() / num_heads; }
};
using AttnParams = AttnParamsT<float>;

template <typename T>
Mat<T> slice_cols(const Mat<T>& m, int c0, int width) {
    Mat<T> out(m.rows, width);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < width; ++j) out.at(i, j) = m.at(i, c0 + j);
    return out;
}

template <typename T>
void paste_cols(Mat<T>& dest, const Mat<T>& src, int c0) {
    for (int i = 0; i < src.rows; ++i)
        for (int j = 0; j < src.cols; ++j) dest.at(i, c0 + j) = src.at(i, j);
}

// Full sliding-window attention module: project, RoPE, per-head windowed
// attention, concatenate, output projection.
template <typename T>
Mat<T> sliding_window_attention(const Mat<T>& x, const AttnParamsT<T>& p, int window) {
    if (x.cols != p.dim()) throw ShapeError("sliding_window_attention: dim mismatch");
    const int n = x.rows, hd = p.head_dim();
    std::vector<int> positions(n);
    for (int t = 0; t < n; ++t) positions[t] = t;
    RopeConfig rope = p.rope;
    rope.head_dim = hd;
    const Mat<T> qf = matmul(x, p.w_q), kf = matmul(x, p.w_k), vf = matmul(x, p.w_v);
    Mat<T> concat(n, p.dim());
    const CausalMaskSpec mask = CausalMaskSpec::windowed(window);
    for (int h = 0; h < p.num_heads; ++h) {
        Mat<T> qh = apply_rope(slice_cols(qf, h * hd, hd), positions, rope);
        Mat<T> kh = apply_rope(slice_cols(kf, h * hd, hd), positions, rope);
        Mat<T> vh = slice_cols(vf, h * hd, hd);
        auto res = dense_causal_attention(qh, kh, vh, mask);
        paste_cols(concat, res.out, h * hd);
    }
    return matmul(concat, p.w_o);
}

// Multi-head dense attention with saved state, used by the local path and as
// the dense-global oracle inside the model tests.
struct MhaSaved {
    SeqMatrix x;
    std::vector<SeqMatrix> q, k, v;        // per head, q/k post-RoPE
    std::vector<SeqMatrix> head_out;       // per head
    std::vector<std::vector<float>> lse;   // per head
    SeqMatrix concat;
    CausalMaskSpec mask;
};

SeqMatrix mha_dense_forward(const SeqMatrix& x, const AttnParams& p, const CausalMaskSpec& mask, MhaSaved* saved);

struct MhaGrads {
    SeqMatrix d_x, d_wq, d_wk, d_wv, d_wo;
};

MhaGrads mha_dense_backward(const AttnParams& p, const MhaSaved& saved, const SeqMatrix& d_out);

}  // namespace l2a
