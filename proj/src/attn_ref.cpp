// SPDX-License-Identifier: Apache-2.0
#include "l2a/attn_ref.hpp"

namespace l2a {

AttnGradsQKV dense_attention_backward(const DenseAttnSaved& saved, const SeqMatrix& d_out) {
    const SeqMatrix &q = saved.q, &k = saved.k, &v = saved.v;
    if (!d_out.same_shape(saved.out)) throw ShapeError("dense_attention_backward: d_out shape mismatch");
    const int n_q = q.rows, n_k = k.rows, hd = q.cols;
    const int offset = n_k - n_q;
    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(hd));
    const float neg_inf = -std::numeric_limits<float>::infinity();

    AttnGradsQKV g;
    g.d_q = SeqMatrix(n_q, hd);
    g.d_k = SeqMatrix(n_k, hd);
    g.d_v = SeqMatrix(n_k, hd);

    // Row t: p_j = exp(s_tj - lse_t); dv_j += p_j do_t; dp_j = do_t . v_j;
    // ds_tj = p_j (dp_j - delta_t) with delta_t = do_t . out_t.
    for (int t = 0; t < n_q; ++t) {
        if (saved.lse[t] == neg_inf) continue;
        const int qpos = offset + t;
        const float* qr = q.row(t);
        const float* dor = d_out.row(t);
        const float* orow = saved.out.row(t);
        float delta = 0;
        for (int c = 0; c < hd; ++c) delta += dor[c] * orow[c];
        float* dqr = g.d_q.row(t);
        for (int j = 0; j < n_k; ++j) {
            if (!saved.mask.valid(qpos, j)) continue;
            const float* kr = k.row(j);
            float s = 0;
            for (int c = 0; c < hd; ++c) s += qr[c] * kr[c];
            const float p = std::exp(s * inv_sqrt_d - saved.lse[t]);
            const float* vr = v.row(j);
            float dp = 0;
            for (int c = 0; c < hd; ++c) dp += dor[c] * vr[c];
            const float ds = p * (dp - delta) * inv_sqrt_d;
            float* dkr = g.d_k.row(j);
            float* dvr = g.d_v.row(j);
            for (int c = 0; c < hd; ++c) {
                dvr[c] += p * dor[c];
                dqr[c] += ds * kr[c];
                dkr[c] += ds * qr[c];
            }
        }
    }
    return g;
}

SeqMatrix mha_dense_forward(const SeqMatrix& x, const AttnParams& p, const CausalMaskSpec& mask, MhaSaved* saved) {
    if (x.cols != p.dim()) throw ShapeError("mha_dense_forward: dim mismatch");
    const int n = x.rows, d = p.dim(), hd = p.head_dim();
    std::vector<int> positions(n);
    for (int t = 0; t < n; ++t) positions[t] = t;
    RopeConfig rope = p.rope;
    rope.head_dim = hd;

    const SeqMatrix qf = matmul(x, p.w_q), kf = matmul(x, p.w_k), vf = matmul(x, p.w_v);
    SeqMatrix concat(n, d);
    if (saved) {
        saved->x = x;
        saved->q.clear();
        saved->k.clear();
        saved->v.clear();
        saved->head_out.clear();
        saved->lse.clear();
        saved->mask = mask;
    }
    for (int h = 0; h < p.num_heads; ++h) {
        SeqMatrix qh = apply_rope(slice_cols(qf, h * hd, hd), positions, rope);
        SeqMatrix kh = apply_rope(slice_cols(kf, h * hd, hd), positions, rope);
        SeqMatrix vh = slice_cols(vf, h * hd, hd);
        auto res = dense_causal_attention(qh, kh, vh, mask);
        paste_cols(concat, res.out, h * hd);
        if (saved) {
            saved->q.push_back(std::move(qh));
            saved->k.push_back(std::move(kh));
            saved->v.push_back(std::move(vh));
            saved->head_out.push_back(std::move(res.out));
            saved->lse.push_back(std::move(res.lse));
        }
    }
    if (saved) saved->concat = concat;
    return matmul(concat, p.w_o);
}

MhaGrads mha_dense_backward(const AttnParams& p, const MhaSaved& saved, const SeqMatrix& d_out) {
    const int n = saved.x.rows, d = p.dim(), hd = p.head_dim();
    std::vector<int> positions(n);
    for (int t = 0; t < n; ++t) positions[t] = t;
    RopeConfig rope = p.rope;
    rope.head_dim = hd;

    MhaGrads g;
    g.d_wo = matmul(transpose(saved.concat), d_out);
    const SeqMatrix d_concat = matmul(d_out, transpose(p.w_o));

    SeqMatrix d_qf(n, d), d_kf(n, d), d_vf(n, d);
    for (int h = 0; h < p.num_heads; ++h) {
        DenseAttnSaved hs{saved.q[h], saved.k[h], saved.v[h], saved.head_out[h], saved.lse[h], saved.mask};
        const SeqMatrix d_head = slice_cols(d_concat, h * hd, hd);
        AttnGradsQKV ag = dense_attention_backward(hs, d_head);
        paste_cols(d_qf, rope_backward(ag.d_q, positions, rope), h * hd);
        paste_cols(d_kf, rope_backward(ag.d_k, positions, rope), h * hd);
        paste_cols(d_vf, ag.d_v, h * hd);
    }
    g.d_wq = matmul(transpose(saved.x), d_qf);
    g.d_wk = matmul(transpose(saved.x), d_kf);
    g.d_wv = matmul(transpose(saved.x), d_vf);
    g.d_x = matmul(d_qf, transpose(p.w_q));
    add_inplace(g.d_x, matmul(d_kf, transpose(p.w_k)));
    add_inplace(g.d_x, matmul(d_vf, transpose(p.w_v)));
    return g;
}

}  // namespace l2a
