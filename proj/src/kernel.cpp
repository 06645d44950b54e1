// SPDX-License-Identifier: Apache-2.0
#include "l2a/kernel.hpp"

#include <cmath>
#include <limits>

#include "l2a/parallel.hpp"
#include "l2a/vecops.hpp"

namespace l2a::kernel {

bool g_fault_flip_mask_bit = false;

namespace {
constexpr float kNegInf = -std::numeric_limits<float>::infinity();

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }
}  // namespace

CompactedQueries compact_queries(const SeqMatrix& q, const std::vector<uint8_t>& decisions) {
    if (static_cast<int>(decisions.size()) != q.rows) throw ShapeError("compact_queries: decisions length mismatch");
    CompactedQueries cq;
    cq.n = q.rows;
    for (int t = 0; t < q.rows; ++t)
        if (decisions[t]) cq.q_idx.push_back(t);
    cq.q_c = SeqMatrix(static_cast<int>(cq.q_idx.size()), q.cols);
    for (int i = 0; i < cq.q_c.rows; ++i) {
        const float* src = q.row(cq.q_idx[i]);
        float* dst = cq.q_c.row(i);
        for (int c = 0; c < q.cols; ++c) dst[c] = src[c];
    }
    return cq;
}

SparseFwdResult sparse_attention_forward(const CompactedQueries& cq, const SeqMatrix& k, const SeqMatrix& v,
                                         const TileConfig& tiles, const KernelOptions& opts) {
    if (tiles.b_q < 1 || tiles.b_k < 1) throw ShapeError("sparse_attention_forward: tile sizes must be >= 1");
    if (k.rows != v.rows || k.rows != cq.n) throw ShapeError("sparse_attention_forward: k/v rows must equal cq.n");
    const int n_c = cq.q_c.rows;
    const int hd = k.cols;
    if (n_c > 0 && cq.q_c.cols != hd) throw ShapeError("sparse_attention_forward: head_dim mismatch");

    SparseFwdResult res;
    res.o_c = SeqMatrix(n_c, hd);
    res.lse_c.assign(n_c, kNegInf);
    if (n_c == 0) return res;

    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(hd));
    const int num_q_blocks = ceil_div(n_c, tiles.b_q);
    const int total_k_blocks = ceil_div(cq.n, tiles.b_k);
    std::vector<KernelStats> block_stats(num_q_blocks);

    parallel_for(num_q_blocks, opts.threads, [&](int qb) {
        const int r0 = qb * tiles.b_q;
        const int r1 = std::min(n_c, r0 + tiles.b_q);
        const int bq_len = r1 - r0;

        int max_pos = 0;
        for (int i = r0; i < r1; ++i) max_pos = std::max(max_pos, cq.q_idx[i]);
        const int k_blocks = opts.visit_all_tiles ? total_k_blocks : ceil_div(max_pos + 1, tiles.b_k);

        std::vector<float> m(bq_len, kNegInf);
        std::vector<float> l(bq_len, 0.0f);
        SeqMatrix o_acc(bq_len, hd);
        std::vector<float> scores(tiles.b_k);
        KernelStats& stats = block_stats[qb];

        for (int kb = 0; kb < k_blocks; ++kb) {
            const int c0 = kb * tiles.b_k;
            const int c1 = std::min(cq.n, c0 + tiles.b_k);
            stats.key_tile_visits++;
            stats.macs += static_cast<int64_t>(bq_len) * (c1 - c0) * 2 * hd;

            for (int qi = 0; qi < bq_len; ++qi) {
                const int qpos = cq.q_idx[r0 + qi];
                const float* qr = cq.q_c.row(r0 + qi);
                float tile_max = kNegInf;
                for (int j = c0; j < c1; ++j) {
                    bool valid = qpos >= j;
                    if (g_fault_flip_mask_bit && qb == 0 && kb == 0 && qi == 0 && j == c0) valid = !valid;
                    if (!valid) {
                        scores[j - c0] = kNegInf;
                        continue;
                    }
                    const float s = vecops::dot(qr, k.row(j), hd) * inv_sqrt_d;
                    scores[j - c0] = s;
                    if (s > tile_max) tile_max = s;
                }
                // fully masked row-tile: keep (m, l, o) untouched
                if (tile_max == kNegInf) continue;
                const float m_new = std::max(m[qi], tile_max);
                if (m[qi] != kNegInf && m[qi] != m_new) {
                    const float alpha = std::exp(m[qi] - m_new);
                    l[qi] *= alpha;
                    vecops::scale(o_acc.row(qi), alpha, hd);
                }
                for (int j = c0; j < c1; ++j) {
                    if (scores[j - c0] == kNegInf) continue;
                    const float p = std::exp(scores[j - c0] - m_new);
                    l[qi] += p;
                    vecops::axpy(p, v.row(j), o_acc.row(qi), hd);
                }
                m[qi] = m_new;
            }
        }

        for (int qi = 0; qi < bq_len; ++qi) {
            if (l[qi] <= 0.0f) continue;  // no valid keys seen: zero row, lse -inf
            const float inv_l = 1.0f / l[qi];
            const float* src = o_acc.row(qi);
            float* dst = res.o_c.row(r0 + qi);
            for (int c = 0; c < hd; ++c) dst[c] = src[c] * inv_l;
            res.lse_c[r0 + qi] = m[qi] + std::log(l[qi]);
        }
    });

    for (const auto& s : block_stats) res.stats += s;
    return res;
}

SeqMatrix scatter_outputs(const SeqMatrix& o_c, const std::vector<int>& q_idx, int n) {
    if (o_c.rows != static_cast<int>(q_idx.size())) throw ShapeError("scatter_outputs: row/index count mismatch");
    SeqMatrix out(n, o_c.cols);
    for (int i = 0; i < o_c.rows; ++i) {
        if (q_idx[i] < 0 || q_idx[i] >= n) throw ShapeError("scatter_outputs: index out of range");
        const float* src = o_c.row(i);
        float* dst = out.row(q_idx[i]);
        for (int c = 0; c < o_c.cols; ++c) dst[c] = src[c];
    }
    return out;
}

SparseGrads sparse_attention_backward(const SparseSaved& saved, const SeqMatrix& d_o, const TileConfig& tiles,
                                      const KernelOptions& opts) {
    const int n = saved.k.rows;
    const int hd = saved.k.cols;
    const int n_c = saved.q_c.rows;
    if (d_o.rows != n || d_o.cols != hd) throw ShapeError("sparse_attention_backward: d_o must be [n x head_dim]");
    if (static_cast<int>(saved.q_idx.size()) != n_c) throw ShapeError("sparse_attention_backward: saved state mismatch");

    SparseGrads g;
    g.d_q_full = SeqMatrix(n, hd);
    g.d_k = SeqMatrix(n, hd);
    g.d_v = SeqMatrix(n, hd);
    if (n_c == 0) return g;

    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(hd));

    // Gather upstream rows and delta_i = d_o_i . o_c_i once.
    SeqMatrix d_o_c(n_c, hd);
    std::vector<float> delta(n_c);
    for (int i = 0; i < n_c; ++i) {
        const float* src = d_o.row(saved.q_idx[i]);
        float* dst = d_o_c.row(i);
        for (int c = 0; c < hd; ++c) dst[c] = src[c];
        delta[i] = vecops::dot(dst, saved.o_c.row(i), hd);
    }

    const int num_q_blocks = ceil_div(n_c, tiles.b_q);
    const bool use_partials = opts.threads > 1;
    std::vector<SeqMatrix> dk_part, dv_part;
    if (use_partials) {
        dk_part.assign(num_q_blocks, SeqMatrix(n, hd));
        dv_part.assign(num_q_blocks, SeqMatrix(n, hd));
    }

    // Probabilities are recomputed per tile from the saved lse; the full
    // attention matrix is never materialized. d_q rows are block-private;
    // d_k/d_v merge across query blocks in ascending order.
    auto process_block = [&](int qb, SeqMatrix& d_k_acc, SeqMatrix& d_v_acc) {
        const int r0 = qb * tiles.b_q;
        const int r1 = std::min(n_c, r0 + tiles.b_q);
        int max_pos = 0;
        for (int i = r0; i < r1; ++i) max_pos = std::max(max_pos, saved.q_idx[i]);
        const int k_blocks = ceil_div(max_pos + 1, tiles.b_k);

        for (int kb = 0; kb < k_blocks; ++kb) {
            const int c0 = kb * tiles.b_k;
            const int c1 = std::min(n, c0 + tiles.b_k);
            for (int i = r0; i < r1; ++i) {
                const int qpos = saved.q_idx[i];
                if (saved.lse_c[i] == kNegInf) continue;
                const float* qr = saved.q_c.row(i);
                const float* dor = d_o_c.row(i);
                float* dqr = g.d_q_full.row(qpos);
                for (int j = c0; j < c1 && j <= qpos; ++j) {
                    const float s = vecops::dot(qr, saved.k.row(j), hd) * inv_sqrt_d;
                    const float p = std::exp(s - saved.lse_c[i]);
                    const float dp = vecops::dot(dor, saved.v.row(j), hd);
                    const float ds = p * (dp - delta[i]) * inv_sqrt_d;
                    vecops::axpy(ds, saved.k.row(j), dqr, hd);
                    vecops::axpy(ds, qr, d_k_acc.row(j), hd);
                    vecops::axpy(p, dor, d_v_acc.row(j), hd);
                }
            }
        }
    };

    if (use_partials) {
        parallel_for(num_q_blocks, opts.threads,
                     [&](int qb) { process_block(qb, dk_part[qb], dv_part[qb]); });
        for (int qb = 0; qb < num_q_blocks; ++qb) {
            add_inplace(g.d_k, dk_part[qb]);
            add_inplace(g.d_v, dv_part[qb]);
        }
    } else {
        for (int qb = 0; qb < num_q_blocks; ++qb) process_block(qb, g.d_k, g.d_v);
    }
    return g;
}

int64_t expected_tile_visits(const std::vector<int>& q_idx, const TileConfig& tiles) {
    int64_t total = 0;
    const int n_c = static_cast<int>(q_idx.size());
    for (int r0 = 0; r0 < n_c; r0 += tiles.b_q) {
        const int r1 = std::min(n_c, r0 + tiles.b_q);
        int max_pos = 0;
        for (int i = r0; i < r1; ++i) max_pos = std::max(max_pos, q_idx[i]);
        total += ceil_div(max_pos + 1, tiles.b_k);
    }
    return total;
}

}  // namespace l2a::kernel
