// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "l2a/mat.hpp"

// Compacted-query tiled attention: gather active queries, run online-softmax
// tiles with index-remapped causal masking and early tile termination,
// scatter outputs back. The backward pass recomputes tile probabilities from
// the saved log-sum-exp and touches only active queries.
namespace l2a::kernel {

struct CompactedQueries {
    SeqMatrix q_c;             // n_c x head_dim
    std::vector<int> q_idx;    // original positions, strictly increasing
    int n = 0;                 // original sequence length
};

struct TileConfig {
    int b_q = 8;
    int b_k = 8;
};

struct KernelStats {
    int64_t key_tile_visits = 0;
    int64_t macs = 0;  // in-bounds tile entries x 2*head_dim (QK^T + PV)

    KernelStats& operator+=(const KernelStats& o) {
        key_tile_visits += o.key_tile_visits;
        macs += o.macs;
        return *this;
    }
};

struct KernelOptions {
    bool visit_all_tiles = false;  // disables early termination (paired-run tests)
    int threads = 1;
};

// Verification hook: when set, one mask comparison inside the forward tile
// loop is flipped, so the oracle-equivalence check must catch it.
extern bool g_fault_flip_mask_bit;

CompactedQueries compact_queries(const SeqMatrix& q, const std::vector<uint8_t>& decisions);

struct SparseFwdResult {
    SeqMatrix o_c;              // n_c x head_dim
    std::vector<float> lse_c;   // n_c
    KernelStats stats;
};

SparseFwdResult sparse_attention_forward(const CompactedQueries& cq, const SeqMatrix& k, const SeqMatrix& v,
                                         const TileConfig& tiles, const KernelOptions& opts = {});

// Places o_c rows at q_idx; every other row is exactly zero.
SeqMatrix scatter_outputs(const SeqMatrix& o_c, const std::vector<int>& q_idx, int n);

struct SparseSaved {
    SeqMatrix q_c, k, v, o_c;
    std::vector<float> lse_c;
    std::vector<int> q_idx;
};

struct SparseGrads {
    SeqMatrix d_q_full;  // n x head_dim, nonzero only at q_idx rows
    SeqMatrix d_k, d_v;  // n x head_dim
};

// d_o is full-length [n x head_dim]; rows outside q_idx are ignored.
SparseGrads sparse_attention_backward(const SparseSaved& saved, const SeqMatrix& d_o, const TileConfig& tiles,
                                      const KernelOptions& opts = {});

// Closed-form tile-visit count: sum over query blocks of
// ceil((max q_idx in block + 1) / b_k).
int64_t expected_tile_visits(const std::vector<int>& q_idx, const TileConfig& tiles);

}  // namespace l2a::kernel
