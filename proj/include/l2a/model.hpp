// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "l2a/attn_ref.hpp"
#include "l2a/kernel.hpp"
#include "l2a/mat.hpp"
#include "l2a/numcore.hpp"
#include "l2a/rng.hpp"
#include "l2a/router.hpp"

// One conditional-attention layer (local attention, router, conditionally
// invoked global attention, residual write) stacked into a toy decoder with
// embeddings, frozen FFN blocks and a language-model head.
namespace l2a {

enum class TrainableSet { kMixing, kAll };  // attention+router+layernorm vs everything
enum class RouterInput { kPostLn, kPreLn };

template <typename T>
struct FfnT {
    Mat<T> w1, w2;  // d x hidden, hidden x d
};

template <typename T>
struct L2ALayerT {
    AttnParamsT<T> local;
    std::optional<AttnParamsT<T>> global_attn;  // absent once pruned
    Mat<T> router_w;                            // 1 x d
    LayerNormP<T> ln_local, ln_global;
    int window = 32;
    float threshold = 0.5f;
    bool pruned = false;
};

template <typename T>
struct ModelT {
    int vocab = 0;
    int d = 0;
    int num_heads = 1;
    std::vector<L2ALayerT<T>> layers;
    std::vector<FfnT<T>> ffn;
    Mat<T> embed;    // vocab x d
    Mat<T> unembed;  // d x vocab; empty when tied (logits = x . embed^T)
    bool tie_embeddings = true;
    TrainableSet trainable = TrainableSet::kMixing;
    RouterInput router_input = RouterInput::kPostLn;
    float ln_eps = kDefaultLnEps;
    float rope_base = 10000.0f;
    bool rope_enabled = true;

    int head_dim() const { return d / num_heads; }
    int num_layers() const { return static_cast<int>(layers.size()); }
};
using ToyModel = ModelT<float>;

struct ModelConfig {
    int vocab = 32;
    int d = 64;
    int num_heads = 4;
    int num_layers = 2;
    int window = 32;
    float threshold = 0.5f;
    int ffn_hidden = 128;
    float rope_base = 10000.0f;
    bool rope_enabled = true;
    bool tie_embeddings = true;
    TrainableSet trainable = TrainableSet::kMixing;
    RouterInput router_input = RouterInput::kPostLn;
    float ln_eps = kDefaultLnEps;
};

ToyModel init_model(const ModelConfig& cfg, Rng rng);

template <typename T>
ModelT<T> upcast_model(const ToyModel& m) {
    ModelT<T> out;
    out.vocab = m.vocab;
    out.d = m.d;
    out.num_heads = m.num_heads;
    out.tie_embeddings = m.tie_embeddings;
    out.trainable = m.trainable;
    out.router_input = m.router_input;
    out.ln_eps = m.ln_eps;
    out.rope_base = m.rope_base;
    out.rope_enabled = m.rope_enabled;
    out.embed = castmat<T>(m.embed);
    out.unembed = castmat<T>(m.unembed);
    for (const auto& l : m.layers) {
        L2ALayerT<T> lt;
        auto conv_attn = [](const AttnParams& p) {
            AttnParamsT<T> q;
            q.w_q = castmat<T>(p.w_q);
            q.w_k = castmat<T>(p.w_k);
            q.w_v = castmat<T>(p.w_v);
            q.w_o = castmat<T>(p.w_o);
            q.num_heads = p.num_heads;
            q.rope = p.rope;
            return q;
        };
        lt.local = conv_attn(l.local);
        if (l.global_attn) lt.global_attn = conv_attn(*l.global_attn);
        lt.router_w = castmat<T>(l.router_w);
        lt.ln_local.gamma.assign(l.ln_local.gamma.begin(), l.ln_local.gamma.end());
        lt.ln_local.beta.assign(l.ln_local.beta.begin(), l.ln_local.beta.end());
        lt.ln_global.gamma.assign(l.ln_global.gamma.begin(), l.ln_global.gamma.end());
        lt.ln_global.beta.assign(l.ln_global.beta.begin(), l.ln_global.beta.end());
        lt.window = l.window;
        lt.threshold = l.threshold;
        lt.pruned = l.pruned;
        out.layers.push_back(std::move(lt));
    }
    for (const auto& f : m.ffn) out.ffn.push_back(FfnT<T>{castmat<T>(f.w1), castmat<T>(f.w2)});
    return out;
}

enum class Mode { kTrain, kEval };

struct ForwardOpts {
    Mode mode = Mode::kEval;
    float force_p = 0.0f;
    std::optional<float> threshold_override;
    kernel::TileConfig tiles;
    int threads = 1;
    bool need_saved = false;
    // Verification hooks:
    bool relaxed = false;  // continuous scores multiply the global output; all queries computed
    std::optional<std::vector<uint8_t>> decisions_override;
    bool per_layer_force = false;  // draw the forcing Bernoulli per layer instead of per step
};

struct LayerTraceEntry {
    RoutingState routing;
    float sparsity = 0.0f;  // 1 - mean(decisions)
    kernel::KernelStats kstats;
};

struct LayerSaved {
    SeqMatrix x;
    MhaSaved local_saved;
    LayerNormSaved ln_local_saved;
    SeqMatrix router_in;  // what the router scored (s by default)
    SeqMatrix s;
    RoutingState routing;
    EffectiveMasks masks;
    // global path (only filled when computed)
    bool global_computed = false;
    std::vector<int> q_idx;
    std::vector<kernel::SparseSaved> g_heads;
    SeqMatrix concat_c;  // n_c x d, heads concatenated
    LayerNormSaved ln_global_saved;
    SeqMatrix a;  // n x d, post-LN, exactly zero on non-computed rows
    kernel::KernelStats kstats;
    // ffn
    SeqMatrix ffn_in, ffn_h;
};

struct ModelSaved {
    std::vector<int> tokens;
    std::vector<LayerSaved> layers;
    SeqMatrix final_x;
    ForwardOpts opts;
};

struct ModelFwdResult {
    SeqMatrix logits;
    std::vector<LayerTraceEntry> traces;
    std::shared_ptr<ModelSaved> saved;
};

ModelFwdResult model_forward(const std::vector<int>& tokens, const ToyModel& model, Rng& rng,
                             const ForwardOpts& opts);

struct AttnParamGrads {
    SeqMatrix d_wq, d_wk, d_wv, d_wo;
};

struct LayerGrads {
    AttnParamGrads local;
    AttnParamGrads global;
    bool has_global = false;
    SeqMatrix d_router_w;
    std::vector<float> d_ln_local_gamma, d_ln_local_beta;
    std::vector<float> d_ln_global_gamma, d_ln_global_beta;
    SeqMatrix d_ffn_w1, d_ffn_w2;
    // Diagnostics for the gradient-identity checks:
    std::vector<float> d_dhat;  // per-token dL/d dhat (NTP STE path + regularizer term)
    SeqMatrix d_block_out;      // upstream gradient at the attention-block output
};

struct ModelGrads {
    std::vector<LayerGrads> layers;
    SeqMatrix d_embed;
    SeqMatrix d_unembed;
};

// reg_dhat_coeff is the per-token regularizer gradient 2*lambda/(n*L*batch)
// added to each token's dL/d dhat.
ModelGrads model_backward(const ToyModel& model, const ModelSaved& saved, const SeqMatrix& d_logits,
                          float reg_dhat_coeff);

ModelGrads make_zero_grads(const ToyModel& model);
void accumulate_grads(ModelGrads& into, const ModelGrads& from);
void scale_grads(ModelGrads& g, float factor);

// Flat views over the trainable tensors, in a fixed order. The optimizer
// walks these; the set honors TrainableSet, embedding tying and pruning.
struct ParamView {
    std::string name;
    float* data;
    const float* grad;
    size_t len;
};
std::vector<ParamView> trainable_params(ToyModel& model, const ModelGrads& grads);

// Checkpoint round trips are bit-exact (float bits via base64).
void save_checkpoint(const ToyModel& model, const std::string& path);
ToyModel load_checkpoint(const std::string& path);

}  // namespace l2a
