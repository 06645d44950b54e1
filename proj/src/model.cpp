// SPDX-License-Identifier: Apache-2.0
#include "l2a/model.hpp"

#include <cmath>

namespace l2a {

namespace {

SeqMatrix random_matrix(int rows, int cols, float stddev, Rng& rng) {
    SeqMatrix m(rows, cols);
    for (auto& v : m.data) v = stddev * rng.normal();
    return m;
}

AttnParams init_attn(int d, int num_heads, float rope_base, bool rope_enabled, Rng rng) {
    AttnParams p;
    const float sd = 1.0f / std::sqrt(static_cast<float>(d));
    p.w_q = random_matrix(d, d, sd, rng);
    p.w_k = random_matrix(d, d, sd, rng);
    p.w_v = random_matrix(d, d, sd, rng);
    p.w_o = random_matrix(d, d, sd, rng);
    p.num_heads = num_heads;
    p.rope.base_frequency = rope_base;
    p.rope.enabled = rope_enabled;
    p.rope.head_dim = d / num_heads;
    return p;
}

std::vector<int> iota_positions(int n) {
    std::vector<int> pos(n);
    for (int t = 0; t < n; ++t) pos[t] = t;
    return pos;
}

SeqMatrix gather_rows(const SeqMatrix& m, const std::vector<int>& idx) {
    SeqMatrix out(static_cast<int>(idx.size()), m.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
        const float* src = m.row(idx[i]);
        float* dst = out.row(static_cast<int>(i));
        for (int c = 0; c < m.cols; ++c) dst[c] = src[c];
    }
    return out;
}

}  // namespace

ToyModel init_model(const ModelConfig& cfg, Rng rng) {
    if (cfg.d % cfg.num_heads != 0) throw ShapeError("init_model: d must be divisible by num_heads");
    if ((cfg.d / cfg.num_heads) % 2 != 0) throw ShapeError("init_model: head_dim must be even for RoPE");
    ToyModel m;
    m.vocab = cfg.vocab;
    m.d = cfg.d;
    m.num_heads = cfg.num_heads;
    m.tie_embeddings = cfg.tie_embeddings;
    m.trainable = cfg.trainable;
    m.router_input = cfg.router_input;
    m.ln_eps = cfg.ln_eps;
    m.rope_base = cfg.rope_base;
    m.rope_enabled = cfg.rope_enabled;
    m.embed = random_matrix(cfg.vocab, cfg.d, 1.0f, rng);
    if (!cfg.tie_embeddings) m.unembed = random_matrix(cfg.d, cfg.vocab, 1.0f / std::sqrt((float)cfg.d), rng);
    for (int l = 0; l < cfg.num_layers; ++l) {
        L2ALayerT<float> layer;
        layer.local = init_attn(cfg.d, cfg.num_heads, cfg.rope_base, cfg.rope_enabled, rng.split2(l, 1));
        layer.global_attn = init_attn(cfg.d, cfg.num_heads, cfg.rope_base, cfg.rope_enabled, rng.split2(l, 2));
        layer.router_w = SeqMatrix(1, cfg.d);  // zeros: every token routes at init
        layer.ln_local = LayerNormParams::identity(cfg.d);
        layer.ln_global = LayerNormParams::identity(cfg.d);
        layer.window = cfg.window;
        layer.threshold = cfg.threshold;
        m.layers.push_back(std::move(layer));
        FfnT<float> ffn;
        Rng frng = rng.split2(l, 3);
        ffn.w1 = random_matrix(cfg.d, cfg.ffn_hidden, 1.0f / std::sqrt((float)cfg.d), frng);
        ffn.w2 = random_matrix(cfg.ffn_hidden, cfg.d, 1.0f / std::sqrt((float)cfg.ffn_hidden), frng);
        m.ffn.push_back(std::move(ffn));
    }
    return m;
}

ModelFwdResult model_forward(const std::vector<int>& tokens, const ToyModel& model, Rng& rng,
                             const ForwardOpts& opts) {
    const int n = static_cast<int>(tokens.size());
    const int d = model.d, hd = model.head_dim();
    for (int t : tokens)
        if (t < 0 || t >= model.vocab) throw ShapeError("model_forward: token out of range");

    ModelFwdResult res;
    res.traces.resize(model.num_layers());
    std::shared_ptr<ModelSaved> saved;
    if (opts.need_saved) {
        saved = std::make_shared<ModelSaved>();
        saved->tokens = tokens;
        saved->layers.resize(model.num_layers());
        saved->opts = opts;
    }

    // One forced-global draw per step by default; per-layer behind config.
    bool shared_force = false;
    if (opts.mode == Mode::kTrain && !opts.per_layer_force) {
        shared_force = sample_forced_global(rng, opts.force_p);
    }

    SeqMatrix x(n, d);
    for (int t = 0; t < n; ++t) {
        const float* e = model.embed.row(tokens[t]);
        float* xr = x.row(t);
        for (int c = 0; c < d; ++c) xr[c] = e[c];
    }

    const std::vector<int> positions = iota_positions(n);

    for (int li = 0; li < model.num_layers(); ++li) {
        const auto& layer = model.layers[li];
        LayerSaved* ls = saved ? &saved->layers[li] : nullptr;
        LayerTraceEntry& trace = res.traces[li];
        if (ls) ls->x = x;

        // Local sub-block: s = x + LN(SWA(x))
        MhaSaved local_saved;
        const SeqMatrix raw_l = mha_dense_forward(x, layer.local, CausalMaskSpec::windowed(layer.window),
                                                  ls ? &local_saved : nullptr);
        LayerNormSaved lnl;
        const SeqMatrix ln_out = layer_norm_fwd(raw_l, layer.ln_local, model.ln_eps, ls ? &lnl : nullptr);
        SeqMatrix s = x + ln_out;

        if (layer.pruned) {
            // Global module removed: out == s, sparsity 1, router not consulted.
            trace.routing.scores.assign(n, 0.0f);
            trace.routing.decisions.assign(n, 0);
            trace.routing.threshold = opts.threshold_override.value_or(layer.threshold);
            trace.sparsity = 1.0f;
            if (ls) {
                ls->local_saved = std::move(local_saved);
                ls->ln_local_saved = std::move(lnl);
                ls->s = s;
                ls->routing = trace.routing;
                ls->a = SeqMatrix(n, d);
            }
            SeqMatrix out = std::move(s);
            const auto& ffn = model.ffn[li];
            SeqMatrix h = matmul(out, ffn.w1);
            SeqMatrix g(h.rows, h.cols);
            for (size_t i = 0; i < h.data.size(); ++i) g.data[i] = gelu(h.data[i]);
            SeqMatrix y = out + matmul(g, ffn.w2);
            if (ls) {
                ls->ffn_in = std::move(out);
                ls->ffn_h = std::move(h);
            }
            x = std::move(y);
            continue;
        }

        SeqMatrix router_in = (model.router_input == RouterInput::kPostLn) ? s : (x + raw_l);
        RouterParams rp;
        rp.w = layer.router_w;
        RoutingState routing = route(router_in, rp, opts.threshold_override.value_or(layer.threshold));
        if (opts.decisions_override) routing.decisions = *opts.decisions_override;
        if (opts.mode == Mode::kTrain) {
            routing.forced_global = opts.per_layer_force
                                        ? sample_forced_global(rng, opts.force_p)
                                        : shared_force;
        }
        EffectiveMasks masks = effective_decisions(routing);
        if (opts.relaxed) masks.compute_mask.assign(n, 1);

        std::vector<int> q_idx;
        for (int t = 0; t < n; ++t)
            if (masks.compute_mask[t]) q_idx.push_back(t);

        SeqMatrix a(n, d);  // exactly zero on non-computed rows
        kernel::KernelStats kstats;
        std::vector<kernel::SparseSaved> g_heads;
        SeqMatrix concat_c;
        LayerNormSaved lng;
        const bool global_computed = !q_idx.empty();
        if (global_computed) {
            const auto& gp = *layer.global_attn;
            const int n_c = static_cast<int>(q_idx.size());
            const SeqMatrix s_act = gather_rows(s, q_idx);
            const SeqMatrix q_act = matmul(s_act, gp.w_q);
            const SeqMatrix k_f = matmul(s, gp.w_k);
            const SeqMatrix v_f = matmul(s, gp.w_v);
            RopeConfig rope = gp.rope;
            rope.head_dim = hd;
            concat_c = SeqMatrix(n_c, d);
            for (int h = 0; h < model.num_heads; ++h) {
                kernel::CompactedQueries cq;
                cq.q_c = apply_rope(slice_cols(q_act, h * hd, hd), q_idx, rope);
                cq.q_idx = q_idx;
                cq.n = n;
                SeqMatrix k_h = apply_rope(slice_cols(k_f, h * hd, hd), positions, rope);
                SeqMatrix v_h = slice_cols(v_f, h * hd, hd);
                auto fwd = kernel::sparse_attention_forward(cq, k_h, v_h, opts.tiles,
                                                            kernel::KernelOptions{false, opts.threads});
                kstats += fwd.stats;
                paste_cols(concat_c, fwd.o_c, h * hd);
                if (ls)
                    g_heads.push_back(kernel::SparseSaved{std::move(cq.q_c), std::move(k_h), std::move(v_h),
                                                          std::move(fwd.o_c), std::move(fwd.lse_c), q_idx});
            }
            const SeqMatrix raw_c = matmul(concat_c, gp.w_o);
            const SeqMatrix a_c = layer_norm_fwd(raw_c, layer.ln_global, model.ln_eps, ls ? &lng : nullptr);
            for (int i = 0; i < n_c; ++i) {
                const float* src = a_c.row(i);
                float* dst = a.row(q_idx[i]);
                for (int c = 0; c < d; ++c) dst[c] = src[c];
            }
        }

        // out_t = s_t + a_t * d_t (relaxed checks use the continuous score)
        SeqMatrix out = s;
        for (int t = 0; t < n; ++t) {
            const float scale = opts.relaxed ? routing.scores[t] : static_cast<float>(masks.output_mask[t]);
            if (scale == 0.0f) continue;
            const float* ar = a.row(t);
            float* orow = out.row(t);
            for (int c = 0; c < d; ++c) orow[c] += scale * ar[c];
        }

        int active = 0;
        for (int t = 0; t < n; ++t) active += routing.decisions[t];
        trace.routing = routing;
        trace.sparsity = 1.0f - static_cast<float>(active) / static_cast<float>(n);
        trace.kstats = kstats;

        if (ls) {
            ls->local_saved = std::move(local_saved);
            ls->ln_local_saved = std::move(lnl);
            ls->router_in = std::move(router_in);
            ls->s = std::move(s);
            ls->routing = routing;
            ls->masks = masks;
            ls->global_computed = global_computed;
            ls->q_idx = q_idx;
            ls->g_heads = std::move(g_heads);
            ls->concat_c = std::move(concat_c);
            ls->ln_global_saved = std::move(lng);
            ls->a = a;
            ls->kstats = kstats;
        }

        const auto& ffn = model.ffn[li];
        SeqMatrix h = matmul(out, ffn.w1);
        SeqMatrix g(h.rows, h.cols);
        for (size_t i = 0; i < h.data.size(); ++i) g.data[i] = gelu(h.data[i]);
        SeqMatrix y = out + matmul(g, ffn.w2);
        if (ls) {
            ls->ffn_in = std::move(out);
            ls->ffn_h = std::move(h);
        }
        x = std::move(y);
    }

    if (saved) saved->final_x = x;
    res.logits = model.tie_embeddings ? matmul(x, transpose(model.embed)) : matmul(x, model.unembed);
    res.saved = saved;
    return res;
}

ModelGrads make_zero_grads(const ToyModel& model) {
    ModelGrads g;
    g.d_embed = SeqMatrix(model.embed.rows, model.embed.cols);
    g.d_unembed = SeqMatrix(model.unembed.rows, model.unembed.cols);
    g.layers.resize(model.num_layers());
    for (int li = 0; li < model.num_layers(); ++li) {
        const auto& layer = model.layers[li];
        LayerGrads& lg = g.layers[li];
        const int d = model.d;
        auto zero_attn = [&] {
            return AttnParamGrads{SeqMatrix(d, d), SeqMatrix(d, d), SeqMatrix(d, d), SeqMatrix(d, d)};
        };
        lg.local = zero_attn();
        lg.has_global = layer.global_attn.has_value();
        if (lg.has_global) lg.global = zero_attn();
        lg.d_router_w = SeqMatrix(1, d);
        lg.d_ln_local_gamma.assign(d, 0.0f);
        lg.d_ln_local_beta.assign(d, 0.0f);
        lg.d_ln_global_gamma.assign(d, 0.0f);
        lg.d_ln_global_beta.assign(d, 0.0f);
        lg.d_ffn_w1 = SeqMatrix(model.ffn[li].w1.rows, model.ffn[li].w1.cols);
        lg.d_ffn_w2 = SeqMatrix(model.ffn[li].w2.rows, model.ffn[li].w2.cols);
    }
    return g;
}

ModelGrads model_backward(const ToyModel& model, const ModelSaved& saved, const SeqMatrix& d_logits,
                          float reg_dhat_coeff) {
    const int n = static_cast<int>(saved.tokens.size());
    const int d = model.d, hd = model.head_dim();
    const bool relaxed = saved.opts.relaxed;
    const std::vector<int> positions = iota_positions(n);

    ModelGrads grads = make_zero_grads(model);

    SeqMatrix d_x = model.tie_embeddings ? matmul(d_logits, model.embed)
                                         : matmul(d_logits, transpose(model.unembed));
    if (model.trainable == TrainableSet::kAll) {
        if (model.tie_embeddings) {
            add_inplace(grads.d_embed, matmul(transpose(d_logits), saved.final_x));
        } else {
            add_inplace(grads.d_unembed, matmul(transpose(saved.final_x), d_logits));
        }
    }

    for (int li = model.num_layers() - 1; li >= 0; --li) {
        const auto& layer = model.layers[li];
        const LayerSaved& ls = saved.layers[li];
        LayerGrads& lg = grads.layers[li];

        // FFN: y = o + gelu(o w1) w2
        const auto& ffn = model.ffn[li];
        const SeqMatrix& d_y = d_x;
        SeqMatrix d_g = matmul(d_y, transpose(ffn.w2));
        SeqMatrix d_h(d_g.rows, d_g.cols);
        for (size_t i = 0; i < d_h.data.size(); ++i)
            d_h.data[i] = d_g.data[i] * gelu_grad(ls.ffn_h.data[i]);
        if (model.trainable == TrainableSet::kAll) {
            SeqMatrix gmat(ls.ffn_h.rows, ls.ffn_h.cols);
            for (size_t i = 0; i < gmat.data.size(); ++i) gmat.data[i] = gelu(ls.ffn_h.data[i]);
            add_inplace(lg.d_ffn_w2, matmul(transpose(gmat), d_y));
            add_inplace(lg.d_ffn_w1, matmul(transpose(ls.ffn_in), d_h));
        }
        SeqMatrix d_o = d_y + matmul(d_h, transpose(ffn.w1));
        lg.d_block_out = d_o;

        if (layer.pruned) {
            // out == s == x + LN(SWA(x))
            SeqMatrix d_next = d_o;
            LayerNormGrads lnlg = layer_norm_bwd(ls.ln_local_saved, layer.ln_local, d_o);
            for (int j = 0; j < d; ++j) {
                lg.d_ln_local_gamma[j] += lnlg.d_gamma[j];
                lg.d_ln_local_beta[j] += lnlg.d_beta[j];
            }
            MhaGrads mg = mha_dense_backward(layer.local, ls.local_saved, lnlg.d_x);
            add_inplace(lg.local.d_wq, mg.d_wq);
            add_inplace(lg.local.d_wk, mg.d_wk);
            add_inplace(lg.local.d_wv, mg.d_wv);
            add_inplace(lg.local.d_wo, mg.d_wo);
            add_inplace(d_next, mg.d_x);
            d_x = std::move(d_next);
            continue;
        }

        // STE: dL/d dhat_t = (dL/d out_t) . a_t + regularizer coefficient * dhat_t
        lg.d_dhat.assign(n, 0.0f);
        for (int t = 0; t < n; ++t) {
            float dot = 0;
            const float* dor = d_o.row(t);
            const float* ar = ls.a.row(t);
            for (int c = 0; c < d; ++c) dot += dor[c] * ar[c];
            lg.d_dhat[t] = dot + reg_dhat_coeff * ls.routing.scores[t];
        }
        RouterParams rp;
        rp.w = layer.router_w;
        RouterGrads rg = router_backward_ste(ls.router_in, rp, ls.routing, lg.d_dhat);
        add_inplace(lg.d_router_w, rg.d_w);

        SeqMatrix d_s = d_o;  // residual out = s + ...
        if (model.router_input == RouterInput::kPostLn) add_inplace(d_s, rg.d_s);

        if (ls.global_computed) {
            const auto& gp = *layer.global_attn;
            const int n_c = static_cast<int>(ls.q_idx.size());
            // d_a rows: output mask (or continuous scores in relaxed mode)
            SeqMatrix d_a_c(n_c, d);
            for (int i = 0; i < n_c; ++i) {
                const int t = ls.q_idx[i];
                const float scale = relaxed ? ls.routing.scores[t]
                                            : static_cast<float>(ls.masks.output_mask[t]);
                if (scale == 0.0f) continue;
                const float* src = d_o.row(t);
                float* dst = d_a_c.row(i);
                for (int c = 0; c < d; ++c) dst[c] = scale * src[c];
            }
            LayerNormGrads lngg = layer_norm_bwd(ls.ln_global_saved, layer.ln_global, d_a_c);
            for (int j = 0; j < d; ++j) {
                lg.d_ln_global_gamma[j] += lngg.d_gamma[j];
                lg.d_ln_global_beta[j] += lngg.d_beta[j];
            }
            add_inplace(lg.global.d_wo, matmul(transpose(ls.concat_c), lngg.d_x));
            const SeqMatrix d_concat_c = matmul(lngg.d_x, transpose(gp.w_o));

            RopeConfig rope = gp.rope;
            rope.head_dim = hd;
            SeqMatrix d_qf(n, d), d_kf(n, d), d_vf(n, d);
            for (int h = 0; h < model.num_heads; ++h) {
                const SeqMatrix d_oc_head = slice_cols(d_concat_c, h * hd, hd);
                const SeqMatrix d_o_full = kernel::scatter_outputs(d_oc_head, ls.q_idx, n);
                auto sg = kernel::sparse_attention_backward(ls.g_heads[h], d_o_full, saved.opts.tiles,
                                                            kernel::KernelOptions{false, saved.opts.threads});
                paste_cols(d_qf, rope_backward(sg.d_q_full, positions, rope), h * hd);
                paste_cols(d_kf, rope_backward(sg.d_k, positions, rope), h * hd);
                paste_cols(d_vf, sg.d_v, h * hd);
            }
            add_inplace(lg.global.d_wq, matmul(transpose(ls.s), d_qf));
            add_inplace(lg.global.d_wk, matmul(transpose(ls.s), d_kf));
            add_inplace(lg.global.d_wv, matmul(transpose(ls.s), d_vf));
            add_inplace(d_s, matmul(d_qf, transpose(gp.w_q)));
            add_inplace(d_s, matmul(d_kf, transpose(gp.w_k)));
            add_inplace(d_s, matmul(d_vf, transpose(gp.w_v)));
        }

        // Local sub-block: s = x + LN(raw_l)
        SeqMatrix d_next = d_s;
        LayerNormGrads lnlg = layer_norm_bwd(ls.ln_local_saved, layer.ln_local, d_s);
        for (int j = 0; j < d; ++j) {
            lg.d_ln_local_gamma[j] += lnlg.d_gamma[j];
            lg.d_ln_local_beta[j] += lnlg.d_beta[j];
        }
        SeqMatrix d_raw_l = lnlg.d_x;
        if (model.router_input == RouterInput::kPreLn) {
            // router saw x + raw_l directly
            add_inplace(d_next, rg.d_s);
            add_inplace(d_raw_l, rg.d_s);
        }
        MhaGrads mg = mha_dense_backward(layer.local, ls.local_saved, d_raw_l);
        add_inplace(lg.local.d_wq, mg.d_wq);
        add_inplace(lg.local.d_wk, mg.d_wk);
        add_inplace(lg.local.d_wv, mg.d_wv);
        add_inplace(lg.local.d_wo, mg.d_wo);
        add_inplace(d_next, mg.d_x);
        d_x = std::move(d_next);
    }

    if (model.trainable == TrainableSet::kAll) {
        for (int t = 0; t < n; ++t) {
            const float* src = d_x.row(t);
            float* dst = grads.d_embed.row(saved.tokens[t]);
            for (int c = 0; c < d; ++c) dst[c] += src[c];
        }
    }
    return grads;
}

void accumulate_grads(ModelGrads& into, const ModelGrads& from) {
    add_inplace(into.d_embed, from.d_embed);
    if (into.d_unembed.rows > 0) add_inplace(into.d_unembed, from.d_unembed);
    for (size_t li = 0; li < into.layers.size(); ++li) {
        LayerGrads& a = into.layers[li];
        const LayerGrads& b = from.layers[li];
        add_inplace(a.local.d_wq, b.local.d_wq);
        add_inplace(a.local.d_wk, b.local.d_wk);
        add_inplace(a.local.d_wv, b.local.d_wv);
        add_inplace(a.local.d_wo, b.local.d_wo);
        if (a.has_global && b.has_global) {
            add_inplace(a.global.d_wq, b.global.d_wq);
            add_inplace(a.global.d_wk, b.global.d_wk);
            add_inplace(a.global.d_wv, b.global.d_wv);
            add_inplace(a.global.d_wo, b.global.d_wo);
        }
        add_inplace(a.d_router_w, b.d_router_w);
        for (size_t j = 0; j < a.d_ln_local_gamma.size(); ++j) {
            a.d_ln_local_gamma[j] += b.d_ln_local_gamma[j];
            a.d_ln_local_beta[j] += b.d_ln_local_beta[j];
            a.d_ln_global_gamma[j] += b.d_ln_global_gamma[j];
            a.d_ln_global_beta[j] += b.d_ln_global_beta[j];
        }
        add_inplace(a.d_ffn_w1, b.d_ffn_w1);
        add_inplace(a.d_ffn_w2, b.d_ffn_w2);
    }
}

void scale_grads(ModelGrads& g, float factor) {
    auto sc = [factor](SeqMatrix& m) {
        for (auto& v : m.data) v *= factor;
    };
    sc(g.d_embed);
    sc(g.d_unembed);
    for (auto& lg : g.layers) {
        sc(lg.local.d_wq);
        sc(lg.local.d_wk);
        sc(lg.local.d_wv);
        sc(lg.local.d_wo);
        if (lg.has_global) {
            sc(lg.global.d_wq);
            sc(lg.global.d_wk);
            sc(lg.global.d_wv);
            sc(lg.global.d_wo);
        }
        sc(lg.d_router_w);
        for (auto& v : lg.d_ln_local_gamma) v *= factor;
        for (auto& v : lg.d_ln_local_beta) v *= factor;
        for (auto& v : lg.d_ln_global_gamma) v *= factor;
        for (auto& v : lg.d_ln_global_beta) v *= factor;
        sc(lg.d_ffn_w1);
        sc(lg.d_ffn_w2);
    }
}

std::vector<ParamView> trainable_params(ToyModel& model, const ModelGrads& grads) {
    std::vector<ParamView> views;
    auto push = [&views](const std::string& name, SeqMatrix& p, const SeqMatrix& g) {
        views.push_back(ParamView{name, p.data.data(), g.data.data(), p.data.size()});
    };
    auto push_vec = [&views](const std::string& name, std::vector<float>& p, const std::vector<float>& g) {
        views.push_back(ParamView{name, p.data(), g.data(), p.size()});
    };
    const bool all = model.trainable == TrainableSet::kAll;
    if (all) {
        push("embed", model.embed, grads.d_embed);
        if (!model.tie_embeddings) push("unembed", model.unembed, grads.d_unembed);
    }
    for (int li = 0; li < model.num_layers(); ++li) {
        auto& layer = model.layers[li];
        const auto& lg = grads.layers[li];
        const std::string pre = "layers." + std::to_string(li) + ".";
        push(pre + "local.w_q", layer.local.w_q, lg.local.d_wq);
        push(pre + "local.w_k", layer.local.w_k, lg.local.d_wk);
        push(pre + "local.w_v", layer.local.w_v, lg.local.d_wv);
        push(pre + "local.w_o", layer.local.w_o, lg.local.d_wo);
        if (layer.global_attn && lg.has_global) {
            push(pre + "global.w_q", layer.global_attn->w_q, lg.global.d_wq);
            push(pre + "global.w_k", layer.global_attn->w_k, lg.global.d_wk);
            push(pre + "global.w_v", layer.global_attn->w_v, lg.global.d_wv);
            push(pre + "global.w_o", layer.global_attn->w_o, lg.global.d_wo);
            push(pre + "router_w", layer.router_w, lg.d_router_w);
        }
        push_vec(pre + "ln_local.gamma", layer.ln_local.gamma, lg.d_ln_local_gamma);
        push_vec(pre + "ln_local.beta", layer.ln_local.beta, lg.d_ln_local_beta);
        push_vec(pre + "ln_global.gamma", layer.ln_global.gamma, lg.d_ln_global_gamma);
        push_vec(pre + "ln_global.beta", layer.ln_global.beta, lg.d_ln_global_beta);
        if (all) {
            push(pre + "ffn.w1", model.ffn[li].w1, lg.d_ffn_w1);
            push(pre + "ffn.w2", model.ffn[li].w2, lg.d_ffn_w2);
        }
    }
    return views;
}

}  // namespace l2a
