#include "msmseg/decoder.hpp"

#include <algorithm>

#include "msmseg/errors.hpp"

namespace msmseg {

namespace {
constexpr int kTwoWayDepth = 2;
constexpr int kMinPixelChannels = 8;
}  // namespace

DecoderWeights DecoderWeights::make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                                    const std::string& prefix) {
    DecoderWeights w;
    const int d = cfg.D;
    for (int i = 0; i < kTwoWayDepth; ++i) {
        const std::string p = prefix + ".block" + std::to_string(i);
        DecoderWeights::TwoWayBlock b;
        b.self_q = nn::Mha::make(reg, rng, p + ".self_q", d, cfg.heads);
        b.ln_self = nn::LayerNorm::make(reg, p + ".ln_self", d);
        b.q_to_t = nn::Mha::make(reg, rng, p + ".q_to_t", d, cfg.heads);
        b.ln_q2t = nn::LayerNorm::make(reg, p + ".ln_q2t", d);
        b.mlp = nn::Mlp::make(reg, rng, p + ".mlp", d, 4 * d, d);
        b.ln_mlp = nn::LayerNorm::make(reg, p + ".ln_mlp", d);
        b.t_to_q = nn::Mha::make(reg, rng, p + ".t_to_q", d, cfg.heads);
        b.ln_t2q = nn::LayerNorm::make(reg, p + ".ln_t2q", d);
        w.blocks.push_back(std::move(b));
    }
    int ch = d;
    for (int s = 0; s < cfg.levels; ++s) {
        const int out = std::max(d >> (s + 1), kMinPixelChannels);
        DecoderWeights::PixStage st;
        st.conv = nn::Conv2d::make(reg, rng, prefix + ".pix" + std::to_string(s), ch, out, 3, 1, 1);
        st.norm = nn::ChannelNorm::make(reg, prefix + ".pix_norm" + std::to_string(s), out);
        w.pixel_decoder.push_back(std::move(st));
        ch = out;
    }
    w.pixel_dim = ch;
    const int tokens = cfg.num_queries + cfg.num_classes;
    for (int m = 0; m < cfg.M; ++m) {
        w.query_embeddings.push_back(
            reg.add(prefix + ".query_emb" + std::to_string(m),
                    Var::leaf(nn::init_uniform(rng, {tokens, d}, d))));
        w.class_mlp.push_back(
            nn::Mlp::make(reg, rng, prefix + ".class_mlp" + std::to_string(m), d, d, ch));
    }
    w.fusion_score = nn::Conv2d::make(reg, rng, prefix + ".fusion_score", d, 1, 1, 1, 0);
    return w;
}

ModalityDecode decode_modality(const Var& z, const Var& guidance, const DecoderWeights& w,
                               const ModelConfig& cfg, int modality) {
    const int h = cfg.emb_h(), wd = cfg.emb_w();
    check_shape(z.value(), {cfg.D, h, wd}, "decode_modality Z");
    check_shape(guidance.value(), {1, h, wd}, "decode_modality guidance");
    if (modality < 0 || modality >= cfg.M) throw ShapeError("decode_modality: bad modality index");

    Var h_feat = ops::add_broadcast_channel(z, guidance);
    Tensor pe = nn::sinusoidal_pe_2d(h, wd, cfg.D);
    Var tokens = ops::add(ops::chw_to_tokens(h_feat), Var::constant(pe));
    Var queries = w.query_embeddings[static_cast<std::size_t>(modality)];

    for (const auto& b : w.blocks) {
        queries = b.ln_self(ops::add(queries, b.self_q(queries, queries, queries)));
        queries = b.ln_q2t(ops::add(queries, b.q_to_t(queries, tokens, tokens)));
        queries = b.ln_mlp(ops::add(queries, b.mlp(queries)));
        tokens = b.ln_t2q(ops::add(tokens, b.t_to_q(tokens, queries, queries)));
    }
    Var refined = ops::tokens_to_chw(tokens, h, wd);

    Var pix = refined;
    int ph = h, pw = wd;
    for (const auto& st : w.pixel_decoder) {
        ph *= 2;
        pw *= 2;
        pix = ops::silu(st.norm(st.conv(ops::upsample_bilinear(pix, ph, pw))));
    }
    // Class tokens sit in the first num_classes rows of the query embedding.
    Var class_tokens = ops::slice_rows(queries, 0, cfg.num_classes);
    Var class_emb = w.class_mlp[static_cast<std::size_t>(modality)](class_tokens);
    Var logits = ops::mask_logits(pix, class_emb);
    ops::check_finite(logits.value(), "decode_modality logits");
    return {logits, refined, queries};
}

namespace {

FusionResult fuse_impl(const std::vector<Var>& per_modality_logits,
                       const std::vector<Var>& h_feats, const std::vector<int>& active,
                       const DecoderWeights& w, const ModelConfig& cfg) {
    const int m_count = static_cast<int>(per_modality_logits.size());
    if (m_count < 1) throw ShapeError("fuse_modalities: need at least one modality");
    if (h_feats.size() != per_modality_logits.size())
        throw ShapeError("fuse_modalities: logits/features count mismatch");
    for (const Var& v : per_modality_logits)
        check_shape(v.value(), {cfg.num_classes, cfg.H, cfg.W}, "fuse logits");
    if (active.empty()) throw EmptySubsetError("subset fusion requires a nonempty subset");
    std::vector<bool> is_active(static_cast<std::size_t>(m_count), false);
    for (int a : active) {
        if (a < 0 || a >= m_count) throw ShapeError("fusion: active index out of range");
        is_active[static_cast<std::size_t>(a)] = true;
    }

    // Score each active modality from its upsampled refined embedding.
    std::vector<Var> scores(static_cast<std::size_t>(m_count));
    for (int m : active) {
        Var up = ops::upsample_bilinear(h_feats[static_cast<std::size_t>(m)], cfg.H, cfg.W);
        scores[static_cast<std::size_t>(m)] = w.fusion_score(up);  // [1,H,W]
    }

    Var fused, weights_full;
    if (cfg.per_voxel_fusion) {
        std::vector<Var> active_scores;
        for (int m : active) active_scores.push_back(scores[static_cast<std::size_t>(m)]);
        Var wmap = ops::softmax_channel(ops::concat_chw(active_scores));  // [A,H,W]
        std::vector<Var> weight_rows(static_cast<std::size_t>(m_count));
        for (std::size_t i = 0; i < active.size(); ++i) {
            Var wm = ops::slice_channels(wmap, static_cast<int>(i), static_cast<int>(i) + 1);
            weight_rows[static_cast<std::size_t>(active[i])] = wm;
            Var contrib =
                ops::mul_broadcast_channel(per_modality_logits[static_cast<std::size_t>(active[i])], wm);
            fused = fused.defined() ? ops::add(fused, contrib) : contrib;
        }
        std::vector<Var> all_rows;
        for (int m = 0; m < m_count; ++m)
            all_rows.push_back(is_active[static_cast<std::size_t>(m)]
                                   ? weight_rows[static_cast<std::size_t>(m)]
                                   : Var::constant(Tensor::zeros({1, cfg.H, cfg.W})));
        weights_full = ops::concat_chw(all_rows);
    } else {
        // Literal Eq.-9 form: one scalar weight per modality.
        std::vector<Var> cells;
        for (int m : active)
            cells.push_back(ops::reshape(ops::mean(scores[static_cast<std::size_t>(m)]), {1, 1}));
        Var sm = ops::softmax_rows(ops::concat_cols(cells));  // [1,A]
        std::vector<Var> weight_rows(static_cast<std::size_t>(m_count));
        for (std::size_t i = 0; i < active.size(); ++i) {
            Var wm = ops::slice_cols(sm, static_cast<int>(i), static_cast<int>(i) + 1);  // [1,1]
            Var contrib = ops::scale_by_scalar(
                per_modality_logits[static_cast<std::size_t>(active[i])], wm);
            fused = fused.defined() ? ops::add(fused, contrib) : contrib;
            weight_rows[static_cast<std::size_t>(active[i])] = wm;
        }
        std::vector<Var> all_rows;
        for (int m = 0; m < m_count; ++m) {
            if (is_active[static_cast<std::size_t>(m)]) {
                Var wm = weight_rows[static_cast<std::size_t>(m)];
                all_rows.push_back(ops::scale_by_scalar(
                    Var::constant(Tensor::full({1, cfg.H, cfg.W}, 1.0)), wm));
            } else {
                all_rows.push_back(Var::constant(Tensor::zeros({1, cfg.H, cfg.W})));
            }
        }
        weights_full = ops::concat_chw(all_rows);
    }
    ops::check_finite(fused.value(), "fused logits");
    return {fused, weights_full};
}

}  // namespace

FusionResult fuse_modalities(const std::vector<Var>& per_modality_logits,
                             const std::vector<Var>& h_feats, const DecoderWeights& w,
                             const ModelConfig& cfg) {
    std::vector<int> all(per_modality_logits.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return fuse_impl(per_modality_logits, h_feats, all, w, cfg);
}

FusionResult subset_fusion(const std::vector<Var>& per_modality_logits,
                           const std::vector<Var>& h_feats, const std::vector<int>& active,
                           const DecoderWeights& w, const ModelConfig& cfg) {
    return fuse_impl(per_modality_logits, h_feats, active, w, cfg);
}

}  // namespace msmseg
