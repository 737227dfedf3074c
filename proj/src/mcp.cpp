#include "msmseg/mcp.hpp"

#include <algorithm>

namespace msmseg {

McpWeights McpWeights::make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                            const std::string& prefix) {
    McpWeights w;
    const int l = cfg.levels;
    for (int i = 0; i < l; ++i) {
        const int ci = cfg.level_channels(i);
        // Level l-1 receives Z (D channels) in place of a pyramid level.
        const int feat_ch = (i == l - 1) ? cfg.D : ci;
        const int in_ch = (i == 0 ? 0 : cfg.level_channels(i - 1)) + feat_ch + 1;
        w.proj.push_back(
            nn::Conv2d::make(reg, rng, prefix + ".proj" + std::to_string(i), in_ch, ci, 1, 1, 0));
        w.proj_norm.push_back(
            nn::ChannelNorm::make(reg, prefix + ".proj_norm" + std::to_string(i), ci));
        if (i > 0) {
            const int cp = cfg.level_channels(i - 1);
            w.down.push_back(nn::Conv2d::make(reg, rng, prefix + ".down" + std::to_string(i), cp,
                                              cp, 3, 2, 1));
            w.down_norm.push_back(
                nn::ChannelNorm::make(reg, prefix + ".down_norm" + std::to_string(i), cp));
        }
    }
    const int c = cfg.C;
    const int c2 = std::max(c / 2, 1), c4 = std::max(c / 4, 1);
    w.ds_a = nn::Conv2d::make(reg, rng, prefix + ".ds_a", c, c2, 3, 1, 1);
    w.ds_a_norm = nn::ChannelNorm::make(reg, prefix + ".ds_a_norm", c2);
    w.ds_b = nn::Conv2d::make(reg, rng, prefix + ".ds_b", c2, c4, 3, 1, 1);
    w.ds_b_norm = nn::ChannelNorm::make(reg, prefix + ".ds_b_norm", c4);
    w.ds_c = nn::Conv2d::make(reg, rng, prefix + ".ds_c", c4, c4, 1, 1, 0);
    w.head = nn::Conv2d::make(reg, rng, prefix + ".head", c4, 1, 1, 1, 0);
    return w;
}

PromptPyramid translate_prompt(const PromptInput& prompt, const ModelConfig& cfg) {
    if (prompt.mode != PromptMode::kBox)
        throw PromptModeError("translate_prompt requires a box prompt");
    prompt.validate(cfg.H, cfg.W);
    const Box& b = *prompt.box;
    Tensor mask({1, cfg.H, cfg.W});
    for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x) mask.at(0, y, x) = 1.0;
    PromptPyramid pyr;
    for (int i = 0; i < cfg.levels; ++i) {
        Tensor g = ops::bilinear_resize(mask, cfg.level_h(i), cfg.level_w(i));
        for (std::int64_t j = 0; j < g.size(); ++j) g[j] = std::clamp(g[j], 0.0, 1.0);
        pyr.maps.push_back(std::move(g));
    }
    return pyr;
}

Var fuse_and_guide(const FeaturePyramid& pyramid, const Var& z,
                   const std::optional<PromptPyramid>& prompt, const McpWeights& w,
                   const ModelConfig& cfg) {
    const int l = cfg.levels;
    if (static_cast<int>(pyramid.levels.size()) != l)
        throw ShapeError("fuse_and_guide: pyramid must have l levels");
    check_shape(z.value(), {cfg.D, cfg.emb_h(), cfg.emb_w()}, "fuse_and_guide Z");
    if (prompt && static_cast<int>(prompt->maps.size()) != l)
        throw ShapeError("fuse_and_guide: prompt pyramid must have l maps");

    auto g_channel = [&](int i) {
        if (prompt) {
            check_shape(prompt->maps[i], {1, cfg.level_h(i), cfg.level_w(i)}, "prompt map");
            return Var::constant(prompt->maps[i]);
        }
        return Var::constant(Tensor::zeros({1, cfg.level_h(i), cfg.level_w(i)}));
    };

    Var fused;
    for (int i = 0; i < l; ++i) {
        const Var& feat = (i == l - 1) ? z : pyramid.levels[static_cast<std::size_t>(i)];
        std::vector<Var> parts;
        if (i > 0) {
            Var d = ops::silu(w.down_norm[static_cast<std::size_t>(i - 1)](
                w.down[static_cast<std::size_t>(i - 1)](fused)));
            parts.push_back(d);
        }
        parts.push_back(feat);
        parts.push_back(g_channel(i));
        fused = ops::silu(w.proj_norm[static_cast<std::size_t>(i)](
            w.proj[static_cast<std::size_t>(i)](ops::concat_chw(parts))));
    }
    Var x = ops::silu(w.ds_a_norm(w.ds_a(fused)));
    x = ops::silu(w.ds_b_norm(w.ds_b(x)));
    x = w.ds_c(x);
    Var p = ops::sigmoid(w.head(x));
    ops::check_finite(p.value(), "guidance map");
    return p;
}

}  // namespace msmseg
