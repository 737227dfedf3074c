#include "msmseg/msma.hpp"

namespace msmseg {

MsmaWeights MsmaWeights::make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                              const std::string& prefix) {
    auto make_branch = [&](const std::string& name) {
        MsmaWeights::Branch b;
        b.phi = nn::Conv2d::make(reg, rng, name + ".phi", cfg.C / 2, cfg.D, 1, 1, 0);
        b.self_attn = nn::Mha::make(reg, rng, name + ".sa", cfg.D, cfg.heads);
        b.self_ln = nn::LayerNorm::make(reg, name + ".sa_ln", cfg.D);
        b.cross_attn = nn::Mha::make(reg, rng, name + ".ca", cfg.D, cfg.heads);
        b.cross_ln = nn::LayerNorm::make(reg, name + ".ca_ln", cfg.D);
        return b;
    };
    MsmaWeights w;
    w.slice_branch = make_branch(prefix + ".slice");
    w.modal_branch = make_branch(prefix + ".modal");
    return w;
}

std::pair<Var, Var> split_channels(const Var& f) {
    if (f.value().ndim() != 3) throw ShapeError("split_channels: expected [C,h,w]");
    const int c = f.shape()[0];
    if (c % 2 != 0) throw ShapeError("split_channels: channel count must be even");
    return {ops::slice_channels(f, 0, c / 2), ops::slice_channels(f, c / 2, c)};
}

namespace {

Var branch_query(const Var& half, const MsmaWeights::Branch& b, const Tensor& pe,
                 std::vector<Tensor>* attn_sink) {
    Var x = ops::chw_to_tokens(b.phi(half));
    x = ops::add(x, Var::constant(pe));
    return b.self_ln(ops::add(x, b.self_attn(x, x, x, attn_sink)));
}

Var branch_cross(const Var& query, const std::vector<MemoryEntry>& ctx,
                 const MsmaWeights::Branch& b, const Tensor& pe,
                 std::vector<Tensor>* attn_sink) {
    if (ctx.empty()) return query;  // empty-memory convention: identity on the query
    std::vector<Var> kv_parts;
    kv_parts.reserve(ctx.size());
    for (const MemoryEntry& e : ctx) {
        Var tok = ops::chw_to_tokens(Var::constant(e.features));
        kv_parts.push_back(ops::add(tok, Var::constant(pe)));
    }
    Var kv = kv_parts.size() == 1 ? kv_parts[0] : ops::concat_rows(kv_parts);
    return b.cross_ln(ops::add(query, b.cross_attn(query, kv, kv, attn_sink)));
}

}  // namespace

std::pair<Var, Var> msma_queries(const Var& f, const MsmaWeights& w, const ModelConfig& cfg) {
    auto [f_slice, f_modal] = split_channels(f);
    Tensor pe = nn::sinusoidal_pe_2d(f.shape()[1], f.shape()[2], cfg.D);
    return {branch_query(f_slice, w.slice_branch, pe, nullptr),
            branch_query(f_modal, w.modal_branch, pe, nullptr)};
}

Var msma(const Var& f, const std::vector<MemoryEntry>& slice_ctx,
         const std::vector<MemoryEntry>& modal_ctx, const MsmaWeights& w, const ModelConfig& cfg,
         MsmaTrace* trace) {
    if (f.value().ndim() != 3) throw ShapeError("msma: expected [C,h,w]");
    const int h = f.shape()[1], wd = f.shape()[2];
    if (h != cfg.emb_h() || wd != cfg.emb_w())
        throw ShapeError("msma: embedding spatial dims do not match config");
    for (const auto& e : slice_ctx)
        check_shape(e.features, {cfg.D, h, wd}, "msma slice context entry");
    for (const auto& e : modal_ctx)
        check_shape(e.features, {cfg.D, h, wd}, "msma modal context entry");

    std::vector<Tensor>* sink = trace ? &trace->attention : nullptr;
    auto [f_slice, f_modal] = split_channels(f);
    Tensor pe = nn::sinusoidal_pe_2d(h, wd, cfg.D);
    Var q_slice = branch_query(f_slice, w.slice_branch, pe, sink);
    Var q_modal = branch_query(f_modal, w.modal_branch, pe, sink);
    Var z_slice = branch_cross(q_slice, slice_ctx, w.slice_branch, pe, sink);
    Var z_modal = branch_cross(q_modal, modal_ctx, w.modal_branch, pe, sink);
    Var z = ops::tokens_to_chw(ops::add(z_slice, z_modal), h, wd);
    ops::check_finite(z.value(), "msma output");
    return z;
}

}  // namespace msmseg
