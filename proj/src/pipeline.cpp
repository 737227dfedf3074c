#include "msmseg/pipeline.hpp"

#include <algorithm>

namespace msmseg {

SessionState SessionState::make(const ModelConfig& cfg, std::shared_ptr<ModelWeights> weights) {
    validate_config(cfg);
    SessionState s;
    s.cfg = cfg;
    s.weights = std::move(weights);
    const std::vector<int> shape{cfg.D, cfg.emb_h(), cfg.emb_w()};
    s.slice_bank = MemoryBank(cfg.n, shape);
    s.modality_bank = MemoryBank(cfg.k, shape);
    return s;
}

void SessionState::reset_memory() {
    slice_bank.reset();
    modality_bank.reset();
}

SlicePrediction SliceRun::to_prediction() const {
    SlicePrediction pred;
    for (const Var& v : per_modality_logits) pred.per_modality_logits.push_back(v.value());
    pred.fusion_weights = fusion_weights.value();
    pred.fused_logits = fused_logits.value();
    // Guidance is produced per modality; the slice-level map is their mean,
    // which keeps it invariant to the processing order.
    Tensor g = guidance[0].value();
    for (std::size_t m = 1; m < guidance.size(); ++m) {
        const Tensor& gm = guidance[m].value();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += gm[i];
    }
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] /= static_cast<double>(guidance.size());
    pred.guidance = std::move(g);
    return pred;
}

SliceRun run_slice(const MultiModalVolume& volume, int t, const PromptInput& prompt,
                   SessionState& state, const std::vector<int>& order) {
    const ModelConfig& cfg = state.cfg;
    ModelWeights& w = *state.weights;
    prompt.validate(cfg.H, cfg.W);

    std::optional<PromptPyramid> prompt_pyr;
    if (prompt.mode == PromptMode::kBox) prompt_pyr = translate_prompt(prompt, cfg);

    // S_{t,<m} is scoped to the current slice.
    state.modality_bank.reset();

    SliceRun run;
    run.per_modality_logits.resize(static_cast<std::size_t>(cfg.M));
    run.guidance.resize(static_cast<std::size_t>(cfg.M));
    run.h_feats.resize(static_cast<std::size_t>(cfg.M));
    Tensor emb_mean({cfg.C, cfg.emb_h(), cfg.emb_w()});

    for (int pos = 0; pos < cfg.M; ++pos) {
        const int m = order[static_cast<std::size_t>(pos)];
        try {
            for (const MemoryEntry& e : state.modality_bank.entries())
                if (e.slice != t)
                    throw ShapeError("modality bank holds an entry from another slice");

            FeaturePyramid pyr = encode(Var::constant(volume.slice(t, m)), w.encoder, cfg);
            Var z = msma(pyr.embedding(), state.slice_bank.snapshot(),
                         state.modality_bank.snapshot(), w.msma, cfg);
            Var p = fuse_and_guide(pyr, z, prompt_pyr, w.mcp, cfg);
            ModalityDecode dec = decode_modality(z, p, w.decoder, cfg, m);

            run.per_modality_logits[static_cast<std::size_t>(m)] = dec.logits;
            run.guidance[static_cast<std::size_t>(m)] = p;
            run.h_feats[static_cast<std::size_t>(m)] = dec.h_feat;

            const Tensor& emb = pyr.embedding().value();
            for (std::int64_t i = 0; i < emb_mean.size(); ++i)
                emb_mean[i] += emb[i] / static_cast<double>(cfg.M);

            state.modality_bank.push(
                encode_modality_memory(dec.logits.value(), emb, w.mem_modal, cfg, t, m));
        } catch (const std::exception& e) {
            throw std::runtime_error("slice " + std::to_string(t) + ", modality " +
                                     std::to_string(m) + ": " + e.what());
        }
    }

    FusionResult fr = fuse_modalities(run.per_modality_logits, run.h_feats, w.decoder, cfg);
    run.fused_logits = fr.fused_logits;
    run.fusion_weights = fr.fusion_weights;

    state.slice_bank.push(
        encode_slice_memory(run.fused_logits.value(), emb_mean, w.mem_slice, cfg, t));
    return run;
}

std::vector<int> canonical_order(int m_count) {
    std::vector<int> order(static_cast<std::size_t>(m_count));
    for (int i = 0; i < m_count; ++i) order[static_cast<std::size_t>(i)] = i;
    return order;
}

namespace {

std::vector<SlicePrediction> run_volume(const MultiModalVolume& volume,
                                        const VolumePrompts& prompts, SessionState& state,
                                        const std::vector<int>& order) {
    volume.validate();
    const ModelConfig& cfg = state.cfg;
    if (volume.M() != cfg.M || volume.H() != cfg.H || volume.W() != cfg.W)
        throw ShapeError("volume dims do not match model config");
    if (static_cast<int>(prompts.per_slice.size()) != volume.T())
        throw ShapeError("need one prompt entry per slice");
    state.reset_memory();
    std::vector<SlicePrediction> preds;
    preds.reserve(static_cast<std::size_t>(volume.T()));
    for (int t = 0; t < volume.T(); ++t) {
        SliceRun run = run_slice(volume, t, prompts.per_slice[static_cast<std::size_t>(t)], state,
                                 order);
        preds.push_back(run.to_prediction());
    }
    return preds;
}

}  // namespace

std::vector<SlicePrediction> segment_volume(const MultiModalVolume& volume,
                                            const VolumePrompts& prompts, SessionState& state) {
    return run_volume(volume, prompts, state, canonical_order(state.cfg.M));
}

std::vector<SlicePrediction> run_with_modality_order(const MultiModalVolume& volume,
                                                     const std::vector<int>& order,
                                                     const VolumePrompts& prompts,
                                                     SessionState& state) {
    const int m_count = state.cfg.M;
    if (static_cast<int>(order.size()) != m_count)
        throw PermutationError("order length must equal M");
    std::vector<bool> seen(static_cast<std::size_t>(m_count), false);
    for (int v : order) {
        if (v < 0 || v >= m_count || seen[static_cast<std::size_t>(v)])
            throw PermutationError("order is not a permutation of 0..M-1");
        seen[static_cast<std::size_t>(v)] = true;
    }
    return run_volume(volume, prompts, state, order);
}

}  // namespace msmseg
