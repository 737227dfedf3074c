#include "msmseg/model.hpp"

namespace msmseg {

ModelWeights ModelWeights::init(const ModelConfig& cfg) {
    validate_config(cfg);
    Rng rng(cfg.seed);
    ModelWeights w;
    w.encoder = EncoderWeights::make(w.registry, rng, cfg);
    w.msma = MsmaWeights::make(w.registry, rng, cfg);
    w.mcp = McpWeights::make(w.registry, rng, cfg);
    w.decoder = DecoderWeights::make(w.registry, rng, cfg);
    w.mem_modal = MemoryEncoderWeights::make(w.registry, rng, cfg, "mem_modal");
    w.mem_slice = MemoryEncoderWeights::make(w.registry, rng, cfg, "mem_slice");
    return w;
}

std::vector<std::pair<std::string, Var>> ModelWeights::trainable() const {
    std::vector<std::pair<std::string, Var>> out;
    for (const auto& [name, var] : registry.params)
        if (var.requires_grad()) out.emplace_back(name, var);
    return out;
}

void ModelWeights::zero_grads() const {
    for (const auto& [name, var] : registry.params) {
        Var v = var;
        v.zero_grad();
    }
}

}  // namespace msmseg
