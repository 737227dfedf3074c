#pragma once

#include "msmseg/decoder.hpp"
#include "msmseg/encoder.hpp"
#include "msmseg/mcp.hpp"
#include "msmseg/memory.hpp"
#include "msmseg/msma.hpp"

namespace msmseg {

/// Every weight bundle of the framework in one place. Init order (and thus
/// the RNG stream) is fixed: encoder, msma, mcp, decoder, memory encoders.
struct ModelWeights {
    nn::ParamRegistry registry;
    EncoderWeights encoder;
    MsmaWeights msma;
    McpWeights mcp;
    DecoderWeights decoder;
    MemoryEncoderWeights mem_modal;
    MemoryEncoderWeights mem_slice;

    static ModelWeights init(const ModelConfig& cfg);

    /// Parameters the optimizer updates (memory encoders are frozen).
    std::vector<std::pair<std::string, Var>> trainable() const;
    /// All parameters, for checkpoints.
    const std::vector<std::pair<std::string, Var>>& all() const { return registry.params; }

    void zero_grads() const;
};

}  // namespace msmseg
