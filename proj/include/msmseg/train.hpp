#pragma once

#include <functional>

#include "msmseg/losses.hpp"
#include "msmseg/optimizer.hpp"
#include "msmseg/pipeline.hpp"

namespace msmseg {

struct TrainCase {
    MultiModalVolume volume;
    LabelVolume labels;
    VolumePrompts boxes;  // per-slice boxes (entries may be automatic)
    std::string name;
};

struct TrainOptions {
    AdamW::Options adam;      // paper defaults: lr 1e-4, betas (0.9, 0.999), wd 0.01
    double lr_decay = 0.98;   // exponential decay per epoch
    int epochs = 1;
    int max_steps = -1;       // optimizer-step cap; <=0 means epochs * #cases
    enum class Prompt { kAutomatic, kBox, kAlternate } prompt = Prompt::kAlternate;
    std::function<void(int epoch)> on_epoch_end;  // checkpoint hook
};

struct TrainStepLog {
    int step = 0;
    int epoch = 0;
    double lr = 0.0;
    double l_prompt = 0.0;
    double l_modal = 0.0;
    double l_fusion = 0.0;
    double total = 0.0;
};

struct TrainResult {
    std::vector<TrainStepLog> curve;
};

/// Loss of one slice at the Var level (shared by train and the loss tests).
struct SliceLoss {
    Var prompt;
    std::vector<Var> modal;
    Var fusion;
    Var total;
};

SliceLoss slice_loss(const SliceRun& run, const LabelVolume& labels, int t,
                     const ModelConfig& cfg);

/// Minimal gradient-descent loop: one optimizer step per case visit
/// (round-robin), loss averaged over the case's slices, gradients stopped at
/// memory-bank boundaries. Throws DivergenceError on non-finite loss.
TrainResult train(const std::vector<TrainCase>& cases, SessionState& state,
                  const TrainOptions& options);

}  // namespace msmseg
