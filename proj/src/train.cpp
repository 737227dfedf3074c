#include "msmseg/train.hpp"

#include <cmath>

namespace msmseg {

SliceLoss slice_loss(const SliceRun& run, const LabelVolume& labels, int t,
                     const ModelConfig& cfg) {
    SliceLoss out;
    const int factor = 1 << cfg.levels;
    Tensor gt_low = whole_tumor_lowres(labels, t, factor);
    Tensor gt = label_slice(labels, t);

    Var prompt_acc;
    for (const Var& p : run.guidance) {
        Var l = loss_prompt(p, gt_low);
        prompt_acc = prompt_acc.defined() ? ops::add(prompt_acc, l) : l;
    }
    out.prompt = ops::scale(prompt_acc, 1.0 / static_cast<double>(run.guidance.size()));

    Var modal_acc;
    for (const Var& logits : run.per_modality_logits) {
        Var l = loss_seg(logits, gt, cfg.num_classes);
        out.modal.push_back(l);
        modal_acc = modal_acc.defined() ? ops::add(modal_acc, l) : l;
    }
    Var modal_mean = ops::scale(modal_acc, 1.0 / static_cast<double>(out.modal.size()));

    out.fusion = loss_seg(run.fused_logits, gt, cfg.num_classes);
    out.total = ops::add(ops::add(out.prompt, modal_mean), out.fusion);
    return out;
}

TrainResult train(const std::vector<TrainCase>& cases, SessionState& state,
                  const TrainOptions& options) {
    if (cases.empty()) throw SpecError("train: dataset is empty");
    const int n_cases = static_cast<int>(cases.size());
    const int total_steps = options.max_steps > 0 ? options.max_steps
                                                  : options.epochs * n_cases;
    AdamW optimizer(state.weights->trainable(), options.adam);
    TrainResult result;
    int last_epoch = 0;

    for (int step = 0; step < total_steps; ++step) {
        const int epoch = step / n_cases;
        if (epoch != last_epoch && options.on_epoch_end) options.on_epoch_end(last_epoch);
        last_epoch = epoch;
        const TrainCase& tc = cases[static_cast<std::size_t>(step % n_cases)];
        const double lr = options.adam.lr * std::pow(options.lr_decay, epoch);

        bool use_box = options.prompt == TrainOptions::Prompt::kBox ||
                       (options.prompt == TrainOptions::Prompt::kAlternate && step % 2 == 0);
        const VolumePrompts prompts =
            use_box ? tc.boxes : VolumePrompts::automatic(tc.volume.T());

        state.reset_memory();
        const int t_count = tc.volume.T();
        const double slice_w = 1.0 / static_cast<double>(t_count);
        double sum_prompt = 0.0, sum_modal = 0.0, sum_fusion = 0.0, sum_total = 0.0;
        for (int t = 0; t < t_count; ++t) {
            SliceRun run = run_slice(tc.volume, t, prompts.per_slice[static_cast<std::size_t>(t)],
                                     state, canonical_order(state.cfg.M));
            SliceLoss loss = slice_loss(run, tc.labels, t, state.cfg);
            double modal_mean = 0.0;
            for (const Var& m : loss.modal) modal_mean += m.value()[0];
            modal_mean /= static_cast<double>(loss.modal.size());
            sum_prompt += loss.prompt.value()[0] * slice_w;
            sum_modal += modal_mean * slice_w;
            sum_fusion += loss.fusion.value()[0] * slice_w;
            sum_total += loss.total.value()[0] * slice_w;
            if (!std::isfinite(loss.total.value()[0]))
                throw DivergenceError("loss is not finite at step " + std::to_string(step) +
                                      ", slice " + std::to_string(t));
            ops::scale(loss.total, slice_w).backward();
        }
        optimizer.step(lr);
        state.weights->zero_grads();

        result.curve.push_back(
            {step, epoch, lr, sum_prompt, sum_modal, sum_fusion, sum_total});
    }
    if (options.on_epoch_end) options.on_epoch_end(last_epoch);
    return result;
}

}  // namespace msmseg
