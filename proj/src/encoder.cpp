#include "msmseg/encoder.hpp"

namespace msmseg {

EncoderWeights EncoderWeights::make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                                    const std::string& prefix) {
    EncoderWeights w;
    int ci = 1;
    for (int s = 0; s < cfg.levels; ++s) {
        const int co = cfg.level_channels(s);
        const std::string p = prefix + ".stage" + std::to_string(s);
        EncoderWeights::Stage st;
        st.down = nn::Conv2d::make(reg, rng, p + ".down", ci, co, 3, 2, 1);
        st.norm = nn::ChannelNorm::make(reg, p + ".norm", co);
        st.res_a = nn::Conv2d::make(reg, rng, p + ".res_a", co, co, 3, 1, 1);
        st.res_norm = nn::ChannelNorm::make(reg, p + ".res_norm", co);
        st.res_b = nn::Conv2d::make(reg, rng, p + ".res_b", co, co, 3, 1, 1);
        w.stages.push_back(std::move(st));
        ci = co;
    }
    return w;
}

EncoderWeights init_encoder(const ModelConfig& cfg, std::uint64_t seed, nn::ParamRegistry* reg) {
    Rng rng(seed);
    nn::ParamRegistry local;
    return EncoderWeights::make(reg ? *reg : local, rng, cfg);
}

FeaturePyramid encode(const Var& slice, const EncoderWeights& weights, const ModelConfig& cfg) {
    check_shape(slice.value(), {1, cfg.H, cfg.W}, "encode input");
    ops::check_finite(slice.value(), "encode input");
    FeaturePyramid pyr;
    Var x = slice;
    for (const auto& st : weights.stages) {
        x = ops::silu(st.norm(st.down(x)));
        Var r = st.res_b(ops::silu(st.res_norm(st.res_a(x))));
        x = ops::add(x, r);
        pyr.levels.push_back(x);
    }
    return pyr;
}

}  // namespace msmseg
