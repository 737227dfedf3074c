#include "msmseg/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace msmseg {

void SyntheticSpec::validate() const {
    if (T < 1 || H < 1 || W < 1) throw SpecError("dims must be positive");
    if (tumor_count < 1) throw SpecError("tumor_count must be >= 1");
    if (!(nesting[0] > nesting[1] && nesting[1] > nesting[2] && nesting[2] > 0.0))
        throw SpecError("nesting ratios must be strictly decreasing and positive");
    if (intensity.size() != modality_order.size())
        throw SpecError("intensity table must have one row per modality");
    for (const auto& row : intensity)
        for (double v : row)
            if (v < 0.0 || v > 1.0) throw SpecError("intensities must lie in [0,1]");
    if (noise_sigma < 0.0) throw SpecError("noise sigma must be >= 0");
    for (double s : spacing)
        if (!(s > 0.0)) throw SpecError("spacing must be positive");
}

namespace {

struct Ellipsoid {
    double ct, cy, cx;
    double at, ay, ax;

    bool contains(int t, int y, int x, double scale) const {
        const double dt = (t - ct) / (at * scale);
        const double dy = (y - cy) / (ay * scale);
        const double dx = (x - cx) / (ax * scale);
        return dt * dt + dy * dy + dx * dx <= 1.0;
    }
};

}  // namespace

GeneratedCase generate_case(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const int m_count = static_cast<int>(spec.modality_order.size());

    std::vector<Ellipsoid> tumors;
    for (int i = 0; i < spec.tumor_count; ++i) {
        Ellipsoid e;
        e.ct = rng.uniform(spec.center_t[0], spec.center_t[1]) * (spec.T - 1);
        e.cy = rng.uniform(spec.center_y[0], spec.center_y[1]) * (spec.H - 1);
        e.cx = rng.uniform(spec.center_x[0], spec.center_x[1]) * (spec.W - 1);
        e.at = rng.uniform(spec.axis_t[0], spec.axis_t[1]);
        e.ay = rng.uniform(spec.axis_y[0], spec.axis_y[1]);
        e.ax = rng.uniform(spec.axis_x[0], spec.axis_x[1]);
        tumors.push_back(e);
    }

    GeneratedCase out;
    out.seed = seed;
    out.labels.T = spec.T;
    out.labels.H = spec.H;
    out.labels.W = spec.W;
    out.labels.labels.assign(static_cast<std::size_t>(spec.T) * spec.H * spec.W, 0);
    for (int t = 0; t < spec.T; ++t)
        for (int y = 0; y < spec.H; ++y)
            for (int x = 0; x < spec.W; ++x) {
                int label = kBackground;
                for (const Ellipsoid& e : tumors) {
                    int cand = kBackground;
                    if (e.contains(t, y, x, spec.nesting[2]))
                        cand = kEnhancingTumor;
                    else if (e.contains(t, y, x, spec.nesting[1]))
                        cand = kNonEnhancingCore;
                    else if (e.contains(t, y, x, spec.nesting[0]))
                        cand = kFlairHyperintense;
                    if (cand != kBackground && (label == kBackground || cand < label)) label = cand;
                }
                out.labels.at(t, y, x) = static_cast<std::uint8_t>(label);
            }

    // Region index into the intensity rows: 0=bg, 1=ET, 2=NETC, 3=SNFH.
    out.volume.data = Tensor({spec.T, m_count, spec.H, spec.W});
    out.volume.spacing = spec.spacing;
    out.volume.modality_order = spec.modality_order;
    for (int t = 0; t < spec.T; ++t)
        for (int m = 0; m < m_count; ++m)
            for (int y = 0; y < spec.H; ++y)
                for (int x = 0; x < spec.W; ++x) {
                    const int region = out.labels.at(t, y, x);
                    double v = spec.intensity[static_cast<std::size_t>(m)]
                                             [static_cast<std::size_t>(region)];
                    v += spec.noise_sigma * rng.normal();
                    v = std::clamp(v, 0.0, 1.0);
                    out.volume.data.at(t, m, y, x) = static_cast<double>(static_cast<float>(v));
                }
    out.volume.validate();

    // Tight whole-tumor boxes (edge coordinates), padded and clamped.
    out.boxes = VolumePrompts::automatic(spec.T);
    for (int t = 0; t < spec.T; ++t) {
        int y0 = spec.H, y1 = -1, x0 = spec.W, x1 = -1;
        for (int y = 0; y < spec.H; ++y)
            for (int x = 0; x < spec.W; ++x)
                if (out.labels.at(t, y, x) != kBackground) {
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                }
        if (y1 < 0) continue;  // no tumor on this slice: stay automatic
        Box b;
        b.x0 = std::max(0, x0 - spec.box_pad);
        b.y0 = std::max(0, y0 - spec.box_pad);
        b.x1 = std::min(spec.W, x1 + 1 + spec.box_pad);
        b.y1 = std::min(spec.H, y1 + 1 + spec.box_pad);
        out.boxes.per_slice[static_cast<std::size_t>(t)] = PromptInput::boxed(b);
    }
    return out;
}

}  // namespace msmseg
