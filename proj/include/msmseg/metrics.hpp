#pragma once

#include <array>
#include <string>

#include "msmseg/types.hpp"

namespace msmseg {

/// Binary 3-D mask, [T,H,W] row-major.
struct BinaryMask {
    std::vector<std::uint8_t> data;
    int T = 0, H = 0, W = 0;

    static BinaryMask zeros(int t, int h, int w) {
        return {std::vector<std::uint8_t>(static_cast<std::size_t>(t) * h * w, 0), t, h, w};
    }
    std::uint8_t at(int t, int y, int x) const {
        return data[(static_cast<std::size_t>(t) * H + y) * W + x];
    }
    std::uint8_t& at(int t, int y, int x) {
        return data[(static_cast<std::size_t>(t) * H + y) * W + x];
    }
    std::size_t count() const;
    bool same_dims(const BinaryMask& o) const { return T == o.T && H == o.H && W == o.W; }
};

/// ET (subset of) TC (subset of) WT by construction.
struct RegionMasks {
    BinaryMask et, tc, wt;
};

/// Which labels feed each region. The default follows the evaluation text of
/// the source protocol literally (TC = ET + SNFH, WT = TC + NETC); the
/// conventional BraTS reading (TC = ET + NETC, WT adds SNFH) is available as a
/// preset — do not silently swap them.
struct RegionRules {
    std::vector<int> et_labels{kEnhancingTumor};
    std::vector<int> tc_extra{kFlairHyperintense};
    std::vector<int> wt_extra{kNonEnhancingCore};

    static RegionRules paper_text() { return RegionRules{}; }
    static RegionRules conventional() {
        return RegionRules{{kEnhancingTumor}, {kNonEnhancingCore}, {kFlairHyperintense}};
    }
};

RegionMasks compose_regions(const LabelVolume& labels,
                            const RegionRules& rules = RegionRules::paper_text());

/// 2|A∩B| / (|A|+|B|); both empty -> 1.
double dice(const BinaryMask& pred, const BinaryMask& gt);

struct Hd95Options {
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // (sz, sy, sx) mm
    /// Distance charged when exactly one mask is empty; < 0 means the volume
    /// diagonal in mm.
    double empty_penalty = -1.0;
    /// Surface test: 6-neighborhood in 3-D (default) or 4-neighborhood per slice.
    bool surface_2d = false;
};

/// 95th percentile (linear interpolation between order statistics) of the
/// pooled bidirectional surface distances, in mm. Both empty -> 0.
double hd95(const BinaryMask& pred, const BinaryMask& gt, const Hd95Options& opt = {});

/// Surface voxels under the configured neighborhood (exposed for tests).
std::vector<std::array<int, 3>> surface_voxels(const BinaryMask& mask, bool surface_2d = false);

/// Two-sided paired t-test p-value; returns 1.0 when every pairwise
/// difference is zero.
double paired_t_test_pvalue(const std::vector<double>& a, const std::vector<double>& b);

/// One table row per case and region.
struct MetricRow {
    std::string case_name;
    std::string region;
    double dice = 0.0;
    double hd95 = 0.0;
};

/// UTF-8 CSV: header, one row per entry, then mean/std aggregate per region.
void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path);

}  // namespace msmseg
