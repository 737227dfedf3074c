#pragma once

#include "msmseg/pipeline.hpp"

namespace msmseg {

/// Nested-ellipsoid phantom recipe. Region order in the intensity table is
/// {background, ET, NETC, SNFH}; modality rows follow modality_order.
struct SyntheticSpec {
    int T = 3, H = 64, W = 64;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int tumor_count = 1;
    std::array<double, 2> center_t{0.35, 0.65};
    std::array<double, 2> center_y{0.32, 0.68};
    std::array<double, 2> center_x{0.32, 0.68};
    std::array<double, 2> axis_t{1.1, 1.7};    // voxels
    std::array<double, 2> axis_y{10.0, 16.0};
    std::array<double, 2> axis_x{10.0, 16.0};
    /// Axis scale for SNFH (outer), NETC, ET (inner); strictly decreasing.
    std::array<double, 3> nesting{1.0, 0.62, 0.34};
    std::vector<std::string> modality_order = default_modality_order();
    /// intensity[m] = {bg, ET, NETC, SNFH}; ET bright in T1c, SNFH bright in FLAIR.
    std::vector<std::array<double, 4>> intensity{
        {0.20, 0.55, 0.45, 0.90},  // FLAIR
        {0.50, 0.35, 0.30, 0.40},  // T1
        {0.30, 0.95, 0.35, 0.40},  // T1c
        {0.35, 0.50, 0.70, 0.75},  // T2
    };
    double noise_sigma = 0.03;
    int box_pad = 2;

    void validate() const;
};

struct GeneratedCase {
    MultiModalVolume volume;
    LabelVolume labels;
    VolumePrompts boxes;  // tight whole-tumor box per slice; automatic where empty
    std::uint64_t seed = 0;
};

/// Deterministic per seed. Intensities are quantized through float32 so the
/// in-memory volume round-trips the on-disk format bit-exactly.
GeneratedCase generate_case(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace msmseg
