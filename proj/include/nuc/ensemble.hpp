#pragma once

#include <cstdint>
#include <vector>

#include "nuc/image.hpp"

namespace nuc {

/// Instance + class prediction produced at one input scale (square maps).
struct ScaledPrediction {
    int scale = 0;  // side length
    InstanceMap instances;
    ClassMap classes;

    void validate() const;
};

struct EnsembleConfig {
    int base_size = 256;
    double iou_threshold = 0.5;
    int min_votes = 3;
    std::vector<int> scales = {256, 512, 800, 1024, 1152};

    void validate() const;
};

/// Nearest-neighbour rescale of both layers to base x base. Instances can
/// vanish at small targets; vanished ids are appended to *vanished.
ScaledPrediction rescale_prediction(const ScaledPrediction& p, int base,
                                    std::vector<std::uint32_t>* vanished = nullptr);

struct FusedInstance {
    std::uint32_t id = 0;
    int cls = 0;
    std::int64_t pixel_count = 0;
    std::vector<std::pair<int, std::uint32_t>> members;  // (scale, source id), sorted
};

struct FusedPrediction {
    InstanceMap instances;
    ClassMap classes;
    std::vector<FusedInstance> provenance;  // ordered by fused id
};

/// Cross-scale fusion: instances from all rescaled predictions are
/// clustered by IoU >= threshold (edges only between different scales),
/// clusters seen by fewer than min_votes scales are discarded, each
/// surviving cluster keeps the pixels covered by at least half of its
/// members, and pixel conflicts go to the cluster with more local votes.
/// Output ids are 1..K in row-major first-pixel order; the result does
/// not depend on the order of the input list.
FusedPrediction fuse(const std::vector<ScaledPrediction>& preds, const EnsembleConfig& cfg);

}  // namespace nuc
