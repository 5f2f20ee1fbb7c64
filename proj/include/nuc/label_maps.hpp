#pragma once

#include <span>
#include <vector>

#include "nuc/image.hpp"

namespace nuc {

/// Labels maximal 8-connected foreground regions 1..K in row-major
/// first-encounter order; background stays 0.
InstanceMap connected_components(const BinaryMask& mask);

/// Remaps ids to 1..K in row-major first-appearance order, preserving the
/// partition. Idempotent.
InstanceMap relabel_sequential(const InstanceMap& m);

/// |a n b| / |a u b| for two pixel-index sets (sorted, unique).
/// Throws UndefinedInputError when both sets are empty.
double instance_iou(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

struct ClassAssignment {
    std::vector<InstanceRecord> records;          // ordered by instance id
    std::vector<std::uint32_t> dropped_ids;       // instances with only background-class pixels
};

/// Assigns each instance the plurality class over its pixels, ignoring
/// background-class pixels; ties break toward the smaller class id.
/// Instances with no classed pixel are dropped and reported.
ClassAssignment assign_instance_classes(const InstanceMap& inst, const ClassMap& cls);

/// Per-class record counts.
Composition composition(std::span<const InstanceRecord> records);

/// Composition of a map pair (assignment + counting in one call).
Composition composition_of_maps(const InstanceMap& inst, const ClassMap& cls);

}  // namespace nuc
