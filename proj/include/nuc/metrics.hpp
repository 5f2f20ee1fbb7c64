#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "nuc/image.hpp"

namespace nuc {

struct TpPair {
    std::uint32_t pred_id = 0;
    std::uint32_t gt_id = 0;
    double iou = 0;
};

struct ClassMatches {
    std::vector<TpPair> tp;  // sorted by (pred_id, gt_id)
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    bool vacuous() const { return tp.empty() && fp == 0 && fn == 0; }
};

/// Per-class matching outcome for one image; index c holds class c+1.
using MatchResult = std::array<ClassMatches, kNumClasses>;

/// Class-wise IoU matching. With threshold >= 0.5 and strict comparison,
/// any instance overlaps more than half with at most one partner, so
/// pairing every qualifying overlap is already the optimal matching.
/// Unmatched predictions count as FP, unmatched ground truths as FN.
MatchResult match_instances(const InstanceMap& pred_inst, const ClassMap& pred_cls,
                            const InstanceMap& gt_inst, const ClassMap& gt_cls,
                            double threshold = 0.5);

struct PqScore {
    double dq = 0;
    std::optional<double> sq;  // undefined without true positives
    double pq = 0;             // dq * sq, or 0 when sq is undefined
};

/// DQ = |TP| / (|TP| + FP/2 + FN/2), SQ = mean TP IoU, PQ = DQ*SQ.
/// Returns nullopt for all-zero stats (class absent from both maps).
std::optional<PqScore> pq_from_stats(std::span<const double> tp_ious, std::int64_t fp,
                                     std::int64_t fn);

struct ClassPqSummary {
    bool defined = false;      // class contributed stats in >= 1 image
    double dq = 0;
    double pq = 0;
    bool sq_defined = false;
    double sq = 0;
};

struct MetricsReport {
    std::int64_t images = 0;
    std::int64_t pred_instances = 0;
    std::int64_t gt_instances = 0;
    // Variant (a): PQ per image, averaged over images where the class is defined.
    std::array<ClassPqSummary, kNumClasses> per_image;
    // Variant (b) "plus": TP/FP/FN and IoU sums pooled over the dataset first.
    std::array<ClassPqSummary, kNumClasses> pooled;
    bool mpq_defined = false;
    double mpq = 0;       // mean per-image-averaged PQ over defined classes
    double mpq_plus = 0;  // mean pooled PQ over defined classes
    std::vector<int> excluded_classes;  // classes with no stats anywhere, 1..6

    std::array<double, kNumClasses> r2{};
    double r2_mean = 0;
    bool r2_defined = false;
};

/// Task 1 aggregation over per-image match results.
MetricsReport mpq(std::span<const MatchResult> per_image_results);

struct R2Result {
    std::array<double, kNumClasses> per_class{};
    double mean = 0;
};

/// Per-class coefficient of determination between predicted and true
/// counts. Constant ground-truth columns score 1 when reproduced exactly
/// and 0 otherwise.
R2Result r2_multiclass(std::span<const Composition> preds, std::span<const Composition> gts);

/// Renders the full report as key/value text lines.
std::string report_to_text(const MetricsReport& r);

}  // namespace nuc
