#include "nuc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "nuc/errors.hpp"
#include "nuc/label_maps.hpp"
#include "nuc/stats.hpp"

namespace nuc {

MatchResult match_instances(const InstanceMap& pred_inst, const ClassMap& pred_cls,
                            const InstanceMap& gt_inst, const ClassMap& gt_cls,
                            double threshold) {
    require_same_dims(pred_inst, gt_inst, "pred vs gt instance maps");
    require_same_dims(pred_inst, pred_cls, "pred instance vs class map");
    require_same_dims(gt_inst, gt_cls, "gt instance vs class map");
    if (threshold < 0.5)
        throw ConfigError("matching threshold below 0.5 loses the uniqueness guarantee");

    auto pred_assign = assign_instance_classes(pred_inst, pred_cls);
    auto gt_assign = assign_instance_classes(gt_inst, gt_cls);

    std::unordered_map<std::uint32_t, const InstanceRecord*> pred_rec, gt_rec;
    for (const auto& r : pred_assign.records) pred_rec.emplace(r.id, &r);
    for (const auto& r : gt_assign.records) gt_rec.emplace(r.id, &r);

    // Intersection counts over co-located id pairs.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> inter;
    for (std::size_t i = 0; i < pred_inst.labels.size(); ++i) {
        std::uint32_t pp = pred_inst.labels[i];
        std::uint32_t gg = gt_inst.labels[i];
        if (pp && gg) inter[{pp, gg}] += 1;
    }

    MatchResult result;
    std::array<std::int64_t, kNumClasses> matched_pred{}, matched_gt{};
    std::array<std::int64_t, kNumClasses> total_pred{}, total_gt{};
    for (const auto& r : pred_assign.records) total_pred[r.cls - 1] += 1;
    for (const auto& r : gt_assign.records) total_gt[r.cls - 1] += 1;

    for (const auto& [pair, cnt] : inter) {
        auto pit = pred_rec.find(pair.first);
        auto git = gt_rec.find(pair.second);
        if (pit == pred_rec.end() || git == gt_rec.end()) continue;
        if (pit->second->cls != git->second->cls) continue;  // class-wise matching only
        double iou = static_cast<double>(cnt) /
                     static_cast<double>(pit->second->pixel_count + git->second->pixel_count - cnt);
        if (iou > threshold) {
            int c = pit->second->cls - 1;
            result[c].tp.push_back(TpPair{pair.first, pair.second, iou});
            matched_pred[c] += 1;
            matched_gt[c] += 1;
        }
    }

    for (int c = 0; c < kNumClasses; ++c) {
        auto& tp = result[c].tp;
        std::sort(tp.begin(), tp.end(), [](const TpPair& a, const TpPair& b) {
            return std::pair(a.pred_id, a.gt_id) < std::pair(b.pred_id, b.gt_id);
        });
        // IoU > 0.5 makes double pairing impossible; guard the invariant anyway.
        for (std::size_t i = 1; i < tp.size(); ++i)
            if (tp[i].pred_id == tp[i - 1].pred_id || tp[i].gt_id == tp[i - 1].gt_id)
                throw std::logic_error("non-unique IoU>0.5 matching");
        result[c].fp = total_pred[c] - matched_pred[c];
        result[c].fn = total_gt[c] - matched_gt[c];
    }
    return result;
}

std::optional<PqScore> pq_from_stats(std::span<const double> tp_ious, std::int64_t fp,
                                     std::int64_t fn) {
    if (fp < 0 || fn < 0) throw ValueRangeError("negative FP/FN count");
    std::int64_t tp = static_cast<std::int64_t>(tp_ious.size());
    if (tp == 0 && fp == 0 && fn == 0) return std::nullopt;

    PqScore score;
    score.dq = static_cast<double>(tp) /
               (static_cast<double>(tp) + 0.5 * static_cast<double>(fp) + 0.5 * static_cast<double>(fn));
    if (tp > 0) {
        score.sq = sorted_sum({tp_ious.begin(), tp_ious.end()}) / static_cast<double>(tp);
        score.pq = score.dq * *score.sq;
    } else {
        score.pq = 0;
    }
    return score;
}

MetricsReport mpq(std::span<const MatchResult> per_image_results) {
    if (per_image_results.empty()) throw UndefinedInputError("mPQ over an empty dataset");

    MetricsReport report;
    report.images = static_cast<std::int64_t>(per_image_results.size());

    struct PerImageAcc {
        std::int64_t n_defined = 0;
        double dq_sum = 0, pq_sum = 0;
        std::int64_t n_sq = 0;
        double sq_sum = 0;
    };
    std::array<PerImageAcc, kNumClasses> acc;
    std::array<std::vector<double>, kNumClasses> pooled_ious;
    std::array<std::int64_t, kNumClasses> pooled_fp{}, pooled_fn{};

    for (const auto& mr : per_image_results) {
        for (int c = 0; c < kNumClasses; ++c) {
            const ClassMatches& cm = mr[c];
            report.pred_instances += static_cast<std::int64_t>(cm.tp.size()) + cm.fp;
            report.gt_instances += static_cast<std::int64_t>(cm.tp.size()) + cm.fn;
            if (cm.vacuous()) continue;
            std::vector<double> ious;
            ious.reserve(cm.tp.size());
            for (const auto& t : cm.tp) ious.push_back(t.iou);
            auto score = pq_from_stats(ious, cm.fp, cm.fn);
            acc[c].n_defined += 1;
            acc[c].dq_sum += score->dq;
            acc[c].pq_sum += score->pq;
            if (score->sq) {
                acc[c].n_sq += 1;
                acc[c].sq_sum += *score->sq;
            }
            pooled_fp[c] += cm.fp;
            pooled_fn[c] += cm.fn;
            auto& pool = pooled_ious[c];
            pool.insert(pool.end(), ious.begin(), ious.end());
        }
    }

    double mpq_sum = 0, mpq_plus_sum = 0;
    int defined_classes = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        if (acc[c].n_defined == 0) {
            report.excluded_classes.push_back(c + 1);
            continue;
        }
        ++defined_classes;
        ClassPqSummary& pi = report.per_image[c];
        pi.defined = true;
        pi.dq = acc[c].dq_sum / static_cast<double>(acc[c].n_defined);
        pi.pq = acc[c].pq_sum / static_cast<double>(acc[c].n_defined);
        if (acc[c].n_sq > 0) {
            pi.sq_defined = true;
            pi.sq = acc[c].sq_sum / static_cast<double>(acc[c].n_sq);
        }
        mpq_sum += pi.pq;

        auto pooled_score = pq_from_stats(pooled_ious[c], pooled_fp[c], pooled_fn[c]);
        ClassPqSummary& po = report.pooled[c];
        po.defined = true;
        po.dq = pooled_score->dq;
        po.pq = pooled_score->pq;
        if (pooled_score->sq) {
            po.sq_defined = true;
            po.sq = *pooled_score->sq;
        }
        mpq_plus_sum += po.pq;
    }
    if (defined_classes > 0) {
        report.mpq_defined = true;
        report.mpq = mpq_sum / defined_classes;
        report.mpq_plus = mpq_plus_sum / defined_classes;
    }
    return report;
}

R2Result r2_multiclass(std::span<const Composition> preds, std::span<const Composition> gts) {
    if (preds.size() != gts.size()) throw DimensionError("pred/gt composition lists differ in length");
    if (preds.empty()) throw UndefinedInputError("R^2 over empty lists");

    R2Result result;
    double sum = 0;
    const double n = static_cast<double>(gts.size());
    for (int c = 0; c < kNumClasses; ++c) {
        double gsum = 0;
        for (const auto& g : gts) gsum += static_cast<double>(g[c]);
        double gmean = gsum / n;
        double ss_res = 0, ss_tot = 0;
        for (std::size_t i = 0; i < gts.size(); ++i) {
            double d = static_cast<double>(gts[i][c]) - static_cast<double>(preds[i][c]);
            ss_res += d * d;
            double t = static_cast<double>(gts[i][c]) - gmean;
            ss_tot += t * t;
        }
        double r2;
        if (ss_tot == 0) {
            r2 = (ss_res == 0) ? 1.0 : 0.0;  // constant column convention
        } else {
            r2 = 1.0 - ss_res / ss_tot;
        }
        result.per_class[c] = r2;
        sum += r2;
    }
    result.mean = sum / kNumClasses;
    return result;
}

namespace {

void append_class_line(std::ostringstream& out, const char* variant, int cls,
                       const ClassPqSummary& s) {
    char buf[160];
    if (!s.defined) {
        std::snprintf(buf, sizeof(buf), "%s %d dq na sq na pq na\n", variant, cls);
    } else if (!s.sq_defined) {
        std::snprintf(buf, sizeof(buf), "%s %d dq %.17g sq na pq %.17g\n", variant, cls, s.dq, s.pq);
    } else {
        std::snprintf(buf, sizeof(buf), "%s %d dq %.17g sq %.17g pq %.17g\n", variant, cls, s.dq,
                      s.sq, s.pq);
    }
    out << buf;
}

}  // namespace

std::string report_to_text(const MetricsReport& r) {
    std::ostringstream out;
    char buf[160];
    out << "images " << r.images << "\n";
    out << "pred_instances " << r.pred_instances << "\n";
    out << "gt_instances " << r.gt_instances << "\n";
    for (int c = 0; c < kNumClasses; ++c) append_class_line(out, "per_image", c + 1, r.per_image[c]);
    for (int c = 0; c < kNumClasses; ++c) append_class_line(out, "pooled", c + 1, r.pooled[c]);
    if (r.mpq_defined) {
        std::snprintf(buf, sizeof(buf), "mpq %.17g\nmpq_plus %.17g\n", r.mpq, r.mpq_plus);
        out << buf;
    } else {
        out << "mpq na\nmpq_plus na\n";
    }
    out << "excluded_classes";
    if (r.excluded_classes.empty()) {
        out << " none";
    } else {
        for (std::size_t i = 0; i < r.excluded_classes.size(); ++i)
            out << (i ? "," : " ") << r.excluded_classes[i];
    }
    out << "\n";
    if (r.r2_defined) {
        for (int c = 0; c < kNumClasses; ++c) {
            std::snprintf(buf, sizeof(buf), "r2 %d %.17g\n", c + 1, r.r2[c]);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), "r2_mean %.17g\n", r.r2_mean);
        out << buf;
    }
    return out.str();
}

}  // namespace nuc
