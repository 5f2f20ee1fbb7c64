#include "nuc/metrics.hpp"

#include <cmath>

#include "doctest.h"
#include "nuc/augment.hpp"
#include "nuc/errors.hpp"
#include "nuc/label_maps.hpp"
#include "test_support.hpp"

using namespace nuc;

namespace {

MatchResult self_match(const testsup::LabeledPair& p) {
    return match_instances(p.instances, p.classes, p.instances, p.classes);
}

}  // namespace

TEST_CASE("match_instances: identity matches everything at IoU 1") {
    Rng rng(1, 701);
    auto pair = testsup::random_labeled_pair(rng, 16, 16, 6);
    MatchResult mr = self_match(pair);
    std::int64_t tp = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        for (const auto& t : mr[c].tp) {
            CHECK(t.iou == 1.0);
            CHECK(t.pred_id == t.gt_id);
            ++tp;
        }
        CHECK(mr[c].fp == 0);
        CHECK(mr[c].fn == 0);
    }
    CHECK(tp == composition_of_maps(pair.instances, pair.classes).total());
}

TEST_CASE("match_instances: hand-built 0.6 IoU pair") {
    // pred: 4 px, gt: 4 px, overlapping 3 -> IoU 3/5.
    InstanceMap pred = make_instance_map(8, 1);
    InstanceMap gt = make_instance_map(8, 1);
    ClassMap pred_cls = make_class_map(8, 1);
    ClassMap gt_cls = make_class_map(8, 1);
    for (int x = 0; x < 4; ++x) {
        pred.at(x, 0) = 1;
        pred_cls.at(x, 0) = 2;
    }
    for (int x = 1; x < 5; ++x) {
        gt.at(x, 0) = 7;
        gt_cls.at(x, 0) = 2;
    }

    MatchResult same = match_instances(pred, pred_cls, gt, gt_cls);
    REQUIRE(same[1].tp.size() == 1);
    CHECK(same[1].tp[0].iou == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(same[1].fp == 0);
    CHECK(same[1].fn == 0);

    // Same geometry, different classes: FP + FN instead of a TP.
    for (int x = 1; x < 5; ++x) gt_cls.at(x, 0) = 3;
    MatchResult diff = match_instances(pred, pred_cls, gt, gt_cls);
    CHECK(diff[1].tp.empty());
    CHECK(diff[1].fp == 1);
    CHECK(diff[1].fn == 0);
    CHECK(diff[2].tp.empty());
    CHECK(diff[2].fp == 0);
    CHECK(diff[2].fn == 1);
}

TEST_CASE("match_instances validates inputs") {
    InstanceMap a = make_instance_map(4, 4);
    InstanceMap b = make_instance_map(4, 5);
    ClassMap ca = make_class_map(4, 4);
    ClassMap cb = make_class_map(4, 5);
    CHECK_THROWS_AS(match_instances(a, ca, b, cb), DimensionError);
    CHECK_THROWS_AS(match_instances(a, ca, a, ca, 0.4), ConfigError);
}

TEST_CASE("greedy matching equals the exhaustive oracle on random pairs") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed, 702);
        auto gt = testsup::random_labeled_pair(rng, 16, 16, 5);
        auto pred = testsup::perturb_pair(rng, gt, 8);

        MatchResult got = match_instances(pred.instances, pred.classes, gt.instances, gt.classes);
        auto expect = testsup::oracle_match(pred.instances, pred.classes, gt.instances,
                                            gt.classes, 0.5);
        for (int c = 0; c < kNumClasses; ++c) {
            REQUIRE(got[c].tp.size() == expect[c].pairs.size());
            for (std::size_t i = 0; i < got[c].tp.size(); ++i) {
                REQUIRE(got[c].tp[i].pred_id == expect[c].pairs[i].pred_id);
                REQUIRE(got[c].tp[i].gt_id == expect[c].pairs[i].gt_id);
            }
            REQUIRE(got[c].fp == expect[c].fp);
            REQUIRE(got[c].fn == expect[c].fn);
        }
    }
}

TEST_CASE("pq_from_stats fixtures") {
    auto one_tp = pq_from_stats(std::vector<double>{0.6}, 0, 0);
    REQUIRE(one_tp.has_value());
    CHECK(one_tp->dq == 1.0);
    REQUIRE(one_tp->sq.has_value());
    CHECK(std::abs(*one_tp->sq - 0.6) < 1e-12);
    CHECK(std::abs(one_tp->pq - 0.6) < 1e-12);

    auto no_tp = pq_from_stats({}, 2, 1);
    REQUIRE(no_tp.has_value());
    CHECK(no_tp->dq == 0.0);
    CHECK(no_tp->pq == 0.0);
    CHECK_FALSE(no_tp->sq.has_value());

    CHECK_FALSE(pq_from_stats({}, 0, 0).has_value());
}

TEST_CASE("pq equals dq*sq to 1e-12 whenever defined") {
    Rng rng(5, 703);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> ious(rng.next_below(6) + 1);
        for (auto& v : ious) v = rng.uniform(0.5, 1.0);
        auto score = pq_from_stats(ious, static_cast<std::int64_t>(rng.next_below(4)),
                                   static_cast<std::int64_t>(rng.next_below(4)));
        REQUIRE(score.has_value());
        REQUIRE(score->sq.has_value());
        CHECK(std::abs(score->pq - score->dq * *score->sq) < 1e-12);
    }
}

TEST_CASE("mpq: perfect predictions score exactly one") {
    std::vector<MatchResult> images;
    Rng rng(7, 704);
    for (int i = 0; i < 50; ++i) {
        auto pair = testsup::random_labeled_pair(rng, 16, 16, 6);
        images.push_back(self_match(pair));
    }
    MetricsReport report = mpq(images);
    REQUIRE(report.mpq_defined);
    CHECK(report.mpq == 1.0);
    CHECK(report.mpq_plus == 1.0);
}

TEST_CASE("mpq: single image, single class equals that image's PQ") {
    MatchResult mr{};
    mr[2].tp = {{1, 1, 0.8}, {2, 2, 0.7}};
    mr[2].fp = 1;
    std::vector<MatchResult> images = {mr};
    MetricsReport report = mpq(images);
    double dq = 2.0 / (2.0 + 0.5);
    double sq = (0.7 + 0.8) / 2.0;
    CHECK(std::abs(report.mpq - dq * sq) < 1e-12);
    CHECK(std::abs(report.mpq_plus - dq * sq) < 1e-12);
    CHECK(report.per_image[2].pq == report.pooled[2].pq);
    CHECK(report.excluded_classes == std::vector<int>{1, 2, 4, 5, 6});
}

TEST_CASE("mpq: two-image pooled vs per-image hand case") {
    MatchResult img1{};
    img1[0].tp = {{1, 1, 0.6}};
    MatchResult img2{};
    img2[0].fp = 1;
    img2[0].fn = 1;
    std::vector<MatchResult> images = {img1, img2};
    MetricsReport report = mpq(images);

    CHECK(std::abs(report.per_image[0].pq - 0.3) < 1e-12);  // (0.6 + 0) / 2
    CHECK(std::abs(report.pooled[0].dq - 0.5) < 1e-12);     // 1 / (1 + 0.5 + 0.5)
    REQUIRE(report.pooled[0].sq_defined);
    CHECK(std::abs(report.pooled[0].sq - 0.6) < 1e-12);
    CHECK(std::abs(report.pooled[0].pq - 0.3) < 1e-12);
    CHECK(std::abs(report.mpq - 0.3) < 1e-12);
    CHECK(std::abs(report.mpq_plus - 0.3) < 1e-12);
}

TEST_CASE("mpq rejects an empty dataset") {
    CHECK_THROWS_AS(mpq({}), UndefinedInputError);
}

TEST_CASE("r2_multiclass fixtures") {
    std::vector<Composition> gts(2), preds(2);

    SUBCASE("identity gives 1") {
        gts[0].counts = {1, 2, 3, 4, 5, 6};
        gts[1].counts = {6, 5, 4, 3, 2, 1};
        R2Result r = r2_multiclass(gts, gts);
        for (int c = 0; c < kNumClasses; ++c) CHECK(r.per_class[c] == 1.0);
        CHECK(r.mean == 1.0);
    }

    SUBCASE("mean predictor gives 0") {
        gts[0].counts = {0, 2, 4, 6, 8, 10};
        gts[1].counts = {2, 4, 6, 8, 10, 12};
        preds[0].counts = {1, 3, 5, 7, 9, 11};  // per-class gt means
        preds[1].counts = {1, 3, 5, 7, 9, 11};
        R2Result r = r2_multiclass(preds, gts);
        for (int c = 0; c < kNumClasses; ++c) CHECK(std::abs(r.per_class[c]) < 1e-12);
    }

    SUBCASE("hand case 0.75") {
        gts[0].counts = {0, 0, 0, 0, 0, 0};
        gts[1].counts = {4, 0, 0, 0, 0, 0};
        preds[0].counts = {1, 0, 0, 0, 0, 0};
        preds[1].counts = {3, 0, 0, 0, 0, 0};
        R2Result r = r2_multiclass(preds, gts);
        CHECK(std::abs(r.per_class[0] - 0.75) < 1e-12);  // 1 - 2/8
        // Other classes are constant zero and reproduced exactly.
        for (int c = 1; c < kNumClasses; ++c) CHECK(r.per_class[c] == 1.0);
    }

    SUBCASE("constant column missed gives 0") {
        gts[0].counts = {3, 0, 0, 0, 0, 0};
        gts[1].counts = {3, 0, 0, 0, 0, 0};
        preds[0].counts = {2, 0, 0, 0, 0, 0};
        preds[1].counts = {3, 0, 0, 0, 0, 0};
        R2Result r = r2_multiclass(preds, gts);
        CHECK(r.per_class[0] == 0.0);
    }

    SUBCASE("bad predictors go negative, never above 1") {
        gts[0].counts = {0, 0, 0, 0, 0, 0};
        gts[1].counts = {2, 0, 0, 0, 0, 0};
        preds[0].counts = {50, 0, 0, 0, 0, 0};
        preds[1].counts = {0, 0, 0, 0, 0, 0};
        R2Result r = r2_multiclass(preds, gts);
        CHECK(r.per_class[0] < 0.0);
        for (int c = 0; c < kNumClasses; ++c) CHECK(r.per_class[c] <= 1.0);
    }

    SUBCASE("errors") {
        std::vector<Composition> three(3);
        CHECK_THROWS_AS(r2_multiclass(three, gts), DimensionError);
        CHECK_THROWS_AS(r2_multiclass({}, {}), UndefinedInputError);
    }
}

TEST_CASE("metrics are invariant under shared flips, rotations and relabeling") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed, 705);
        auto gt = testsup::random_labeled_pair(rng, 16, 16, 5);
        auto pred = testsup::perturb_pair(rng, gt, 8);

        std::vector<MatchResult> base_mr = {
            match_instances(pred.instances, pred.classes, gt.instances, gt.classes)};
        MetricsReport base = mpq(base_mr);
        std::vector<Composition> pc = {composition_of_maps(pred.instances, pred.classes)};
        std::vector<Composition> gc = {composition_of_maps(gt.instances, gt.classes)};
        R2Result base_r2 = r2_multiclass(pc, gc);

        auto check_same = [&](const InstanceMap& pi, const ClassMap& pcl, const InstanceMap& gi,
                              const ClassMap& gcl) {
            std::vector<MatchResult> mr = {match_instances(pi, pcl, gi, gcl)};
            MetricsReport rep = mpq(mr);
            REQUIRE(rep.mpq_defined == base.mpq_defined);
            if (base.mpq_defined) {
                REQUIRE(rep.mpq == base.mpq);
                REQUIRE(rep.mpq_plus == base.mpq_plus);
            }
            std::vector<Composition> pc2 = {composition_of_maps(pi, pcl)};
            std::vector<Composition> gc2 = {composition_of_maps(gi, gcl)};
            R2Result r2 = r2_multiclass(pc2, gc2);
            REQUIRE(r2.mean == base_r2.mean);
            REQUIRE(pc2[0] == pc[0]);
            REQUIRE(gc2[0] == gc[0]);
        };

        check_same(flip_h(pred.instances), flip_h(pred.classes), flip_h(gt.instances),
                   flip_h(gt.classes));
        check_same(flip_v(pred.instances), flip_v(pred.classes), flip_v(gt.instances),
                   flip_v(gt.classes));
        int turns = 1 + static_cast<int>(rng.next_below(3));
        check_same(rot90(pred.instances, turns), rot90(pred.classes, turns),
                   rot90(gt.instances, turns), rot90(gt.classes, turns));
        check_same(relabel_sequential(pred.instances), pred.classes,
                   relabel_sequential(gt.instances), gt.classes);
    }
}

TEST_CASE("report rendering stays stable for undefined slots") {
    MatchResult mr{};
    mr[0].tp = {{1, 1, 1.0}};
    std::vector<MatchResult> images = {mr};
    MetricsReport report = mpq(images);
    std::string text = report_to_text(report);
    CHECK(text.find("per_image 1 dq 1 sq 1 pq 1") != std::string::npos);
    CHECK(text.find("per_image 2 dq na sq na pq na") != std::string::npos);
    CHECK(text.find("excluded_classes 2,3,4,5,6") != std::string::npos);
}
