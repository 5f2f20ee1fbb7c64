#include "nuc/dataset.hpp"

#include <filesystem>
#include <set>

#include "doctest.h"
#include "nuc/errors.hpp"
#include "nuc/label_maps.hpp"
#include "nuc/png_io.hpp"
#include "nuc/rng.hpp"
#include "test_support.hpp"

using namespace nuc;
namespace fs = std::filesystem;

namespace {

Manifest synthetic_manifest(Rng& rng, std::size_t n, std::int64_t max_per_class = 5) {
    Manifest m;
    m.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ManifestEntry e;
        e.id = "sample_" + std::to_string(i);
        e.image_path = "img/" + std::to_string(i) + ".png";
        e.instance_path = "inst/" + std::to_string(i) + ".png";
        e.class_path = "cls/" + std::to_string(i) + ".png";
        for (int c = 0; c < kNumClasses; ++c)
            e.composition[c] =
                static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(max_per_class + 1)));
        m.entries.push_back(std::move(e));
    }
    return m;
}

}  // namespace

TEST_CASE("split_sizes reproduces the 4981-entry reference") {
    auto sizes = split_sizes(4981, SplitRatios{4, 1, 0.1});
    CHECK(sizes[0] == 3905);
    CHECK(sizes[1] == 976);
    CHECK(sizes[2] == 100);
}

TEST_CASE("split_sizes always partitions n") {
    Rng rng(1, 501);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 3 + rng.next_below(10000);
        SplitRatios r{rng.uniform(0.5, 8), rng.uniform(0.5, 4), rng.uniform(0.05, 2)};
        auto sizes = split_sizes(n, r);
        CHECK(sizes[0] + sizes[1] + sizes[2] == n);
    }
}

TEST_CASE("three identical entries at 1:1:1 get one each") {
    Rng rng(2, 502);
    Manifest m = synthetic_manifest(rng, 3);
    for (auto& e : m.entries) e.composition = m.entries[0].composition;
    SplitResult r = stratified_split(m, SplitRatios{1, 1, 1}, 7);
    CHECK(r.train.entries.size() == 1);
    CHECK(r.val.entries.size() == 1);
    CHECK(r.test.entries.size() == 1);
}

TEST_CASE("stratified_split is a deterministic true partition") {
    Rng rng(3, 503);
    Manifest m = synthetic_manifest(rng, 500);
    SplitRatios ratios{4, 1, 0.1};

    SplitResult a = stratified_split(m, ratios, 42);
    SplitResult b = stratified_split(m, ratios, 42);

    auto ids = [](const Manifest& part) {
        std::set<std::string> s;
        for (const auto& e : part.entries) s.insert(e.id);
        return s;
    };
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(a.val) == ids(b.val));
    CHECK(ids(a.test) == ids(b.test));

    // Disjoint cover.
    std::set<std::string> all = ids(a.train);
    for (const auto& s : {ids(a.val), ids(a.test)})
        for (const auto& id : s) CHECK(all.insert(id).second);
    CHECK(all.size() == m.entries.size());

    // Conservation of counts.
    Composition total;
    for (const Manifest* part : {&a.train, &a.val, &a.test}) {
        Composition pc = part->total_composition();
        for (int c = 0; c < kNumClasses; ++c) total[c] += pc[c];
    }
    CHECK(total == m.total_composition());

    // A different seed moves entries around.
    SplitResult c = stratified_split(m, ratios, 43);
    CHECK(ids(c.train) != ids(a.train));
}

TEST_CASE("stratified_split balances per-class totals within 10%") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed, 504);
        Manifest m = synthetic_manifest(rng, 400, 4);  // ~800 per class
        SplitRatios ratios{2, 1, 1};
        SplitResult r = stratified_split(m, ratios, seed);
        Composition global = m.total_composition();
        const Manifest* parts[3] = {&r.train, &r.val, &r.test};
        for (int p = 0; p < 3; ++p) {
            double share = static_cast<double>(parts[p]->entries.size()) /
                           static_cast<double>(m.entries.size());
            Composition totals = parts[p]->total_composition();
            for (int c = 0; c < kNumClasses; ++c) {
                double target = static_cast<double>(global[c]) * share;
                REQUIRE(target > 0);
                REQUIRE(std::abs(static_cast<double>(totals[c]) - target) / target < 0.10);
            }
        }
    }
}

TEST_CASE("stratified_split rejects undersized input") {
    Rng rng(4, 505);
    Manifest m = synthetic_manifest(rng, 2);
    CHECK_THROWS_AS(stratified_split(m, SplitRatios{1, 1, 1}, 0), ConfigError);
}

TEST_CASE("ratio parsing") {
    SplitRatios r = SplitRatios::parse("4:1:0.1");
    CHECK(r.train == 4.0);
    CHECK(r.val == 1.0);
    CHECK(r.test == doctest::Approx(0.1));
    CHECK_THROWS_AS(SplitRatios::parse("4:1"), ConfigError);
    CHECK_THROWS_AS(SplitRatios::parse("4:0:1"), ConfigError);
    CHECK_THROWS_AS(SplitRatios::parse("a:b:c"), ConfigError);
}

TEST_CASE("manifest text round trip and duplicate detection") {
    Rng rng(5, 506);
    Manifest m = synthetic_manifest(rng, 20);
    Manifest back = manifest_from_text(manifest_to_text(m));
    REQUIRE(back.entries.size() == m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(back.entries[i].id == m.entries[i].id);
        CHECK(back.entries[i].image_path == m.entries[i].image_path);
        CHECK(back.entries[i].composition == m.entries[i].composition);
    }

    std::string dup = manifest_to_text(m);
    dup += dup.substr(dup.find('\n', dup.find("sample_0")) + 1);  // repeat some lines
    CHECK_THROWS_AS(manifest_from_text(dup + manifest_to_text(m)), IoError);
}

TEST_CASE("sample save/load round trip is bit exact") {
    Rng rng(6, 507);
    fs::path dir = fs::temp_directory_path() / "nuc_test_sample_io";
    fs::create_directories(dir);

    Sample s;
    s.image = make_rgb(24, 18);
    for (auto& px : s.image.pixels) px = static_cast<std::uint8_t>(rng.next_below(256));
    auto pair = testsup::random_labeled_pair(rng, 24, 18, 6);
    s.instances = pair.instances;
    s.classes = pair.classes;

    ManifestEntry e;
    e.id = "t";
    e.image_path = dir / "t.png";
    e.instance_path = dir / "t_inst.png";
    e.class_path = dir / "t_cls.png";
    e.composition = composition_of_maps(s.instances, s.classes);

    save_sample(s, e.image_path, e.instance_path, e.class_path);
    LoadReport report;
    Sample back = load_sample(e, &report);
    CHECK(back.image.pixels == s.image.pixels);
    CHECK(back.instances.labels == s.instances.labels);
    CHECK(back.classes.labels == s.classes.labels);
    CHECK_FALSE(report.composition_mismatch);

    // A stale cached composition is reported, not fatal.
    e.composition[0] += 1;
    Sample again = load_sample(e, &report);
    CHECK(report.composition_mismatch);
    CHECK(again.image.pixels == s.image.pixels);

    fs::remove_all(dir);
}

TEST_CASE("load_sample rejects mismatched layer dimensions") {
    fs::path dir = fs::temp_directory_path() / "nuc_test_dim_mismatch";
    fs::create_directories(dir);

    save_rgb_png(make_rgb(8, 8), dir / "a.png");
    save_instance_png(make_instance_map(8, 8), dir / "a_inst.png");
    save_class_png(make_class_map(9, 8), dir / "a_cls.png");

    ManifestEntry e;
    e.id = "a";
    e.image_path = dir / "a.png";
    e.instance_path = dir / "a_inst.png";
    e.class_path = dir / "a_cls.png";
    CHECK_THROWS_AS(load_sample(e), DimensionError);

    fs::remove_all(dir);
}
