#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "nuc/image.hpp"

namespace nuc {

struct ManifestEntry {
    std::string id;
    std::filesystem::path image_path;
    std::filesystem::path instance_path;
    std::filesystem::path class_path;
    Composition composition;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    Composition total_composition() const;
};

struct SplitRatios {
    double train = 4.0;
    double val = 1.0;
    double test = 0.1;

    void validate() const;
    /// Parses "4:1:0.1".
    static SplitRatios parse(const std::string& s);
};

struct SplitResult {
    Manifest train, val, test;
};

/// Integer partition sizes for n entries: ratio shares are rounded to
/// three decimals (the "roughly" in 4:1:0.1), then seats are assigned by
/// largest remainder. Deterministic; ties resolve train < val < test.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r);

/// Seeded greedy stratified split: entries are visited in seeded-random
/// order and each goes to the partition (with free capacity) whose
/// per-class totals after the assignment sit closest (L1) to that
/// partition's share of the global totals.
SplitResult stratified_split(const Manifest& m, const SplitRatios& r, std::uint64_t seed);

// Manifest text format: one tab-separated record per line,
//   id <TAB> image <TAB> instances <TAB> classes <TAB> c1,c2,c3,c4,c5,c6
// Lines starting with '#' are comments.
std::string manifest_to_text(const Manifest& m);
Manifest manifest_from_text(const std::string& text);
void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

struct LoadReport {
    bool composition_mismatch = false;  // cached counts disagreed with the maps
    Composition recomputed;
};

/// Loads the three layers of a sample and cross-checks the cached
/// composition; a mismatch is reported, not fatal.
Sample load_sample(const ManifestEntry& entry, LoadReport* report = nullptr);

void save_sample(const Sample& sample, const std::filesystem::path& image_path,
                 const std::filesystem::path& instance_path,
                 const std::filesystem::path& class_path);

}  // namespace nuc
