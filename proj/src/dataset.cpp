#include "nuc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "nuc/errors.hpp"
#include "nuc/label_maps.hpp"
#include "nuc/png_io.hpp"
#include "nuc/rng.hpp"

namespace nuc {

Composition Manifest::total_composition() const {
    Composition total;
    for (const auto& e : entries)
        for (int c = 0; c < kNumClasses; ++c) total[c] += e.composition[c];
    return total;
}

void SplitRatios::validate() const {
    if (train <= 0 || val <= 0 || test <= 0) throw ConfigError("split ratios must be positive");
}

SplitRatios SplitRatios::parse(const std::string& s) {
    SplitRatios r;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(s);
    if (!(in >> r.train >> sep1 >> r.val >> sep2 >> r.test) || sep1 != ':' || sep2 != ':')
        throw ConfigError("ratios must look like 4:1:0.1");
    std::string rest;
    if (in >> rest) throw ConfigError("ratios must look like 4:1:0.1");
    r.validate();
    return r;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
    r.validate();
    std::array<double, 3> w = {r.train, r.val, r.test};
    double total = w[0] + w[1] + w[2];
    std::array<double, 3> quota;
    for (int i = 0; i < 3; ++i) {
        double share = std::round(w[i] / total * 1000.0) / 1000.0;
        quota[i] = share * static_cast<double>(n);
    }
    std::array<std::size_t, 3> sizes;
    std::array<double, 3> rem;
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        sizes[i] = static_cast<std::size_t>(quota[i]);
        rem[i] = quota[i] - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int k = 0; assigned < n; ++k) {
        sizes[order[k % 3]] += 1;
        ++assigned;
    }
    while (assigned > n) {  // rounded shares can overshoot slightly
        int k = order[2];
        for (int i = 2; i >= 0; --i)
            if (sizes[order[i]] > 0) {
                k = order[i];
                break;
            }
        sizes[k] -= 1;
        --assigned;
    }
    return sizes;
}

SplitResult stratified_split(const Manifest& m, const SplitRatios& r, std::uint64_t seed) {
    r.validate();
    const std::size_t n = m.entries.size();
    if (n < 3) throw ConfigError("need at least 3 entries to split three ways");

    std::array<std::size_t, 3> caps = split_sizes(n, r);
    Composition global = m.total_composition();

    // Per-partition per-class targets, proportional to the integer sizes.
    std::array<std::array<double, kNumClasses>, 3> target{};
    for (int p = 0; p < 3; ++p)
        for (int c = 0; c < kNumClasses; ++c)
            target[p][c] = static_cast<double>(global[c]) *
                           (static_cast<double>(caps[p]) / static_cast<double>(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    // Stage 1: paced greedy. Each partition may only run one sample ahead
    // of its proportional pace, and within the eligible set a sample goes
    // to the partition whose per-class deficits it covers best. Pacing
    // alone cannot steer the smallest partition's class mix, so stage 2
    // refines with swaps.
    std::array<std::array<double, kNumClasses>, 3> running{};
    std::array<std::size_t, 3> used{};
    std::vector<int> where(n, -1);

    std::size_t assigned = 0;
    for (std::size_t idx : order) {
        const Composition& comp = m.entries[idx].composition;
        double frac = static_cast<double>(assigned + 1) / static_cast<double>(n);
        int best = -1;
        double best_score = 0;
        for (int pass = 0; pass < 2 && best < 0; ++pass) {
            for (int p = 0; p < 3; ++p) {
                if (used[p] >= caps[p]) continue;
                if (pass == 0 &&
                    used[p] >= static_cast<std::size_t>(static_cast<double>(caps[p]) * frac) + 1)
                    continue;  // ahead of pace
                double score = 0;
                for (int c = 0; c < kNumClasses; ++c)
                    score -= (target[p][c] * frac - running[p][c]) /
                             std::max(target[p][c], 1.0) * static_cast<double>(comp[c]);
                if (best < 0 || score < best_score) {
                    best = p;
                    best_score = score;
                }
            }
        }
        // Caps sum to n, so a slot always exists.
        where[idx] = best;
        used[best] += 1;
        ++assigned;
        for (int c = 0; c < kNumClasses; ++c) running[best][c] += static_cast<double>(comp[c]);
    }

    // Stage 2: first-improvement swaps between partitions, minimizing the
    // sum of squared relative deviations from the per-class targets. Scan
    // order is fixed, so the result stays deterministic.
    std::array<std::array<double, kNumClasses>, 3> dev{};
    auto recompute_dev = [&] {
        for (int p = 0; p < 3; ++p)
            for (int c = 0; c < kNumClasses; ++c)
                dev[p][c] = (running[p][c] - target[p][c]) / std::max(target[p][c], 1.0);
    };
    recompute_dev();
    for (int pass = 0; pass < 12; ++pass) {
        bool improved = false;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                for (std::size_t a = 0; a < n; ++a) {
                    if (where[a] != p) continue;
                    for (std::size_t b = 0; b < n; ++b) {
                        if (where[b] != q) continue;
                        double delta = 0;
                        for (int c = 0; c < kNumClasses; ++c) {
                            double d = static_cast<double>(m.entries[b].composition[c] -
                                                           m.entries[a].composition[c]);
                            if (d == 0) continue;
                            double tp = std::max(target[p][c], 1.0);
                            double tq = std::max(target[q][c], 1.0);
                            double np = dev[p][c] + d / tp;
                            double nq = dev[q][c] - d / tq;
                            delta += np * np - dev[p][c] * dev[p][c];
                            delta += nq * nq - dev[q][c] * dev[q][c];
                        }
                        if (delta < -1e-12) {
                            where[a] = q;
                            where[b] = p;
                            for (int c = 0; c < kNumClasses; ++c) {
                                double d = static_cast<double>(m.entries[b].composition[c] -
                                                               m.entries[a].composition[c]);
                                running[p][c] += d;
                                running[q][c] -= d;
                            }
                            recompute_dev();
                            improved = true;
                            break;  // entry a changed partition; move on
                        }
                    }
                }
            }
        }
        if (!improved) break;
    }

    SplitResult result;
    Manifest* outs[3] = {&result.train, &result.val, &result.test};
    for (std::size_t idx = 0; idx < n; ++idx)
        outs[where[idx]]->entries.push_back(m.entries[idx]);  // manifest order
    return result;
}

std::string manifest_to_text(const Manifest& m) {
    std::ostringstream out;
    out << "# id\timage\tinstances\tclasses\tcounts\n";
    for (const auto& e : m.entries) {
        out << e.id << '\t' << e.image_path.string() << '\t' << e.instance_path.string() << '\t'
            << e.class_path.string() << '\t';
        for (int c = 0; c < kNumClasses; ++c) {
            if (c) out << ',';
            out << e.composition[c];
        }
        out << '\n';
    }
    return out.str();
}

Manifest manifest_from_text(const std::string& text) {
    Manifest m;
    std::unordered_set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5)
            throw IoError("manifest line " + std::to_string(lineno) + ": expected 5 fields");
        ManifestEntry e;
        e.id = fields[0];
        if (!seen.insert(e.id).second)
            throw IoError("manifest: duplicate sample id '" + e.id + "'");
        e.image_path = fields[1];
        e.instance_path = fields[2];
        e.class_path = fields[3];
        std::istringstream counts(fields[4]);
        for (int c = 0; c < kNumClasses; ++c) {
            std::int64_t v;
            char comma;
            if (!(counts >> v) || v < 0)
                throw IoError("manifest line " + std::to_string(lineno) + ": bad counts");
            if (c + 1 < kNumClasses && !(counts >> comma))
                throw IoError("manifest line " + std::to_string(lineno) + ": bad counts");
            e.composition[c] = v;
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    atomic_write_text(path, manifest_to_text(m));
}

Manifest load_manifest(const std::filesystem::path& path) {
    return manifest_from_text(read_text_file(path));
}

Sample load_sample(const ManifestEntry& entry, LoadReport* report) {
    Sample s;
    s.image = load_rgb_png(entry.image_path);
    s.instances = load_instance_png(entry.instance_path);
    s.classes = load_class_png(entry.class_path);
    require_same_dims(s.image, s.instances, "image vs instance map");
    require_same_dims(s.image, s.classes, "image vs class map");
    if (report) {
        report->recomputed = composition_of_maps(s.instances, s.classes);
        report->composition_mismatch = !(report->recomputed == entry.composition);
    }
    return s;
}

void save_sample(const Sample& sample, const std::filesystem::path& image_path,
                 const std::filesystem::path& instance_path,
                 const std::filesystem::path& class_path) {
    require_same_dims(sample.image, sample.instances, "image vs instance map");
    require_same_dims(sample.image, sample.classes, "image vs class map");
    save_rgb_png(sample.image, image_path);
    save_instance_png(sample.instances, instance_path);
    save_class_png(sample.classes, class_path);
}

}  // namespace nuc
