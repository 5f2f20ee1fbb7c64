#include "nuc/label_maps.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "nuc/errors.hpp"

namespace nuc {

namespace {

// Union-find over pixel indices.
struct Dsu {
    std::vector<std::int64_t> parent;

    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::int64_t find(std::int64_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void merge(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

}  // namespace

InstanceMap connected_components(const BinaryMask& mask) {
    if (mask.width <= 0 || mask.height <= 0) throw DimensionError("mask dimensions must be positive");
    const int w = mask.width, h = mask.height;
    const auto& v = mask.values;
    if (v.size() != static_cast<std::size_t>(w) * h)
        throw DimensionError("mask buffer size does not match dimensions");

    Dsu dsu(v.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t i = static_cast<std::int64_t>(y) * w + x;
            if (!v[i]) continue;
            // Merge with the already-visited half of the 8-neighbourhood.
            if (x > 0 && v[i - 1]) dsu.merge(i, i - 1);
            if (y > 0) {
                std::int64_t up = i - w;
                if (v[up]) dsu.merge(i, up);
                if (x > 0 && v[up - 1]) dsu.merge(i, up - 1);
                if (x < w - 1 && v[up + 1]) dsu.merge(i, up + 1);
            }
        }
    }

    InstanceMap out = make_instance_map(w, h);
    std::unordered_map<std::int64_t, std::uint32_t> root_id;
    std::uint32_t next = 1;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i]) continue;
        std::int64_t r = dsu.find(static_cast<std::int64_t>(i));
        auto [it, inserted] = root_id.try_emplace(r, next);
        if (inserted) ++next;
        out.labels[i] = it->second;
    }
    return out;
}

InstanceMap relabel_sequential(const InstanceMap& m) {
    InstanceMap out = m;
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    std::uint32_t next = 1;
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        std::uint32_t id = m.labels[i];
        if (id == 0) continue;
        auto [it, inserted] = remap.try_emplace(id, next);
        if (inserted) ++next;
        out.labels[i] = it->second;
    }
    return out;
}

double instance_iou(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    if (a.empty() && b.empty()) throw UndefinedInputError("IoU of two empty pixel sets");
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

ClassAssignment assign_instance_classes(const InstanceMap& inst, const ClassMap& cls) {
    require_same_dims(inst, cls, "instance map vs class map");

    struct Acc {
        std::int64_t pixels = 0;
        int min_x, min_y, max_x, max_y;
        std::array<std::int64_t, kNumClasses> hist{};
        bool seen = false;
    };
    std::map<std::uint32_t, Acc> acc;  // ordered by id

    for (int y = 0; y < inst.height; ++y) {
        for (int x = 0; x < inst.width; ++x) {
            std::uint32_t id = inst.at(x, y);
            if (id == 0) continue;
            Acc& a = acc[id];
            if (!a.seen) {
                a.seen = true;
                a.min_x = a.max_x = x;
                a.min_y = a.max_y = y;
            } else {
                a.min_x = std::min(a.min_x, x);
                a.max_x = std::max(a.max_x, x);
                a.min_y = std::min(a.min_y, y);
                a.max_y = std::max(a.max_y, y);
            }
            a.pixels += 1;
            int c = cls.at(x, y);
            if (c > 0) a.hist[c - 1] += 1;
        }
    }

    ClassAssignment result;
    for (const auto& [id, a] : acc) {
        int best = 0;
        std::int64_t best_n = 0;
        for (int c = 0; c < kNumClasses; ++c) {
            if (a.hist[c] > best_n) {  // strict: ties keep the smaller class id
                best_n = a.hist[c];
                best = c + 1;
            }
        }
        if (best == 0) {
            result.dropped_ids.push_back(id);
            continue;
        }
        result.records.push_back(
            InstanceRecord{id, a.pixels, a.min_x, a.min_y, a.max_x, a.max_y, best});
    }
    return result;
}

Composition composition(std::span<const InstanceRecord> records) {
    Composition comp;
    for (const auto& r : records) {
        if (r.cls < 1 || r.cls > kNumClasses) throw ValueRangeError("instance record class outside 1..6");
        comp[r.cls - 1] += 1;
    }
    return comp;
}

Composition composition_of_maps(const InstanceMap& inst, const ClassMap& cls) {
    auto assigned = assign_instance_classes(inst, cls);
    return composition(assigned.records);
}

}  // namespace nuc
