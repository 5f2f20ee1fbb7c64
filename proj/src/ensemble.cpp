#include "nuc/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "nuc/errors.hpp"
#include "nuc/kernels.hpp"
#include "nuc/label_maps.hpp"

namespace nuc {

void ScaledPrediction::validate() const {
    if (scale <= 0) throw DimensionError("prediction scale must be positive");
    if (instances.width != scale || instances.height != scale)
        throw DimensionError("instance map must be square with side = scale");
    require_same_dims(instances, classes, "instance map vs class map");
    validate_class_map(classes);
}

void EnsembleConfig::validate() const {
    if (base_size <= 0) throw ConfigError("base size must be positive");
    if (iou_threshold <= 0 || iou_threshold > 1) throw ConfigError("iou threshold must be in (0,1]");
    if (min_votes < 1) throw ConfigError("min_votes must be >= 1");
    if (!scales.empty()) {
        if (static_cast<std::size_t>(min_votes) > scales.size())
            throw ConfigError("min_votes exceeds the number of scales");
        std::unordered_set<int> distinct(scales.begin(), scales.end());
        if (distinct.size() != scales.size()) throw ConfigError("scales must be distinct");
    }
}

ScaledPrediction rescale_prediction(const ScaledPrediction& p, int base,
                                    std::vector<std::uint32_t>* vanished) {
    p.validate();
    if (base <= 0) throw DimensionError("base size must be positive");
    ScaledPrediction out;
    out.scale = base;
    out.instances = kernels::resize_nearest(p.instances, base, base);
    out.classes = kernels::resize_nearest(p.classes, base, base);
    if (vanished) {
        std::unordered_set<std::uint32_t> before(p.instances.labels.begin(),
                                                 p.instances.labels.end());
        std::unordered_set<std::uint32_t> after(out.instances.labels.begin(),
                                                out.instances.labels.end());
        for (std::uint32_t id : before)
            if (id != 0 && !after.count(id)) vanished->push_back(id);
        std::sort(vanished->begin(), vanished->end());
    }
    return out;
}

namespace {

struct Node {
    int scale = 0;            // source scale value (order-free identity)
    std::uint32_t src_id = 0;
    int cls = 0;
    std::int64_t area = 0;    // pixels at base resolution
    int cluster = -1;
};

struct NodeDsu {
    std::vector<int> parent;
    explicit NodeDsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Cluster {
    std::vector<int> nodes;
    int cls = 0;
    int member_count = 0;
    int majority = 0;
    std::int64_t pre_pixel = -1;  // first pixel of the pre-contest majority mask
    std::int64_t pre_size = 0;
    std::int64_t won = 0;
    std::vector<std::pair<int, std::uint32_t>> signature;  // sorted (scale, src id)
    std::uint32_t final_id = 0;
};

}  // namespace

FusedPrediction fuse(const std::vector<ScaledPrediction>& preds, const EnsembleConfig& cfg) {
    cfg.validate();
    if (preds.empty()) throw ConfigError("ensemble needs at least one prediction");
    {
        std::unordered_set<int> distinct;
        for (const auto& p : preds)
            if (!distinct.insert(p.scale).second)
                throw ConfigError("duplicate prediction scale " + std::to_string(p.scale));
    }
    if (static_cast<std::size_t>(cfg.min_votes) > preds.size())
        throw ConfigError("min_votes exceeds the number of predictions");

    const int base = cfg.base_size;
    const std::size_t npx = static_cast<std::size_t>(base) * base;
    const int ns = static_cast<int>(preds.size());

    std::vector<ScaledPrediction> scaled(ns);
    for (int s = 0; s < ns; ++s) scaled[s] = rescale_prediction(preds[s], base);

    // Node registry: one node per surviving instance per scale.
    std::vector<Node> nodes;
    std::vector<std::unordered_map<std::uint32_t, int>> node_of(ns);
    for (int s = 0; s < ns; ++s) {
        auto assigned = assign_instance_classes(scaled[s].instances, scaled[s].classes);
        for (const auto& rec : assigned.records) {
            Node n;
            n.scale = preds[s].scale;
            n.src_id = rec.id;
            n.cls = rec.cls;
            n.area = rec.pixel_count;
            node_of[s].emplace(rec.id, static_cast<int>(nodes.size()));
            nodes.push_back(n);
        }
        // Instances with only background-class pixels carry no class vote
        // and stay out of the graph.
    }

    // Cross-scale pairwise intersections in one sweep.
    std::unordered_map<std::uint64_t, std::int64_t> inter;
    std::vector<int> present;
    present.reserve(ns);
    for (std::size_t p = 0; p < npx; ++p) {
        present.clear();
        for (int s = 0; s < ns; ++s) {
            std::uint32_t id = scaled[s].instances.labels[p];
            if (id == 0) continue;
            auto it = node_of[s].find(id);
            if (it != node_of[s].end()) present.push_back(it->second);
        }
        for (std::size_t a = 0; a < present.size(); ++a)
            for (std::size_t b = a + 1; b < present.size(); ++b) {
                int lo = std::min(present[a], present[b]);
                int hi = std::max(present[a], present[b]);
                inter[static_cast<std::uint64_t>(lo) * nodes.size() + hi] += 1;
            }
    }

    NodeDsu dsu(nodes.size());
    for (const auto& [key, cnt] : inter) {
        int a = static_cast<int>(key / nodes.size());
        int b = static_cast<int>(key % nodes.size());
        double iou = static_cast<double>(cnt) / static_cast<double>(nodes[a].area + nodes[b].area - cnt);
        if (iou >= cfg.iou_threshold) dsu.merge(a, b);
    }

    // Group nodes into clusters and apply the scale-vote gate.
    std::unordered_map<int, int> cluster_of_root;
    std::vector<Cluster> clusters;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        int root = dsu.find(i);
        auto [it, inserted] = cluster_of_root.try_emplace(root, static_cast<int>(clusters.size()));
        if (inserted) clusters.emplace_back();
        clusters[it->second].nodes.push_back(i);
    }

    std::vector<int> kept;
    for (int c = 0; c < static_cast<int>(clusters.size()); ++c) {
        Cluster& cl = clusters[c];
        std::unordered_set<int> scales_seen;
        for (int n : cl.nodes) scales_seen.insert(nodes[n].scale);
        if (static_cast<int>(scales_seen.size()) < cfg.min_votes) continue;
        cl.member_count = static_cast<int>(cl.nodes.size());
        cl.majority = (cl.member_count + 1) / 2;
        std::array<int, kNumClasses> hist{};
        for (int n : cl.nodes) hist[nodes[n].cls - 1] += 1;
        int best = 1, best_n = hist[0];
        for (int k = 1; k < kNumClasses; ++k)
            if (hist[k] > best_n) {
                best_n = hist[k];
                best = k + 1;
            }
        cl.cls = best;
        for (int n : cl.nodes) cl.signature.emplace_back(nodes[n].scale, nodes[n].src_id);
        std::sort(cl.signature.begin(), cl.signature.end());
        for (int n : cl.nodes) nodes[n].cluster = c;
        kept.push_back(c);
    }

    // Pass A: pre-contest majority masks (first pixel + size per cluster).
    std::vector<std::pair<int, int>> votes;  // (cluster, count) at one pixel
    for (std::size_t p = 0; p < npx; ++p) {
        votes.clear();
        for (int s = 0; s < ns; ++s) {
            std::uint32_t id = scaled[s].instances.labels[p];
            if (id == 0) continue;
            auto it = node_of[s].find(id);
            if (it == node_of[s].end()) continue;
            int c = nodes[it->second].cluster;
            if (c < 0) continue;
            bool found = false;
            for (auto& v : votes)
                if (v.first == c) {
                    v.second += 1;
                    found = true;
                    break;
                }
            if (!found) votes.emplace_back(c, 1);
        }
        for (const auto& [c, cnt] : votes) {
            Cluster& cl = clusters[c];
            if (cnt >= cl.majority) {
                if (cl.pre_pixel < 0) cl.pre_pixel = static_cast<std::int64_t>(p);
                cl.pre_size += 1;
            }
        }
    }

    // Preliminary ids: row-major first-pixel order with order-free tiebreaks.
    std::vector<int> order;
    for (int c : kept)
        if (clusters[c].pre_size > 0) order.push_back(c);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Cluster& ca = clusters[a];
        const Cluster& cb = clusters[b];
        if (ca.pre_pixel != cb.pre_pixel) return ca.pre_pixel < cb.pre_pixel;
        if (ca.pre_size != cb.pre_size) return ca.pre_size > cb.pre_size;
        if (ca.cls != cb.cls) return ca.cls < cb.cls;
        if (ca.member_count != cb.member_count) return ca.member_count > cb.member_count;
        return ca.signature < cb.signature;
    });
    std::vector<int> prelim(clusters.size(), -1);
    for (int i = 0; i < static_cast<int>(order.size()); ++i) prelim[order[i]] = i;

    // Pass B: contested pixels go to the cluster with more votes there,
    // then to the larger cluster, then to the smaller preliminary id.
    InstanceMap fused_inst = make_instance_map(base, base);
    ClassMap fused_cls = make_class_map(base, base);
    std::vector<std::int64_t> owner(npx, -1);
    for (std::size_t p = 0; p < npx; ++p) {
        votes.clear();
        for (int s = 0; s < ns; ++s) {
            std::uint32_t id = scaled[s].instances.labels[p];
            if (id == 0) continue;
            auto it = node_of[s].find(id);
            if (it == node_of[s].end()) continue;
            int c = nodes[it->second].cluster;
            if (c < 0 || prelim[c] < 0) continue;
            bool found = false;
            for (auto& v : votes)
                if (v.first == c) {
                    v.second += 1;
                    found = true;
                    break;
                }
            if (!found) votes.emplace_back(c, 1);
        }
        int win = -1, win_votes = 0;
        for (const auto& [c, cnt] : votes) {
            const Cluster& cl = clusters[c];
            if (cnt < cl.majority) continue;
            if (win < 0) {
                win = c;
                win_votes = cnt;
                continue;
            }
            const Cluster& cw = clusters[win];
            if (cnt > win_votes ||
                (cnt == win_votes && (cl.member_count > cw.member_count ||
                                      (cl.member_count == cw.member_count &&
                                       prelim[c] < prelim[win])))) {
                win = c;
                win_votes = cnt;
            }
        }
        if (win >= 0) {
            owner[p] = win;
            clusters[win].won += 1;
        }
    }

    // Drop clusters that lost every pixel, then relabel survivors 1..K.
    std::uint32_t next_id = 1;
    for (int c : order)
        if (clusters[c].won > 0) clusters[c].final_id = next_id++;

    FusedPrediction out;
    out.instances = std::move(fused_inst);
    out.classes = std::move(fused_cls);
    for (std::size_t p = 0; p < npx; ++p) {
        if (owner[p] < 0) continue;
        const Cluster& cl = clusters[static_cast<std::size_t>(owner[p])];
        out.instances.labels[p] = cl.final_id;
        out.classes.labels[p] = static_cast<std::uint8_t>(cl.cls);
    }
    for (int c : order) {
        const Cluster& cl = clusters[c];
        if (cl.won == 0) continue;
        FusedInstance fi;
        fi.id = cl.final_id;
        fi.cls = cl.cls;
        fi.pixel_count = cl.won;
        fi.members = cl.signature;
        out.provenance.push_back(std::move(fi));
    }
    return out;
}

}  // namespace nuc
