// nuctool: stain normalization, dataset splitting, augmentation, multi-scale
// prediction fusion and evaluation for nuclei instance segmentation tiles.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nuc/augment.hpp"
#include "nuc/dataset.hpp"
#include "nuc/ensemble.hpp"
#include "nuc/errors.hpp"
#include "nuc/label_maps.hpp"
#include "nuc/metrics.hpp"
#include "nuc/parallel.hpp"
#include "nuc/png_io.hpp"
#include "nuc/rng.hpp"
#include "nuc/stain.hpp"
#include "nuc/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

struct GlobalConfig {
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = runtime default
    LogLevel log_level = LogLevel::info;
};

GlobalConfig g_cfg;

void log_info(const std::string& msg) {
    if (g_cfg.log_level >= LogLevel::info) std::cout << msg << "\n";
}

void log_warn(const std::string& msg) {
    if (g_cfg.log_level >= LogLevel::info) std::cerr << "warning: " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (g_cfg.log_level >= LogLevel::debug) std::cerr << "debug: " << msg << "\n";
}

void apply_thread_config() {
    // The only environment override: worker count.
    if (const char* env = std::getenv("NUCTOOL_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) g_cfg.threads = n;
    }
    nuc::set_thread_count(g_cfg.threads);
}

void add_global_options(CLI::App* cmd) {
    cmd->add_option("--seed", g_cfg.seed, "Seed for all randomized steps")->capture_default_str();
    cmd->add_option("--threads", g_cfg.threads, "Worker threads (0 = auto)")
        ->capture_default_str();
    std::map<std::string, LogLevel> levels{
        {"quiet", LogLevel::quiet}, {"info", LogLevel::info}, {"debug", LogLevel::debug}};
    cmd->add_option("--log-level", g_cfg.log_level, "quiet|info|debug")
        ->transform(CLI::CheckedTransformer(levels, CLI::ignore_case));
}

struct MacenkoFlags {
    nuc::MacenkoParams params;

    void attach(CLI::App* cmd) {
        cmd->add_option("--io", params.io, "Transmitted-light intensity")->capture_default_str();
        cmd->add_option("--beta", params.beta, "OD tissue floor")->capture_default_str();
        cmd->add_option("--alpha", params.alpha, "Robust angle percentile (percent)")
            ->capture_default_str();
        cmd->add_option("--max-c-percentile", params.max_c_percentile,
                        "Concentration percentile used as scale")
            ->capture_default_str();
        cmd->add_option("--min-tissue", params.min_tissue_pixels, "Minimum tissue pixels")
            ->capture_default_str();
    }
};

void write_run_manifest(const fs::path& path, const std::string& command, const json& parameters,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
    // Deliberately free of timestamps and thread counts: reruns with the
    // same seed must produce identical bytes.
    json j;
    j["tool"] = nuc::kVersion;
    j["command"] = command;
    j["seed"] = g_cfg.seed;
    j["parameters"] = parameters;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    nuc::atomic_write_text(path, j.dump(2) + "\n");
}

std::string composition_to_string(const nuc::Composition& c) {
    std::string s;
    for (int i = 0; i < nuc::kNumClasses; ++i) {
        if (i) s += ',';
        s += std::to_string(c[i]);
    }
    return s;
}

/// Sample stems in a directory, recognized by the <stem>_inst.png suffix.
std::vector<std::string> find_stems(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw nuc::IoError("not a directory: " + dir.string());
    std::set<std::string> stems;
    const std::string suffix = "_inst.png";
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            stems.insert(name.substr(0, name.size() - suffix.size()));
    }
    return {stems.begin(), stems.end()};
}

/// Runs fn(i) for i in [0, n) across the worker pool; the first failure
/// (by index) is rethrown after the loop so error reporting stays stable.
template <class Fn>
void parallel_indexed(std::int64_t n, Fn&& fn) {
    std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw nuc::IoError(e);
}

// ---------------------------------------------------------------- normalize

struct NormalizeArgs {
    std::vector<std::string> inputs;
    std::string reference_image;
    std::string reference_model;
    std::string out_dir;
    std::string save_model;
    MacenkoFlags macenko;
};

int run_normalize(const NormalizeArgs& a) {
    nuc::StainModel reference;
    if (!a.reference_model.empty()) {
        reference = nuc::load_stain_model(a.reference_model);
    } else if (!a.reference_image.empty()) {
        reference = nuc::estimate_stain_model(nuc::load_rgb_png(a.reference_image),
                                              a.macenko.params);
    } else {
        throw nuc::ConfigError("normalize needs --reference or --reference-model");
    }

    fs::create_directories(a.out_dir);
    if (!a.save_model.empty()) nuc::save_stain_model(reference, a.save_model);

    std::vector<std::string> outputs(a.inputs.size());
    parallel_indexed(static_cast<std::int64_t>(a.inputs.size()), [&](std::int64_t i) {
        const fs::path in = a.inputs[static_cast<std::size_t>(i)];
        nuc::RgbImage img = nuc::load_rgb_png(in);
        nuc::RgbImage norm = nuc::normalize_to_reference(img, a.macenko.params, reference);
        fs::path out = fs::path(a.out_dir) / (in.stem().string() + "_norm.png");
        nuc::save_rgb_png(norm, out);
        outputs[static_cast<std::size_t>(i)] = out.string();
    });

    json params;
    params["io"] = a.macenko.params.io;
    params["beta"] = a.macenko.params.beta;
    params["alpha"] = a.macenko.params.alpha;
    params["max_c_percentile"] = a.macenko.params.max_c_percentile;
    params["min_tissue_pixels"] = a.macenko.params.min_tissue_pixels;
    params["reference"] = a.reference_model.empty() ? a.reference_image : a.reference_model;
    write_run_manifest(fs::path(a.out_dir) / "run_manifest.json", "normalize", params, a.inputs,
                       outputs);
    log_info("normalized " + std::to_string(a.inputs.size()) + " image(s) into " + a.out_dir);
    return 0;
}

// -------------------------------------------------------------------- split

struct SplitArgs {
    std::string manifest;
    std::string ratios = "4:1:0.1";
    std::string out_prefix;
};

std::string balance_report(const nuc::Manifest& whole, const nuc::SplitResult& split) {
    const nuc::Manifest* parts[3] = {&split.train, &split.val, &split.test};
    const char* names[3] = {"train", "val", "test"};
    nuc::Composition global = whole.total_composition();
    std::string out;
    char buf[256];
    for (int p = 0; p < 3; ++p) {
        std::snprintf(buf, sizeof(buf), "%s entries %zu\n", names[p], parts[p]->entries.size());
        out += buf;
        nuc::Composition totals = parts[p]->total_composition();
        double share = static_cast<double>(parts[p]->entries.size()) /
                       static_cast<double>(whole.entries.size());
        for (int c = 0; c < nuc::kNumClasses; ++c) {
            double target = static_cast<double>(global[c]) * share;
            double dev =
                target > 0 ? (static_cast<double>(totals[c]) - target) / target : 0.0;
            std::snprintf(buf, sizeof(buf), "%s class %d total %lld target %.3f rel_dev %.5f\n",
                          names[p], c + 1, static_cast<long long>(totals[c]), target, dev);
            out += buf;
        }
    }
    return out;
}

int run_split(const SplitArgs& a) {
    nuc::Manifest manifest = nuc::load_manifest(a.manifest);
    nuc::SplitRatios ratios = nuc::SplitRatios::parse(a.ratios);
    nuc::SplitResult result = nuc::stratified_split(manifest, ratios, g_cfg.seed);

    nuc::save_manifest(result.train, a.out_prefix + ".train");
    nuc::save_manifest(result.val, a.out_prefix + ".val");
    nuc::save_manifest(result.test, a.out_prefix + ".test");
    nuc::atomic_write_text(a.out_prefix + ".balance.txt", balance_report(manifest, result));

    json params;
    params["ratios"] = a.ratios;
    write_run_manifest(a.out_prefix + ".run.json", "split", params, {a.manifest},
                       {a.out_prefix + ".train", a.out_prefix + ".val", a.out_prefix + ".test",
                        a.out_prefix + ".balance.txt"});
    log_info("split " + std::to_string(manifest.entries.size()) + " entries into " +
             std::to_string(result.train.entries.size()) + "/" +
             std::to_string(result.val.entries.size()) + "/" +
             std::to_string(result.test.entries.size()));
    return 0;
}

// ------------------------------------------------------------------ augment

struct AugmentArgs {
    std::string manifest;
    std::string out_dir;
    int draws = 1;
    nuc::AugmentPolicy policy;
    std::string sizes;
    std::string reference_model;
    MacenkoFlags macenko;
};

int run_augment(const AugmentArgs& a) {
    nuc::Manifest manifest = nuc::load_manifest(a.manifest);
    std::optional<nuc::StainModel> reference;
    if (!a.reference_model.empty()) reference = nuc::load_stain_model(a.reference_model);
    if (a.policy.p_stain > 0 && !reference)
        throw nuc::ConfigError("--p-stain > 0 requires --reference-model");
    if (a.draws < 1) throw nuc::ConfigError("--draws must be >= 1");

    nuc::AugmentPolicy policy = a.policy;
    if (!a.sizes.empty()) {
        policy.resize_targets.clear();
        std::istringstream in(a.sizes);
        std::string tok;
        while (std::getline(in, tok, ',')) policy.resize_targets.push_back(std::stoi(tok));
        if (policy.resize_targets.empty()) throw nuc::ConfigError("--sizes is empty");
    }

    fs::create_directories(a.out_dir);
    const std::int64_t n = static_cast<std::int64_t>(manifest.entries.size());
    const std::int64_t total = n * a.draws;
    std::vector<nuc::ManifestEntry> out_entries(static_cast<std::size_t>(total));
    std::vector<std::string> spec_lines(static_cast<std::size_t>(total));

    parallel_indexed(total, [&](std::int64_t t) {
        std::int64_t i = t / a.draws;
        std::int64_t k = t % a.draws;
        const nuc::ManifestEntry& entry = manifest.entries[static_cast<std::size_t>(i)];

        // Randomness is keyed on (seed, flat sample index): draws never
        // depend on scheduling.
        nuc::Rng stream(g_cfg.seed, static_cast<std::uint64_t>(t));
        nuc::AugmentSpec spec = nuc::sample_spec(stream.next_u64(), policy);

        nuc::LoadReport load_report;
        nuc::Sample sample = nuc::load_sample(entry, &load_report);
        if (load_report.composition_mismatch)
            log_warn(entry.id + ": cached composition disagrees with maps (" +
                     composition_to_string(load_report.recomputed) + ")");

        nuc::AugmentResult result = nuc::apply(sample, spec, reference, a.macenko.params);
        if (result.stain_skipped)
            log_warn(entry.id + ": insufficient tissue, stain normalization skipped");

        std::string new_id = entry.id;
        if (a.draws > 1) new_id += "_a" + std::to_string(k);
        new_id += "__" + spec.suffix();

        fs::path image_path = fs::path(a.out_dir) / (new_id + ".png");
        fs::path inst_path = fs::path(a.out_dir) / (new_id + "_inst.png");
        fs::path cls_path = fs::path(a.out_dir) / (new_id + "_cls.png");
        nuc::save_sample(result.sample, image_path, inst_path, cls_path);

        nuc::ManifestEntry out;
        out.id = new_id;
        out.image_path = image_path;
        out.instance_path = inst_path;
        out.class_path = cls_path;
        out.composition = nuc::composition_of_maps(result.sample.instances, result.sample.classes);
        out_entries[static_cast<std::size_t>(t)] = std::move(out);

        char line[256];
        std::snprintf(line, sizeof(line), "%s\tflip_h=%d flip_v=%d turns=%d size=%d stain=%d%s\n",
                      new_id.c_str(), spec.flip_h ? 1 : 0, spec.flip_v ? 1 : 0,
                      spec.rot90_quarter_turns, spec.target_size, spec.stain_normalize ? 1 : 0,
                      result.stain_skipped ? " (stain skipped)" : "");
        spec_lines[static_cast<std::size_t>(t)] = line;
    });

    nuc::Manifest out_manifest;
    out_manifest.entries = std::move(out_entries);
    nuc::save_manifest(out_manifest, fs::path(a.out_dir) / "manifest.tsv");
    std::string specs_text = "# id\tapplied spec\n";
    for (const auto& line : spec_lines) specs_text += line;
    nuc::atomic_write_text(fs::path(a.out_dir) / "specs.tsv", specs_text);

    json params;
    params["draws"] = a.draws;
    params["p_flip_h"] = policy.p_flip_h;
    params["p_flip_v"] = policy.p_flip_v;
    params["p_rotate"] = policy.p_rotate;
    params["p_resize"] = policy.p_resize;
    params["p_stain"] = policy.p_stain;
    params["resize_targets"] = policy.resize_targets;
    if (!a.reference_model.empty()) params["reference_model"] = a.reference_model;
    write_run_manifest(fs::path(a.out_dir) / "run_manifest.json", "augment", params, {a.manifest},
                       {(fs::path(a.out_dir) / "manifest.tsv").string(),
                        (fs::path(a.out_dir) / "specs.tsv").string()});
    log_info("augmented " + std::to_string(total) + " sample(s) into " + a.out_dir);
    return 0;
}

// ----------------------------------------------------------------- ensemble

struct EnsembleArgs {
    std::vector<std::string> preds;  // scale=dir
    double iou = 0.5;
    int min_votes = 3;
    int base = 256;
    std::string out_dir;
    std::string provenance;
};

int run_ensemble(const EnsembleArgs& a) {
    std::vector<std::pair<int, fs::path>> sources;
    for (const auto& spec : a.preds) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw nuc::ConfigError("--pred expects <scale>=<dir>, got '" + spec + "'");
        int scale = std::stoi(spec.substr(0, eq));
        sources.emplace_back(scale, fs::path(spec.substr(eq + 1)));
    }
    std::sort(sources.begin(), sources.end());

    nuc::EnsembleConfig cfg;
    cfg.base_size = a.base;
    cfg.iou_threshold = a.iou;
    cfg.min_votes = a.min_votes;
    cfg.scales.clear();
    for (const auto& [scale, dir] : sources) cfg.scales.push_back(scale);
    cfg.validate();

    std::vector<std::string> stems = find_stems(sources.front().second);
    if (stems.empty())
        throw nuc::IoError("no *_inst.png tiles in " + sources.front().second.string());
    for (const auto& [scale, dir] : sources) {
        std::vector<std::string> here = find_stems(dir);
        if (here != stems)
            throw nuc::IoError("prediction directories do not contain the same tile stems (" +
                               dir.string() + ")");
    }

    fs::create_directories(a.out_dir);
    std::vector<std::string> prov_blocks(stems.size());
    parallel_indexed(static_cast<std::int64_t>(stems.size()), [&](std::int64_t i) {
        const std::string& stem = stems[static_cast<std::size_t>(i)];
        std::vector<nuc::ScaledPrediction> preds;
        for (const auto& [scale, dir] : sources) {
            nuc::ScaledPrediction p;
            p.scale = scale;
            p.instances = nuc::load_instance_png(dir / (stem + "_inst.png"));
            p.classes = nuc::load_class_png(dir / (stem + "_cls.png"));
            preds.push_back(std::move(p));
        }
        nuc::FusedPrediction fused = nuc::fuse(preds, cfg);
        nuc::save_instance_png(fused.instances, fs::path(a.out_dir) / (stem + "_inst.png"));
        nuc::save_class_png(fused.classes, fs::path(a.out_dir) / (stem + "_cls.png"));

        std::string block;
        char buf[128];
        for (const auto& fi : fused.provenance) {
            std::snprintf(buf, sizeof(buf), "tile %s fused %u class %d pixels %lld members ",
                          stem.c_str(), fi.id, fi.cls, static_cast<long long>(fi.pixel_count));
            block += buf;
            for (std::size_t m = 0; m < fi.members.size(); ++m) {
                if (m) block += ',';
                block += std::to_string(fi.members[m].first) + ":" +
                         std::to_string(fi.members[m].second);
            }
            block += '\n';
        }
        prov_blocks[static_cast<std::size_t>(i)] = std::move(block);
    });

    if (!a.provenance.empty()) {
        std::string text;
        for (const auto& b : prov_blocks) text += b;
        nuc::atomic_write_text(a.provenance, text);
    }

    json params;
    params["iou"] = a.iou;
    params["min_votes"] = a.min_votes;
    params["base"] = a.base;
    std::vector<std::string> outputs = {a.out_dir};
    if (!a.provenance.empty()) outputs.push_back(a.provenance);
    write_run_manifest(fs::path(a.out_dir) / "run_manifest.json", "ensemble", params, a.preds,
                       outputs);
    log_info("fused " + std::to_string(stems.size()) + " tile(s) from " +
             std::to_string(sources.size()) + " scale(s)");
    return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string pred_dir;
    std::string gt_dir;
    std::string report;
    double threshold = 0.5;
};

int run_evaluate(const EvaluateArgs& a) {
    std::vector<std::string> stems = find_stems(a.gt_dir);
    if (stems.empty()) throw nuc::IoError("no *_inst.png tiles in " + a.gt_dir);

    std::vector<nuc::MatchResult> matches(stems.size());
    std::vector<nuc::Composition> pred_comps(stems.size()), gt_comps(stems.size());

    parallel_indexed(static_cast<std::int64_t>(stems.size()), [&](std::int64_t i) {
        const std::string& stem = stems[static_cast<std::size_t>(i)];
        auto pred_inst = nuc::load_instance_png(fs::path(a.pred_dir) / (stem + "_inst.png"));
        auto pred_cls = nuc::load_class_png(fs::path(a.pred_dir) / (stem + "_cls.png"));
        auto gt_inst = nuc::load_instance_png(fs::path(a.gt_dir) / (stem + "_inst.png"));
        auto gt_cls = nuc::load_class_png(fs::path(a.gt_dir) / (stem + "_cls.png"));
        matches[static_cast<std::size_t>(i)] =
            nuc::match_instances(pred_inst, pred_cls, gt_inst, gt_cls, a.threshold);
        pred_comps[static_cast<std::size_t>(i)] = nuc::composition_of_maps(pred_inst, pred_cls);
        gt_comps[static_cast<std::size_t>(i)] = nuc::composition_of_maps(gt_inst, gt_cls);
    });

    nuc::MetricsReport report = nuc::mpq(matches);
    nuc::R2Result r2 = nuc::r2_multiclass(pred_comps, gt_comps);
    report.r2 = r2.per_class;
    report.r2_mean = r2.mean;
    report.r2_defined = true;

    nuc::atomic_write_text(a.report, nuc::report_to_text(report));

    json params;
    params["threshold"] = a.threshold;
    write_run_manifest(a.report + ".run.json", "evaluate", params, {a.pred_dir, a.gt_dir},
                       {a.report});
    char buf[160];
    if (report.mpq_defined)
        std::snprintf(buf, sizeof(buf), "evaluated %zu image(s): mpq %.5f mpq_plus %.5f r2 %.5f",
                      stems.size(), report.mpq, report.mpq_plus, report.r2_mean);
    else
        std::snprintf(buf, sizeof(buf), "evaluated %zu image(s): no instances anywhere",
                      stems.size());
    log_info(buf);
    return 0;
}

// -------------------------------------------------------------------- count

struct CountArgs {
    std::string instances;
    std::string classes;
    std::string out;
};

int run_count(const CountArgs& a) {
    auto inst = nuc::load_instance_png(a.instances);
    auto cls = nuc::load_class_png(a.classes);
    auto assigned = nuc::assign_instance_classes(inst, cls);
    for (auto id : assigned.dropped_ids)
        log_warn("instance " + std::to_string(id) + " has only background-class pixels; dropped");
    nuc::Composition comp = nuc::composition(assigned.records);

    std::string text = "composition " + composition_to_string(comp) + "\ntotal " +
                       std::to_string(comp.total()) + "\n";
    if (!a.out.empty()) {
        nuc::atomic_write_text(a.out, text);
        write_run_manifest(a.out + ".run.json", "count", json::object(), {a.instances, a.classes},
                           {a.out});
    }
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nuclei tile toolkit: stain normalization, splitting, augmentation, "
                 "multi-scale fusion and evaluation"};
    app.set_version_flag("--version", nuc::kVersion);
    app.require_subcommand(1);

    NormalizeArgs normalize_args;
    auto* normalize =
        app.add_subcommand("normalize", "Macenko-normalize H&E tiles to a reference");
    normalize->add_option("--input", normalize_args.inputs, "Input RGB PNG(s)")->required();
    normalize->add_option("--reference", normalize_args.reference_image,
                          "Reference image to estimate the stain model from");
    normalize->add_option("--reference-model", normalize_args.reference_model,
                          "Reference stain model file");
    normalize->add_option("--out-dir", normalize_args.out_dir, "Output directory")->required();
    normalize->add_option("--save-model", normalize_args.save_model,
                          "Write the reference stain model here");
    normalize_args.macenko.attach(normalize);
    add_global_options(normalize);

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Stratified train/val/test split of a manifest");
    split->add_option("--manifest", split_args.manifest, "Input manifest")->required();
    split->add_option("--ratios", split_args.ratios, "Weights train:val:test")
        ->capture_default_str();
    split->add_option("--out-prefix", split_args.out_prefix, "Output prefix")->required();
    add_global_options(split);

    AugmentArgs augment_args;
    auto* augment = app.add_subcommand("augment", "Label-preserving augmentation of a manifest");
    augment->add_option("--manifest", augment_args.manifest, "Input manifest")->required();
    augment->add_option("--out-dir", augment_args.out_dir, "Output directory")->required();
    augment->add_option("--draws", augment_args.draws, "Specs drawn per sample")
        ->capture_default_str();
    augment->add_option("--p-flip-h", augment_args.policy.p_flip_h, "P(horizontal flip)")
        ->capture_default_str();
    augment->add_option("--p-flip-v", augment_args.policy.p_flip_v, "P(vertical flip)")
        ->capture_default_str();
    augment->add_option("--p-rotate", augment_args.policy.p_rotate, "P(90-degree rotation)")
        ->capture_default_str();
    augment->add_option("--p-resize", augment_args.policy.p_resize, "P(resize)")
        ->capture_default_str();
    augment->add_option("--p-stain", augment_args.policy.p_stain, "P(stain normalization)")
        ->capture_default_str();
    augment->add_option("--sizes", augment_args.sizes,
                        "Comma-separated resize targets (default 256,512,800,1024,1152)");
    augment->add_option("--reference-model", augment_args.reference_model,
                        "Stain model for normalization draws");
    augment_args.macenko.attach(augment);
    add_global_options(augment);

    EnsembleArgs ensemble_args;
    auto* ensemble = app.add_subcommand("ensemble", "Fuse per-scale instance predictions");
    ensemble->add_option("--pred", ensemble_args.preds, "<scale>=<dir>, repeat per scale")
        ->required();
    ensemble->add_option("--iou", ensemble_args.iou, "Cross-scale IoU edge threshold")
        ->capture_default_str();
    ensemble->add_option("--min-votes", ensemble_args.min_votes, "Minimum distinct scales")
        ->capture_default_str();
    ensemble->add_option("--base", ensemble_args.base, "Output side length")
        ->capture_default_str();
    ensemble->add_option("--out", ensemble_args.out_dir, "Output directory")->required();
    ensemble->add_option("--provenance", ensemble_args.provenance,
                         "Per-fused-instance source list file");
    add_global_options(ensemble);

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "Panoptic quality + composition R^2");
    evaluate->add_option("--pred", evaluate_args.pred_dir, "Prediction directory")->required();
    evaluate->add_option("--gt", evaluate_args.gt_dir, "Ground-truth directory")->required();
    evaluate->add_option("--report", evaluate_args.report, "Report file")->required();
    evaluate->add_option("--iou-threshold", evaluate_args.threshold, "Match threshold (>= 0.5)")
        ->capture_default_str();
    add_global_options(evaluate);

    CountArgs count_args;
    auto* count = app.add_subcommand("count", "Cellular composition of one tile");
    count->add_option("--instances", count_args.instances, "Instance map PNG")->required();
    count->add_option("--classes", count_args.classes, "Class map PNG")->required();
    count->add_option("--out", count_args.out, "Also write the report here");
    add_global_options(count);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    apply_thread_config();
    log_debug("workers: " + std::to_string(nuc::thread_count()));

    try {
        if (normalize->parsed()) return run_normalize(normalize_args);
        if (split->parsed()) return run_split(split_args);
        if (augment->parsed()) return run_augment(augment_args);
        if (ensemble->parsed()) return run_ensemble(ensemble_args);
        if (evaluate->parsed()) return run_evaluate(evaluate_args);
        if (count->parsed()) return run_count(count_args);
    } catch (const nuc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
