// scd: scene change detection command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scd/json_util.hpp"
#include "scd/pipeline.hpp"
#include "scd/ply.hpp"
#include "scd/png_io.hpp"
#include "scd/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kStageFailure = 1;
constexpr int kUsage = 2;

struct Globals {
    std::string config;
    std::string out;
    int jobs = 1;
    std::string log_level = "info";
};

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw scd::ValidationError(std::string(what) + ": not a number: \"" + item + "\"");
        }
    }
    if (out.empty()) throw scd::ValidationError(std::string(what) + ": empty list");
    return out;
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

fs::path out_or(const Globals& g, const char* fallback) { return g.out.empty() ? fs::path(fallback) : fs::path(g.out); }

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene change detection between a reference scan and a rescan"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "pipeline configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output file or directory");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    // Per-stage overrides; unset ones leave the config value alone.
    std::string manifest;
    std::optional<double> tau, voxel, seed_res, depth_tol, lambda, p_seed, splat_radius;
    std::string policy, sources, baseline, iou, ks, scan, graph_path, assign_path, seeds_path, labels_path;
    std::string pred_path, gt_path, spec_path, preset, param, values;

    auto* render = app.add_subcommand("render", "render depth maps of a scan from the manifest views");
    render->add_option("--manifest", manifest, "scene manifest")->required();
    render->add_option("--scan", scan, "PLY to render; default renders both scans");
    render->add_option("--out-dir", g.out, "output directory");
    render->add_option("--splat-radius", splat_radius, "point splat radius in pixels");

    auto* seed = app.add_subcommand("seed", "render-and-compare seed detection");
    seed->add_option("--manifest", manifest, "scene manifest")->required();
    seed->add_option("--tau", tau, "fixed residual threshold (m)");
    seed->add_option("--policy", policy, "fixed|mad")->check(CLI::IsMember({"fixed", "mad"}));

    auto* supervoxel = app.add_subcommand("supervoxel", "supervoxel graph of the rescan");
    supervoxel->add_option("--manifest", manifest, "scene manifest")->required();
    supervoxel->add_option("--voxel", voxel, "voxel resolution (m)");
    supervoxel->add_option("--seed-res", seed_res, "seed resolution (m)");

    auto* assign = app.add_subcommand("assign", "project 2D masks onto the supervoxel graph");
    assign->add_option("--manifest", manifest, "scene manifest")->required();
    assign->add_option("--graph", graph_path, "graph.json")->required()->check(CLI::ExistingFile);
    assign->add_option("--sources", sources, "comma separated mask sources");
    assign->add_option("--depth-tol", depth_tol, "occlusion tolerance (m)");

    auto* optimize = app.add_subcommand("optimize", "graph-cut propagation of change labels");
    optimize->add_option("--graph", graph_path, "graph.json")->required()->check(CLI::ExistingFile);
    optimize->add_option("--assignments", assign_path, "assignments.json")->required()->check(CLI::ExistingFile);
    optimize->add_option("--seeds", seeds_path, "seeds.json")->required()->check(CLI::ExistingFile);
    optimize->add_option("--lambda", lambda, "penalty weight");
    optimize->add_option("--p-seed", p_seed, "prior on seeded supervoxels");
    optimize->add_option("--baseline", baseline, "none|seeds-only")->check(CLI::IsMember({"none", "seeds-only"}));

    auto* detect = app.add_subcommand("detect", "connected components of changed points");
    detect->add_option("--manifest", manifest, "scene manifest")->required();
    detect->add_option("--graph", graph_path, "graph.json")->required()->check(CLI::ExistingFile);
    detect->add_option("--labels", labels_path, "labels.json")->required()->check(CLI::ExistingFile);
    detect->add_option("--seeds", seeds_path, "seeds.json")->required()->check(CLI::ExistingFile);

    auto* eval = app.add_subcommand("eval", "score detections against ground truth");
    eval->add_option("--pred", pred_path, "detections.json")->required()->check(CLI::ExistingFile);
    eval->add_option("--gt", gt_path, "ground_truth.json")->required()->check(CLI::ExistingFile);
    eval->add_option("--ks", ks, "IoU thresholds, e.g. 0.20,0.25,0.50");
    eval->add_option("--iou", iou, "point|box")->check(CLI::IsMember({"point", "box"}));
    eval->add_option("--manifest", manifest, "scene manifest (box IoU needs the rescan)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene pair");
    synth->add_option("--spec", spec_path, "scene spec JSON")->check(CLI::ExistingFile);
    synth->add_option("--preset", preset, "moved|slid|unchanged")
        ->check(CLI::IsMember({"moved", "slid", "unchanged"}));

    auto* run = app.add_subcommand("run", "full pipeline");
    run->add_option("--manifest", manifest, "scene manifest")->required();
    run->add_option("--baseline", baseline, "none|seeds-only")->check(CLI::IsMember({"none", "seeds-only"}));
    run->add_option("--lambda", lambda, "penalty weight");
    run->add_option("--p-seed", p_seed, "prior on seeded supervoxels");
    run->add_option("--tau", tau, "fixed residual threshold (m)");
    run->add_option("--sources", sources, "comma separated mask sources");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep");
    sweep->add_option("--manifest", manifest, "scene manifest")->required();
    sweep->add_option("--param", param, "lambda|p_seed|tau")->required()->check(CLI::IsMember({"lambda", "p_seed", "tau"}));
    sweep->add_option("--values", values, "comma separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto logger = spdlog::stderr_color_st("scd");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    scd::PipelineConfig cfg;
    scd::Scene scene;
    try {
        if (!g.config.empty()) cfg = scd::load_config(g.config);
        if (tau) cfg.threshold.tau_fixed = *tau;
        if (policy == "mad") cfg.threshold.mode = scd::ThresholdMode::RobustMad;
        if (policy == "fixed") cfg.threshold.mode = scd::ThresholdMode::Fixed;
        if (voxel) cfg.supervoxel.voxel_resolution = *voxel;
        if (seed_res) cfg.supervoxel.seed_resolution = *seed_res;
        if (depth_tol) cfg.depth_tol = *depth_tol;
        if (!sources.empty()) cfg.sources = split_names(sources);
        if (lambda) cfg.lambda = *lambda;
        if (p_seed) cfg.p_seed = *p_seed;
        if (splat_radius) cfg.render.splat_radius_px = static_cast<int>(*splat_radius);
        if (baseline == "seeds-only") cfg.baseline = scd::Baseline::SeedsOnly;
        if (baseline == "none") cfg.baseline = scd::Baseline::None;
        if (iou == "box") cfg.iou_mode = scd::IouMode::Box;
        if (iou == "point") cfg.iou_mode = scd::IouMode::Point;
        if (!ks.empty()) cfg.eval_ks = parse_list(ks, "--ks");
        cfg.validate();
        if (!manifest.empty()) scene = scd::load_scene(manifest);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    }

    try {
        if (*render) {
            const fs::path dir = out_or(g, "render");
            std::vector<std::pair<std::string, scd::ScanGeometry>> scans;
            if (!scan.empty()) {
                scans.emplace_back("", scd::load_scan(scan));
            } else {
                scans.emplace_back("reference", scene.reference);
                scans.emplace_back("rescan", scene.rescan);
            }
            for (const auto& [name, geom] : scans) {
                const fs::path sub = name.empty() ? dir : dir / name;
                fs::create_directories(sub);
                const auto depth = scd::render_views(geom, scene.views, cfg.render, g.jobs);
                for (std::size_t i = 0; i < depth.size(); ++i) {
                    char file[32];
                    std::snprintf(file, sizeof file, "view_%03zu.png", i);
                    scd::save_depth(sub / file, depth[i], scene.manifest.depth_scale);
                }
            }
        } else if (*seed) {
            const fs::path out = out_or(g, "seeds.json");
            ensure_parent(out);
            const auto seeds = scd::detect_seeds(scene, cfg, g.jobs);
            scd::write_json(out, scd::seeds_to_json(seeds));
            spdlog::info("{} seed points -> {}", seeds.size(), out.string());
        } else if (*supervoxel) {
            const fs::path out = out_or(g, "graph.json");
            ensure_parent(out);
            scd::write_json(out, scd::graph_to_json(scd::build_graph(scene, cfg)));
        } else if (*assign) {
            const fs::path out = out_or(g, "assignments.json");
            ensure_parent(out);
            const auto graph = scd::graph_from_json(scd::read_json(graph_path));
            if (graph.assignment.size() != scene.rescan.cloud.size()) {
                spdlog::error("{}: graph does not match the rescan", graph_path);
                return kUsage;
            }
            scd::write_json(out, scd::assignments_to_json(scd::assign_masks(scene, graph, cfg, g.jobs)));
        } else if (*optimize) {
            const fs::path out = out_or(g, "labels.json");
            ensure_parent(out);
            const auto graph = scd::graph_from_json(scd::read_json(graph_path));
            const auto assignments = scd::assignments_from_json(scd::read_json(assign_path));
            const auto seeds = scd::seeds_from_json(scd::read_json(seeds_path));
            scd::write_json(out, scd::labels_to_json(scd::optimize(graph, assignments, seeds, cfg)));
        } else if (*detect) {
            const fs::path out = out_or(g, "detections.json");
            ensure_parent(out);
            const auto graph = scd::graph_from_json(scd::read_json(graph_path));
            const auto labels = scd::labels_from_json(scd::read_json(labels_path));
            const auto seeds = scd::seeds_from_json(scd::read_json(seeds_path));
            if (graph.assignment.size() != scene.rescan.cloud.size()) {
                spdlog::error("{}: graph does not match the rescan", graph_path);
                return kUsage;
            }
            const auto dets = scd::detect(graph, labels, seeds, scene.rescan.cloud, cfg);
            scd::save_detections(out, dets);
            spdlog::info("{} detections -> {}", dets.size(), out.string());
        } else if (*eval) {
            const scd::PointCloud* cloud = manifest.empty() ? nullptr : &scene.rescan.cloud;
            if (cfg.iou_mode == scd::IouMode::Box && !cloud) {
                spdlog::error("--iou box needs --manifest");
                return kUsage;
            }
            const auto dets = scd::load_detections(pred_path, cloud);
            const auto gt = scd::load_ground_truth(gt_path);
            if (cloud) gt.validate(cloud->size());
            const auto report = scd::evaluate(dets, gt, cfg.eval_ks, cfg.iou_mode, cloud);
            if (!g.out.empty()) {
                ensure_parent(g.out);
                scd::write_json(g.out, report.to_json(gt));
            }
            std::cout << report.table();
        } else if (*synth) {
            if (spec_path.empty() == preset.empty()) {
                spdlog::error("synth: give exactly one of --spec or --preset");
                return kUsage;
            }
            scd::synth::SceneSpec spec;
            if (!spec_path.empty()) spec = scd::synth::SceneSpec::from_json(scd::read_json(spec_path));
            else if (preset == "moved") spec = scd::synth::preset_moved_and_removed();
            else if (preset == "slid") spec = scd::synth::preset_slid();
            else spec = scd::synth::preset_unchanged();
            const fs::path path = scd::synth::generate(spec, out_or(g, "scene"));
            std::cout << path.string() << "\n";
        } else if (*run) {
            const fs::path dir = out_or(g, "out");
            const auto result = scd::run_pipeline(scene, cfg, dir, g.jobs);
            std::cout << result.detections.size() << " detections -> " << (dir / "detections.json").string() << "\n";
            if (result.report) std::cout << result.report->table();
        } else if (*sweep) {
            const auto vals = parse_list(values, "--values");
            const auto rows = scd::sweep(scene, cfg, param, vals, g.jobs);
            if (!g.out.empty()) {
                ensure_parent(g.out);
                scd::write_json(g.out, scd::sweep_json(param, rows, *scene.ground_truth));
            }
            std::cout << scd::sweep_table(param, rows);
        }
    } catch (const scd::StageError& e) {
        spdlog::error("{}", e.what());
        return kStageFailure;
    } catch (const scd::IoError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const scd::ParseError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const scd::ValidationError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kStageFailure;
    }
    return kOk;
}
