#include "scd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "scd/json_util.hpp"
#include "scd/ply.hpp"
#include "scd/png_io.hpp"
#include "scd/spatial_grid.hpp"

namespace scd {

using nlohmann::json;

namespace {

// Reads known keys out of a JSON object and reports the leftovers.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ValidationError(where_ + ": must be a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_[key].get<T>();
        } catch (const json::exception&) {
            throw ValidationError(where_ + ": field \"" + key + "\" has the wrong type");
        }
    }

    const json* object(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return nullptr;
        return &j_[key];
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ValidationError(where_ + ": unknown field \"" + k + "\"");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

template <typename F>
auto stage(const char* name, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        auto out = fn();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        spdlog::info("{}: done in {:.2f} s", name, secs);
        return out;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

void PipelineConfig::validate() const {
    threshold.validate();
    render.validate();
    supervoxel.validate();
    if (seed_open_px < 0) throw ValidationError("config: seed_open_px must be >= 0");
    if (!(snap_radius > 0)) throw ValidationError("config: snap_radius must be positive");
    if (min_seed_points < 1) throw ValidationError("config: min_seed_points must be >= 1");
    if (!(depth_tol > 0)) throw ValidationError("config: depth_tol must be positive");
    if (!(gamma >= 0)) throw ValidationError("config: gamma must be >= 0");
    if (!(lambda >= 0) || !std::isfinite(lambda)) throw ValidationError("config: lambda must be finite and >= 0");
    if (!(edge_weight >= 0)) throw ValidationError("config: edge_weight must be >= 0");
    if (!(smoothing >= 0 && smoothing < 1)) throw ValidationError("config: smoothing must be in [0, 1)");
    if (!(p_seed >= 0 && p_seed <= 1)) throw ValidationError("config: p_seed must be in [0, 1]");
    if (!(p_other >= 0 && p_other <= 1)) throw ValidationError("config: p_other must be in [0, 1]");
    if (cut_pursuit.max_outer_iters < 1 || cut_pursuit.max_sweeps < 1) {
        throw ValidationError("config: cut_pursuit iteration caps must be >= 1");
    }
    if (!(cc_step > 0)) throw ValidationError("config: cc_step must be positive");
    if (eval_ks.empty()) throw ValidationError("config: eval_ks must not be empty");
    for (double k : eval_ks) {
        if (!(k >= 0 && k < 1)) throw ValidationError("config: eval_ks must lie in [0, 1)");
    }
    for (const auto& s : sources) {
        if (s.empty()) throw ValidationError("config: empty mask source name");
    }
}

json PipelineConfig::to_json() const {
    return json{
        {"threshold",
         {{"mode", threshold.mode == ThresholdMode::Fixed ? "fixed" : "mad"},
          {"tau", threshold.tau_fixed},
          {"mad_k", threshold.mad_k},
          {"tau_min", threshold.tau_min},
          {"direction", threshold.direction == ChangeDirection::Nearer ? "nearer" : "any"}}},
        {"seed_open_px", seed_open_px},
        {"snap_radius", snap_radius},
        {"render",
         {{"max_range", render.max_range},
          {"splat_radius_px", render.splat_radius_px},
          {"backface_culling", render.backface_culling}}},
        {"supervoxel",
         {{"voxel_resolution", supervoxel.voxel_resolution},
          {"seed_resolution", supervoxel.seed_resolution},
          {"weight_color", supervoxel.weight_color},
          {"weight_spatial", supervoxel.weight_spatial},
          {"weight_normal", supervoxel.weight_normal},
          {"max_iterations", supervoxel.max_iterations}}},
        {"min_seed_points", min_seed_points},
        {"depth_tol", depth_tol},
        {"sources", sources},
        {"edge_mode", edge_mode == EdgeMode::SameMask ? "same_mask" : "photoconsistency"},
        {"gamma", gamma},
        {"lambda", lambda},
        {"edge_weight", edge_weight},
        {"smoothing", smoothing},
        {"p_seed", p_seed},
        {"p_other", p_other},
        {"cut_pursuit", {{"max_outer_iters", cut_pursuit.max_outer_iters}, {"max_sweeps", cut_pursuit.max_sweeps}}},
        {"cc_step", cc_step},
        {"min_points", min_points},
        {"eval_ks", eval_ks},
        {"iou", iou_mode == IouMode::Point ? "point" : "box"},
        {"baseline", baseline == Baseline::None ? "none" : "seeds-only"},
    };
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    Reader r(j, "config");
    if (const json* t = r.object("threshold")) {
        Reader tr(*t, "config.threshold");
        std::string mode = c.threshold.mode == ThresholdMode::Fixed ? "fixed" : "mad";
        std::string dir = "nearer";
        tr.get("mode", mode);
        tr.get("tau", c.threshold.tau_fixed);
        tr.get("mad_k", c.threshold.mad_k);
        tr.get("tau_min", c.threshold.tau_min);
        tr.get("direction", dir);
        tr.finish();
        if (mode == "fixed") c.threshold.mode = ThresholdMode::Fixed;
        else if (mode == "mad") c.threshold.mode = ThresholdMode::RobustMad;
        else throw ValidationError("config.threshold: mode must be \"fixed\" or \"mad\"");
        if (dir == "nearer") c.threshold.direction = ChangeDirection::Nearer;
        else if (dir == "any") c.threshold.direction = ChangeDirection::Any;
        else throw ValidationError("config.threshold: direction must be \"nearer\" or \"any\"");
    }
    r.get("seed_open_px", c.seed_open_px);
    r.get("snap_radius", c.snap_radius);
    if (const json* t = r.object("render")) {
        Reader rr(*t, "config.render");
        rr.get("max_range", c.render.max_range);
        rr.get("splat_radius_px", c.render.splat_radius_px);
        rr.get("backface_culling", c.render.backface_culling);
        rr.finish();
    }
    if (const json* t = r.object("supervoxel")) {
        Reader sr(*t, "config.supervoxel");
        sr.get("voxel_resolution", c.supervoxel.voxel_resolution);
        sr.get("seed_resolution", c.supervoxel.seed_resolution);
        sr.get("weight_color", c.supervoxel.weight_color);
        sr.get("weight_spatial", c.supervoxel.weight_spatial);
        sr.get("weight_normal", c.supervoxel.weight_normal);
        sr.get("max_iterations", c.supervoxel.max_iterations);
        sr.finish();
    }
    r.get("min_seed_points", c.min_seed_points);
    r.get("depth_tol", c.depth_tol);
    r.get("sources", c.sources);
    std::string edge_mode = "same_mask", iou = "point", baseline = "none";
    r.get("edge_mode", edge_mode);
    r.get("gamma", c.gamma);
    r.get("lambda", c.lambda);
    r.get("edge_weight", c.edge_weight);
    r.get("smoothing", c.smoothing);
    r.get("p_seed", c.p_seed);
    r.get("p_other", c.p_other);
    if (const json* t = r.object("cut_pursuit")) {
        Reader cr(*t, "config.cut_pursuit");
        cr.get("max_outer_iters", c.cut_pursuit.max_outer_iters);
        cr.get("max_sweeps", c.cut_pursuit.max_sweeps);
        cr.finish();
    }
    r.get("cc_step", c.cc_step);
    r.get("min_points", c.min_points);
    r.get("eval_ks", c.eval_ks);
    r.get("iou", iou);
    r.get("baseline", baseline);
    r.finish();

    if (edge_mode == "same_mask") c.edge_mode = EdgeMode::SameMask;
    else if (edge_mode == "photoconsistency") c.edge_mode = EdgeMode::Photoconsistency;
    else throw ValidationError("config: edge_mode must be \"same_mask\" or \"photoconsistency\"");
    if (iou == "point") c.iou_mode = IouMode::Point;
    else if (iou == "box") c.iou_mode = IouMode::Box;
    else throw ValidationError("config: iou must be \"point\" or \"box\"");
    if (baseline == "none") c.baseline = Baseline::None;
    else if (baseline == "seeds-only") c.baseline = Baseline::SeedsOnly;
    else throw ValidationError("config: baseline must be \"none\" or \"seeds-only\"");
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    try {
        return PipelineConfig::from_json(read_json(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

ScanGeometry load_scan(const std::filesystem::path& path) {
    ScanGeometry scan;
    scan.cloud = load_point_cloud(path);
    TriMesh mesh = load_mesh(path);
    if (!mesh.empty()) scan.mesh = std::move(mesh);
    return scan;
}

Scene load_scene(const std::filesystem::path& manifest_path) {
    Scene s;
    s.manifest = load_manifest(manifest_path);
    s.reference = load_scan(s.manifest.reference_scan);
    s.rescan = load_scan(s.manifest.rescan);
    s.views = load_views(s.manifest);
    if (s.manifest.ground_truth) {
        s.ground_truth = load_ground_truth(*s.manifest.ground_truth);
        s.ground_truth->validate(s.rescan.cloud.size());
    }
    return s;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<DepthImage> render_views(const ScanGeometry& scan, const std::vector<CameraView>& views,
                                     const RenderOptions& opts, int jobs) {
    std::vector<DepthImage> out(views.size());
    parallel_for(views.size(), jobs, [&](std::size_t i) { out[i] = render_depth(scan, views[i], opts); });
    return out;
}

SeedSet detect_seeds(const Scene& scene, const PipelineConfig& cfg, int jobs) {
    return stage("seed", [&] {
        const auto ref = render_views(scene.reference, scene.views, cfg.render, jobs);
        const auto res = render_views(scene.rescan, scene.views, cfg.render, jobs);
        const SpatialGrid grid(scene.rescan.cloud.positions, cfg.snap_radius);
        std::vector<SeedSet> per_view(scene.views.size());
        parallel_for(scene.views.size(), jobs, [&](std::size_t i) {
            const ResidualImage r = depth_residual(ref[i], res[i]);
            per_view[i] = backproject_seeds(open_mask(threshold(r, cfg.threshold), cfg.seed_open_px), res[i], scene.views[i],
                                            static_cast<std::uint32_t>(i), grid, cfg.snap_radius);
        });
        SeedSet seeds = accumulate(per_view);
        spdlog::debug("seed: {} seed points", seeds.size());
        return seeds;
    });
}

SupervoxelGraph build_graph(const Scene& scene, const PipelineConfig& cfg) {
    return stage("supervoxel", [&] {
        SupervoxelGraph g = build_supervoxels(scene.rescan.cloud, cfg.supervoxel);
        spdlog::debug("supervoxel: {} supervoxels, {} edges", g.size(), g.edges.size());
        return g;
    });
}

Assignments assign_masks(const Scene& scene, const SupervoxelGraph& graph, const PipelineConfig& cfg, int jobs) {
    return stage("assign", [&] {
        std::vector<std::string> sources = cfg.sources;
        if (sources.empty()) {
            std::set<std::string> all;
            for (const auto& v : scene.views) {
                for (const auto& [name, img] : v.labels) all.insert(name);
            }
            sources.assign(all.begin(), all.end());
        }
        Assignments out;
        out.mode = cfg.edge_mode == EdgeMode::SameMask ? "same_mask" : "photoconsistency";
        const bool need_views = cfg.edge_mode == EdgeMode::SameMask;
        std::vector<DepthImage> depth;
        if (!sources.empty()) depth = render_views(scene.rescan, scene.views, cfg.render, jobs);
        for (const auto& source : sources) {
            MaskAssignment m;
            m.source = source;
            std::vector<std::optional<std::vector<std::uint16_t>>> per_view(scene.views.size());
            parallel_for(scene.views.size(), jobs, [&](std::size_t i) {
                const auto it = scene.views[i].labels.find(source);
                if (it == scene.views[i].labels.end()) return;
                const auto point_masks =
                    assign_point_masks(scene.rescan.cloud, scene.views[i], it->second, depth[i], cfg.depth_tol);
                per_view[i] = supervoxel_masks(graph, point_masks);
            });
            for (std::size_t i = 0; i < per_view.size(); ++i) {
                if (per_view[i]) m.per_view[static_cast<std::uint32_t>(i)] = std::move(*per_view[i]);
            }
            if (m.per_view.empty() && need_views) throw Error("no view provides masks for source \"" + source + "\"");
            out.sources.push_back(std::move(m));
        }
        if (cfg.edge_mode == EdgeMode::SameMask) {
            if (out.sources.empty()) throw Error("no mask sources available");
            out.weights = same_mask_edges(graph, out.sources);
        } else {
            out.weights = photoconsistency_weights(graph, scene.rescan.cloud, cfg.gamma);
        }
        return out;
    });
}

OptimizationOutput optimize(const SupervoxelGraph& graph, const Assignments& assignments, const SeedSet& seeds,
                            const PipelineConfig& cfg) {
    return stage("optimize", [&] {
        if (assignments.weights.edges != graph.edges) throw Error("edge weights do not match the graph edges");
        const auto changed = mark_changed(graph, seeds, cfg.min_seed_points);
        OptimizationOutput out;
        out.p = init_labeling(graph.size(), changed, cfg.p_seed, cfg.p_other);
        const GmpProblem problem = GmpProblem::from_edge_weights(graph.size(), assignments.weights, cfg.lambda,
                                                                 cfg.edge_weight, cfg.smoothing);
        if (cfg.baseline == Baseline::SeedsOnly) {
            out.optimized = false;
            out.q = out.p;
            out.components.resize(graph.size());
            for (std::size_t i = 0; i < graph.size(); ++i) out.components[i] = static_cast<std::uint32_t>(i);
            out.energy = energy(out.p, out.q, problem);
            out.energy_history = {out.energy};
        } else {
            CutPursuitResult r = cut_pursuit(out.p, problem, cfg.cut_pursuit);
            out.q = std::move(r.q);
            out.components = std::move(r.partition.component);
            out.energy = r.energy;
            out.energy_history = std::move(r.energy_history);
        }
        out.labels = extract_labels(out.q);
        spdlog::debug("optimize: {} changed of {} supervoxels, energy {:.6f}",
                      std::count(out.labels.begin(), out.labels.end(), 1), out.labels.size(), out.energy);
        return out;
    });
}

DetectionSet detect(const SupervoxelGraph& graph, const OptimizationOutput& labels, const SeedSet& seeds,
                    const PointCloud& rescan, const PipelineConfig& cfg) {
    return stage("detect", [&] {
        if (labels.labels.size() != graph.size()) throw Error("labels do not match the graph");
        const auto pts = changed_points(graph, labels.labels);
        DetectionSet dets = score(connected_components(pts, rescan, cfg.cc_step, cfg.min_points), seeds);
        dets.params = cfg.to_json();
        return dets;
    });
}

EvalReport evaluate_detections(const DetectionSet& dets, const GroundTruth& gt, const PointCloud& rescan,
                               const PipelineConfig& cfg) {
    return stage("eval", [&] { return evaluate(dets, gt, cfg.eval_ks, cfg.iou_mode, &rescan); });
}

PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                            int jobs) {
    cfg.validate();
    const bool write = !out_dir.empty();
    if (write) std::filesystem::create_directories(out_dir);
    PipelineResult r;
    r.seeds = detect_seeds(scene, cfg, jobs);
    if (write) write_json(out_dir / "seeds.json", seeds_to_json(r.seeds));
    r.graph = build_graph(scene, cfg);
    if (write) write_json(out_dir / "graph.json", graph_to_json(r.graph));
    r.assignments = assign_masks(scene, r.graph, cfg, jobs);
    if (write) write_json(out_dir / "assignments.json", assignments_to_json(r.assignments));
    r.labels = optimize(r.graph, r.assignments, r.seeds, cfg);
    if (write) write_json(out_dir / "labels.json", labels_to_json(r.labels));
    r.detections = detect(r.graph, r.labels, r.seeds, scene.rescan.cloud, cfg);
    if (scene.ground_truth && !scene.ground_truth->changed_instances.empty()) {
        r.report = evaluate_detections(r.detections, *scene.ground_truth, scene.rescan.cloud, cfg);
    }
    if (write) {
        const json metrics = r.report ? r.report->to_json(*scene.ground_truth) : json(nullptr);
        save_detections(out_dir / "detections.json", r.detections, metrics);
        save_point_cloud(out_dir / "detections.ply", colorize_detections(scene.rescan.cloud, r.detections));
        if (r.report) write_json(out_dir / "report.json", metrics);
    }
    return r;
}

std::vector<SweepRow> sweep(const Scene& scene, const PipelineConfig& cfg, const std::string& param,
                            const std::vector<double>& values, int jobs) {
    if (param != "lambda" && param != "p_seed" && param != "tau") {
        throw ValidationError("sweep: parameter must be lambda, p_seed or tau");
    }
    if (values.empty()) throw ValidationError("sweep: no values");
    if (!scene.ground_truth || scene.ground_truth->changed_instances.empty()) {
        throw ValidationError("sweep: the manifest has no ground-truth changes to score against");
    }
    std::vector<PipelineConfig> cfgs;
    for (double v : values) {
        PipelineConfig c = cfg;
        if (param == "lambda") c.lambda = v;
        else if (param == "p_seed") c.p_seed = v;
        else c.threshold.tau_fixed = v;
        c.validate();
        cfgs.push_back(std::move(c));
    }

    const SupervoxelGraph graph = build_graph(scene, cfg);
    const Assignments assignments = assign_masks(scene, graph, cfg, jobs);
    std::optional<SeedSet> shared_seeds;
    if (param != "tau") shared_seeds = detect_seeds(scene, cfg, jobs);

    std::vector<SweepRow> rows(values.size());
    parallel_for(values.size(), jobs, [&](std::size_t i) {
        const SeedSet seeds = shared_seeds ? *shared_seeds : detect_seeds(scene, cfgs[i], 1);
        const OptimizationOutput labels = optimize(graph, assignments, seeds, cfgs[i]);
        const DetectionSet dets = detect(graph, labels, seeds, scene.rescan.cloud, cfgs[i]);
        rows[i] = SweepRow{values[i], evaluate_detections(dets, *scene.ground_truth, scene.rescan.cloud, cfgs[i])};
    });
    return rows;
}

std::string sweep_table(const std::string& param, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(10) << param;
    if (!rows.empty()) {
        for (const auto& [k, r] : rows.front().report.recall) {
            std::ostringstream h;
            h << "R@" << std::fixed << std::setprecision(2) << k;
            os << std::right << std::setw(9) << h.str();
        }
    }
    os << std::right << std::setw(9) << "AP@0.25" << std::setw(7) << "dets" << "\n";
    for (const auto& row : rows) {
        std::ostringstream v;
        v << row.value;
        os << std::left << std::setw(10) << v.str() << std::right << std::fixed << std::setprecision(2);
        for (const auto& [k, r] : row.report.recall) os << std::setw(9) << r;
        os << std::setw(9) << row.report.ap25 * 100.0 << std::setw(7) << row.report.detection_count << "\n";
    }
    return os.str();
}

json sweep_json(const std::string& param, const std::vector<SweepRow>& rows, const GroundTruth& gt) {
    json arr = json::array();
    for (const auto& row : rows) arr.push_back(json{{"value", row.value}, {"report", row.report.to_json(gt)}});
    return json{{"param", param}, {"rows", arr}};
}

}  // namespace scd
