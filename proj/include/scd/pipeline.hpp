#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scd/artifacts.hpp"
#include "scd/eval.hpp"
#include "scd/manifest.hpp"
#include "scd/render.hpp"

namespace scd {

// A failure inside a pipeline stage; the message starts with the stage name.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

enum class EdgeMode { SameMask, Photoconsistency };
enum class Baseline { None, SeedsOnly };

struct PipelineConfig {
    ThresholdPolicy threshold;
    int seed_open_px = 1;  // opening radius applied to each view's flag mask
    double snap_radius = 0.03;
    RenderOptions render;
    SupervoxelParams supervoxel;
    std::size_t min_seed_points = 1;
    double depth_tol = 0.05;
    std::vector<std::string> sources;  // empty: every source the manifest provides
    EdgeMode edge_mode = EdgeMode::SameMask;
    double gamma = 1.0;
    double lambda = 1.0;
    double edge_weight = 1.0;
    double smoothing = 0.01;
    double p_seed = 0.8;
    double p_other = 0.5;
    CutPursuitOptions cut_pursuit;
    double cc_step = 0.10;
    std::size_t min_points = 50;
    std::vector<double> eval_ks{0.20, 0.25, 0.50};
    IouMode iou_mode = IouMode::Point;
    Baseline baseline = Baseline::None;

    void validate() const;
    nlohmann::json to_json() const;
    // Keys absent from j keep their defaults; unknown keys are rejected.
    static PipelineConfig from_json(const nlohmann::json& j);
};

PipelineConfig load_config(const std::filesystem::path& path);

// Loads the points, and the faces when the file has any.
ScanGeometry load_scan(const std::filesystem::path& path);

struct Scene {
    SceneManifest manifest;
    ScanGeometry reference;
    ScanGeometry rescan;
    std::vector<CameraView> views;
    std::optional<GroundTruth> ground_truth;
};

Scene load_scene(const std::filesystem::path& manifest_path);

// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Stages. Each one wraps its failures in StageError.
std::vector<DepthImage> render_views(const ScanGeometry& scan, const std::vector<CameraView>& views,
                                     const RenderOptions& opts, int jobs = 1);
SeedSet detect_seeds(const Scene& scene, const PipelineConfig& cfg, int jobs = 1);
SupervoxelGraph build_graph(const Scene& scene, const PipelineConfig& cfg);
Assignments assign_masks(const Scene& scene, const SupervoxelGraph& graph, const PipelineConfig& cfg, int jobs = 1);
OptimizationOutput optimize(const SupervoxelGraph& graph, const Assignments& assignments, const SeedSet& seeds,
                            const PipelineConfig& cfg);
DetectionSet detect(const SupervoxelGraph& graph, const OptimizationOutput& labels, const SeedSet& seeds,
                    const PointCloud& rescan, const PipelineConfig& cfg);
EvalReport evaluate_detections(const DetectionSet& dets, const GroundTruth& gt, const PointCloud& rescan,
                               const PipelineConfig& cfg);

struct PipelineResult {
    SeedSet seeds;
    SupervoxelGraph graph;
    Assignments assignments;
    OptimizationOutput labels;
    DetectionSet detections;
    std::optional<EvalReport> report;
};

// Writes seeds.json, graph.json, assignments.json, labels.json,
// detections.json, detections.ply and, with ground truth, report.json.
// An empty out_dir skips writing.
PipelineResult run_pipeline(const Scene& scene, const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                            int jobs = 1);

struct SweepRow {
    double value = 0.0;
    EvalReport report;
};

// One downstream run per value of lambda, p_seed or tau; upstream stages that
// do not depend on the parameter run once.
std::vector<SweepRow> sweep(const Scene& scene, const PipelineConfig& cfg, const std::string& param,
                            const std::vector<double>& values, int jobs = 1);
std::string sweep_table(const std::string& param, const std::vector<SweepRow>& rows);
nlohmann::json sweep_json(const std::string& param, const std::vector<SweepRow>& rows, const GroundTruth& gt);

}  // namespace scd
