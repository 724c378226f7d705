#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "scd/detection.hpp"
#include "scd/gmp.hpp"
#include "scd/masks.hpp"
#include "scd/seeds.hpp"
#include "scd/supervoxel.hpp"

namespace scd {

// On-disk stage outputs. Each pair of functions round-trips exactly.

nlohmann::json seeds_to_json(const SeedSet& seeds);
SeedSet seeds_from_json(const nlohmann::json& j);

nlohmann::json graph_to_json(const SupervoxelGraph& graph);
SupervoxelGraph graph_from_json(const nlohmann::json& j);

struct Assignments {
    std::vector<MaskAssignment> sources;
    std::string mode = "same_mask";  // or "photoconsistency"
    EdgeWeights weights;
};
nlohmann::json assignments_to_json(const Assignments& a);
Assignments assignments_from_json(const nlohmann::json& j);

struct OptimizationOutput {
    ChangeField p;               // initial labeling per supervoxel
    ChangeField q;               // optimised field
    std::vector<std::uint8_t> labels;
    std::vector<std::uint32_t> components;
    double energy = 0.0;
    std::vector<double> energy_history;
    bool optimized = true;       // false for the seeds-only baseline
};
nlohmann::json labels_to_json(const OptimizationOutput& o);
OptimizationOutput labels_from_json(const nlohmann::json& j);

// {detections: [{id, score, point_indices}], params, metrics?}. Boxes are
// not stored; load recomputes them when a cloud is given.
nlohmann::json detections_to_json(const DetectionSet& dets, const nlohmann::json& metrics = nullptr);
DetectionSet detections_from_json(const nlohmann::json& j, const PointCloud* cloud = nullptr);

void save_detections(const std::filesystem::path& path, const DetectionSet& dets,
                     const nlohmann::json& metrics = nullptr);
DetectionSet load_detections(const std::filesystem::path& path, const PointCloud* cloud = nullptr);

// Rescan cloud with every detection painted a distinct colour, the rest grey.
PointCloud colorize_detections(const PointCloud& cloud, const DetectionSet& dets);

}  // namespace scd
