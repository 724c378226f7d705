#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "scd/geometry.hpp"
#include "scd/seeds.hpp"
#include "scd/supervoxel.hpp"

namespace scd {

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    double volume() const;
    static Aabb of(const PointCloud& cloud, std::span<const std::uint32_t> indices);
};

struct Detection {
    std::uint32_t id = 0;
    std::vector<std::uint32_t> point_indices;  // sorted, non-empty
    double score = 0.0;
    Aabb bbox;
};

struct DetectionSet {
    std::vector<Detection> detections;
    nlohmann::json params = nlohmann::json::object();

    std::size_t size() const { return detections.size(); }
    // Non-empty, finite scores, pairwise-disjoint point sets.
    void validate() const;
};

// Points of every supervoxel labelled changing (labels indexed by supervoxel).
std::vector<std::uint32_t> changed_points(const SupervoxelGraph& graph, std::span<const std::uint8_t> labels);

// Voxelises the points at `step`, links voxels under 26-connectivity and emits
// one detection per component of at least min_points points.
DetectionSet connected_components(std::span<const std::uint32_t> points, const PointCloud& cloud,
                                  double step = 0.10, std::size_t min_points = 50);

// Score = seeded fraction of a detection's points. Detections are then
// re-ordered by descending score, then size, and renumbered from 0.
DetectionSet score(DetectionSet detections, const SeedSet& seeds);

}  // namespace scd
