#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scd/geometry.hpp"
#include "scd/seeds.hpp"

namespace scd {

struct SupervoxelParams {
    double voxel_resolution = 0.02;
    double seed_resolution = 0.25;
    double weight_color = 0.2;
    double weight_spatial = 0.4;
    double weight_normal = 1.0;
    int max_iterations = 5;

    void validate() const;
};

struct Supervoxel {
    Vec3 centroid = Vec3::Zero();
    Vec3 mean_color = Vec3::Zero();
    Vec3 mean_normal = Vec3::UnitZ();
    std::vector<std::uint32_t> point_indices;  // sorted
};

using SupervoxelEdge = std::pair<std::uint32_t, std::uint32_t>;  // first < second

struct SupervoxelGraph {
    std::vector<std::uint32_t> assignment;  // point -> supervoxel id
    std::vector<Supervoxel> supervoxels;
    std::vector<SupervoxelEdge> edges;      // sorted, unique

    std::size_t size() const { return supervoxels.size(); }
    void validate(std::size_t cloud_size) const;
};

// Unit normals from a plane fit over each point's k nearest neighbours.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, std::size_t k = 16);

// Voxel-cloud connectivity segmentation: voxelise, seed on a coarse grid, grow
// regions over voxel 26-adjacency by the joint colour/space/normal distance.
SupervoxelGraph build_supervoxels(const PointCloud& cloud, const SupervoxelParams& params = {});

// Supervoxels holding at least min_seed_points seeds, ascending ids.
std::vector<std::uint32_t> mark_changed(const SupervoxelGraph& graph, const SeedSet& seeds,
                                        std::size_t min_seed_points = 1);

}  // namespace scd
