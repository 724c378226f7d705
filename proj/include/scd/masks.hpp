#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scd/geometry.hpp"
#include "scd/supervoxel.hpp"

namespace scd {

// Per-view supervoxel mask ids for one mask source; 0 means unassigned.
struct MaskAssignment {
    std::string source;
    std::map<std::uint32_t, std::vector<std::uint16_t>> per_view;
};

// One value per SupervoxelGraph edge, in graph edge order.
struct EdgeWeights {
    std::vector<SupervoxelEdge> edges;
    std::vector<double> weights;

    std::size_t size() const { return edges.size(); }
};

// A point takes the label under its projection when it is in front of the
// camera, inside the image and within depth_tol of the rendered rescan depth.
std::vector<std::uint16_t> assign_point_masks(const PointCloud& cloud, const CameraView& view,
                                              const LabelImage& labels, const DepthImage& rendered_rescan_depth,
                                              double depth_tol = 0.05);

// Majority vote over non-zero point ids; ties go to the smaller id.
std::vector<std::uint16_t> supervoxel_masks(const SupervoxelGraph& graph,
                                            std::span<const std::uint16_t> point_masks);

// 1 on an edge iff both ends carry the same non-zero mask in at least one view
// of at least one source, else 0.
EdgeWeights same_mask_edges(const SupervoxelGraph& graph, std::span<const MaskAssignment> assignments);

// gamma / (|c_i - c_j|^2 + 1) on every edge, from supervoxel mean colours.
EdgeWeights photoconsistency_weights(const SupervoxelGraph& graph, const PointCloud& cloud, double gamma);

}  // namespace scd
