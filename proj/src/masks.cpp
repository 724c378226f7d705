#include "scd/masks.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace scd {

std::vector<std::uint16_t> assign_point_masks(const PointCloud& cloud, const CameraView& view,
                                              const LabelImage& labels, const DepthImage& rendered_rescan_depth,
                                              double depth_tol) {
    if (!labels.same_shape(rendered_rescan_depth)) {
        throw ValidationError("assign_point_masks: label and depth images differ in size");
    }
    if (!labels.same_shape(view.intrinsics.width, view.intrinsics.height)) {
        throw ValidationError("assign_point_masks: label image does not match the view intrinsics");
    }
    std::vector<std::uint16_t> out(cloud.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto proj = project(view.pose.world_to_camera(cloud.positions[i]), view.intrinsics);
        if (!proj) continue;
        const int c = proj->col();
        const int r = proj->row();
        const float d = rendered_rescan_depth.at(c, r);
        if (!valid_depth(d) || std::abs(proj->z - static_cast<double>(d)) > depth_tol) continue;
        out[i] = labels.at(c, r);
    }
    return out;
}

std::vector<std::uint16_t> supervoxel_masks(const SupervoxelGraph& graph, std::span<const std::uint16_t> point_masks) {
    if (point_masks.size() != graph.assignment.size()) {
        throw ValidationError("supervoxel_masks: per-point mask count does not match the graph");
    }
    std::vector<std::uint16_t> out(graph.size(), 0);
    std::unordered_map<std::uint16_t, std::size_t> votes;
    for (std::size_t s = 0; s < graph.size(); ++s) {
        votes.clear();
        for (std::uint32_t p : graph.supervoxels[s].point_indices) {
            if (point_masks[p] != 0) ++votes[point_masks[p]];
        }
        std::uint16_t best = 0;
        std::size_t best_count = 0;
        for (const auto& [id, n] : votes) {
            if (n > best_count || (n == best_count && id < best)) {
                best = id;
                best_count = n;
            }
        }
        out[s] = best;
    }
    return out;
}

EdgeWeights same_mask_edges(const SupervoxelGraph& graph, std::span<const MaskAssignment> assignments) {
    EdgeWeights out{graph.edges, std::vector<double>(graph.edges.size(), 0.0)};
    for (const MaskAssignment& a : assignments) {
        for (const auto& [view, masks] : a.per_view) {
            if (masks.size() != graph.size()) {
                throw ValidationError("same_mask_edges: assignment for view " + std::to_string(view) +
                                      " does not cover every supervoxel");
            }
            for (std::size_t e = 0; e < out.edges.size(); ++e) {
                const auto [i, j] = out.edges[e];
                if (masks[i] != 0 && masks[i] == masks[j]) out.weights[e] = 1.0;
            }
        }
    }
    return out;
}

EdgeWeights photoconsistency_weights(const SupervoxelGraph& graph, const PointCloud& cloud, double gamma) {
    if (!cloud.has_colors()) throw ValidationError("photoconsistency_weights: cloud has no colors");
    if (gamma < 0.0) throw ValidationError("photoconsistency_weights: gamma must be >= 0");
    EdgeWeights out{graph.edges, std::vector<double>(graph.edges.size(), 0.0)};
    for (std::size_t e = 0; e < out.edges.size(); ++e) {
        const auto [i, j] = out.edges[e];
        const double d2 = (graph.supervoxels[i].mean_color - graph.supervoxels[j].mean_color).squaredNorm();
        out.weights[e] = gamma / (d2 + 1.0);
    }
    return out;
}

}  // namespace scd
