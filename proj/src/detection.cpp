#include "scd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "scd/spatial_grid.hpp"

namespace scd {

double Aabb::volume() const {
    const Vec3 e = (max - min).cwiseMax(0.0);
    return e.x() * e.y() * e.z();
}

Aabb Aabb::of(const PointCloud& cloud, std::span<const std::uint32_t> indices) {
    Aabb box;
    if (indices.empty()) return box;
    box.min = box.max = cloud.positions.at(indices.front());
    for (std::uint32_t i : indices) {
        box.min = box.min.cwiseMin(cloud.positions.at(i));
        box.max = box.max.cwiseMax(cloud.positions.at(i));
    }
    return box;
}

void DetectionSet::validate() const {
    std::vector<std::uint32_t> all;
    for (const Detection& d : detections) {
        if (d.point_indices.empty()) throw ValidationError("detection " + std::to_string(d.id) + " has no points");
        if (!std::isfinite(d.score)) throw ValidationError("detection " + std::to_string(d.id) + " has a non-finite score");
        all.insert(all.end(), d.point_indices.begin(), d.point_indices.end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw ValidationError("detections overlap");
    }
}

std::vector<std::uint32_t> changed_points(const SupervoxelGraph& graph, std::span<const std::uint8_t> labels) {
    if (labels.size() != graph.size()) throw ValidationError("changed_points: labels do not cover every supervoxel");
    std::vector<std::uint32_t> out;
    for (std::size_t s = 0; s < graph.size(); ++s) {
        if (!labels[s]) continue;
        const auto& pts = graph.supervoxels[s].point_indices;
        out.insert(out.end(), pts.begin(), pts.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

DetectionSet connected_components(std::span<const std::uint32_t> points, const PointCloud& cloud, double step,
                                  std::size_t min_points) {
    if (!(step > 0.0)) throw ValidationError("connected_components: step must be positive");
    std::vector<std::uint32_t> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> voxel_of;
    std::vector<VoxelKey> keys;
    std::vector<std::vector<std::uint32_t>> voxel_points;
    for (std::uint32_t p : sorted) {
        const VoxelKey k = VoxelKey::of(cloud.positions.at(p), step);
        auto [it, inserted] = voxel_of.emplace(k, static_cast<std::uint32_t>(keys.size()));
        if (inserted) {
            keys.push_back(k);
            voxel_points.emplace_back();
        }
        voxel_points[it->second].push_back(p);
    }

    std::vector<std::uint32_t> label(keys.size(), UINT32_MAX);
    DetectionSet out;
    for (std::uint32_t start = 0; start < keys.size(); ++start) {
        if (label[start] != UINT32_MAX) continue;
        const std::uint32_t comp = static_cast<std::uint32_t>(out.detections.size());
        std::vector<std::uint32_t> stack{start};
        label[start] = comp;
        Detection det;
        while (!stack.empty()) {
            const std::uint32_t v = stack.back();
            stack.pop_back();
            det.point_indices.insert(det.point_indices.end(), voxel_points[v].begin(), voxel_points[v].end());
            for (const auto& o : neighbor_offsets_26()) {
                auto it = voxel_of.find(keys[v].offset(o[0], o[1], o[2]));
                if (it != voxel_of.end() && label[it->second] == UINT32_MAX) {
                    label[it->second] = comp;
                    stack.push_back(it->second);
                }
            }
        }
        if (det.point_indices.size() < min_points) {
            out.detections.emplace_back();  // placeholder keeps component numbering stable
            continue;
        }
        std::sort(det.point_indices.begin(), det.point_indices.end());
        det.bbox = Aabb::of(cloud, det.point_indices);
        out.detections.push_back(std::move(det));
    }
    std::erase_if(out.detections, [](const Detection& d) { return d.point_indices.empty(); });
    for (std::uint32_t i = 0; i < out.detections.size(); ++i) out.detections[i].id = i;
    out.params = {{"cc_step", step}, {"min_points", min_points}};
    return out;
}

DetectionSet score(DetectionSet detections, const SeedSet& seeds) {
    for (Detection& d : detections.detections) {
        std::size_t seeded = 0;
        for (std::uint32_t p : d.point_indices) seeded += seeds.contains(p) ? 1 : 0;
        d.score = d.point_indices.empty() ? 0.0
                                          : static_cast<double>(seeded) / static_cast<double>(d.point_indices.size());
    }
    std::stable_sort(detections.detections.begin(), detections.detections.end(),
                     [](const Detection& a, const Detection& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.point_indices.size() != b.point_indices.size()) {
                             return a.point_indices.size() > b.point_indices.size();
                         }
                         return a.point_indices.front() < b.point_indices.front();
                     });
    for (std::uint32_t i = 0; i < detections.detections.size(); ++i) detections.detections[i].id = i;
    return detections;
}

}  // namespace scd
