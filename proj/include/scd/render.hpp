#pragma once

#include <cstdint>
#include <optional>

#include "scd/geometry.hpp"

namespace scd {

struct RenderOptions {
    double max_range = 10.0;
    int splat_radius_px = 1;
    bool backface_culling = false;

    void validate() const;
};

// Depth plus, per pixel, the index of the visible triangle (-1 where empty).
struct MeshRender {
    DepthImage depth;
    Image<std::int32_t> face;
};

// Z-buffered rasterisation with near-plane clipping. Depth is interpolated
// perspective-correctly (linearly in 1/z) and sampled at pixel centres.
MeshRender render_mesh(const TriMesh& mesh, const Pose& pose, const Intrinsics& intr, const RenderOptions& opts);

// Each projected point fills a (2r+1)^2 square with its depth, nearest wins.
DepthImage render_points(const PointCloud& cloud, const Pose& pose, const Intrinsics& intr,
                         const RenderOptions& opts);

DepthImage render_depth(const TriMesh& mesh, const CameraView& view, const RenderOptions& opts);
DepthImage render_depth(const PointCloud& cloud, const CameraView& view, const RenderOptions& opts);

// A scan as loaded from disk: the points always, the faces when the file has them.
struct ScanGeometry {
    PointCloud cloud;
    std::optional<TriMesh> mesh;
};

// Renders the mesh when present, otherwise splats the cloud.
DepthImage render_depth(const ScanGeometry& scan, const CameraView& view, const RenderOptions& opts);

}  // namespace scd
