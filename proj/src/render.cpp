#include "scd/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace scd {

namespace {

constexpr double kNear = 1e-3;

// Sutherland-Hodgman against the plane z = kNear.
std::vector<Vec3> clip_near(const std::array<Vec3, 3>& tri) {
    std::vector<Vec3> out;
    out.reserve(4);
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec3& a = tri[i];
        const Vec3& b = tri[(i + 1) % 3];
        const bool a_in = a.z() >= kNear;
        const bool b_in = b.z() >= kNear;
        if (a_in) out.push_back(a);
        if (a_in != b_in) {
            const double t = (kNear - a.z()) / (b.z() - a.z());
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

struct ScreenVertex {
    double u, v, inv_z;
};

void raster_triangle(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, std::int32_t face_id,
                     std::vector<double>& zbuf, Image<std::int32_t>& faces, const Intrinsics& intr) {
    const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
    if (area == 0.0 || !std::isfinite(area)) return;
    const double min_u = std::min({a.u, b.u, c.u});
    const double max_u = std::max({a.u, b.u, c.u});
    const double min_v = std::min({a.v, b.v, c.v});
    const double max_v = std::max({a.v, b.v, c.v});
    const int c0 = std::max(0, static_cast<int>(std::ceil(min_u)));
    const int c1 = std::min(intr.width - 1, static_cast<int>(std::floor(max_u)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(min_v)));
    const int r1 = std::min(intr.height - 1, static_cast<int>(std::floor(max_v)));
    if (c0 > c1 || r0 > r1) return;
    const double inv_area = 1.0 / area;
    for (int r = r0; r <= r1; ++r) {
        const double y = r;
        for (int col = c0; col <= c1; ++col) {
            const double x = col;
            double w0 = ((b.u - x) * (c.v - y) - (b.v - y) * (c.u - x)) * inv_area;
            double w1 = ((c.u - x) * (a.v - y) - (c.v - y) * (a.u - x)) * inv_area;
            double w2 = 1.0 - w0 - w1;
            if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
            const double inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
            if (!(inv_z > 0.0)) continue;
            const double z = 1.0 / inv_z;
            const std::size_t k = static_cast<std::size_t>(r) * static_cast<std::size_t>(intr.width) + static_cast<std::size_t>(col);
            if (z < zbuf[k]) {
                zbuf[k] = z;
                faces.at(col, r) = face_id;
            }
        }
    }
}

}  // namespace

void RenderOptions::validate() const {
    if (!(max_range > 0.0)) throw ValidationError("render: max_range must be positive");
    if (splat_radius_px < 0) throw ValidationError("render: splat radius must be >= 0");
}

MeshRender render_mesh(const TriMesh& mesh, const Pose& pose, const Intrinsics& intr, const RenderOptions& opts) {
    opts.validate();
    intr.validate();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> zbuf(static_cast<std::size_t>(intr.width) * static_cast<std::size_t>(intr.height), inf);
    MeshRender out{DepthImage(intr.width, intr.height, 0.0f), Image<std::int32_t>(intr.width, intr.height, -1)};

    std::vector<Vec3> cam(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) cam[i] = pose.world_to_camera(mesh.vertices[i]);

    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const std::array<Vec3, 3> tri{cam[face[0]], cam[face[1]], cam[face[2]]};
        if (opts.backface_culling) {
            const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
            if (n.dot(tri[0]) >= 0.0) continue;
        }
        const std::vector<Vec3> poly = clip_near(tri);
        if (poly.size() < 3) continue;
        std::vector<ScreenVertex> sv;
        sv.reserve(poly.size());
        for (const Vec3& p : poly) {
            sv.push_back({intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy, 1.0 / p.z()});
        }
        for (std::size_t k = 2; k < sv.size(); ++k) {
            raster_triangle(sv[0], sv[k - 1], sv[k], static_cast<std::int32_t>(f), zbuf, out.face, intr);
        }
    }
    for (std::size_t k = 0; k < zbuf.size(); ++k) {
        if (std::isfinite(zbuf[k]) && zbuf[k] <= opts.max_range) {
            out.depth.data()[k] = static_cast<float>(zbuf[k]);
        } else {
            out.face.data()[k] = -1;
        }
    }
    return out;
}

DepthImage render_points(const PointCloud& cloud, const Pose& pose, const Intrinsics& intr,
                         const RenderOptions& opts) {
    opts.validate();
    intr.validate();
    DepthImage depth(intr.width, intr.height, 0.0f);
    const int r = opts.splat_radius_px;
    for (const Vec3& pw : cloud.positions) {
        const auto proj = project(pose.world_to_camera(pw), intr);
        if (!proj || proj->z > opts.max_range) continue;
        const float z = static_cast<float>(proj->z);
        if (!valid_depth(z)) continue;
        const int pc = proj->col();
        const int pr = proj->row();
        for (int row = std::max(0, pr - r); row <= std::min(intr.height - 1, pr + r); ++row) {
            for (int col = std::max(0, pc - r); col <= std::min(intr.width - 1, pc + r); ++col) {
                float& d = depth.at(col, row);
                if (!valid_depth(d) || z < d) d = z;
            }
        }
    }
    return depth;
}

DepthImage render_depth(const TriMesh& mesh, const CameraView& view, const RenderOptions& opts) {
    return render_mesh(mesh, view.pose, view.intrinsics, opts).depth;
}

DepthImage render_depth(const PointCloud& cloud, const CameraView& view, const RenderOptions& opts) {
    return render_points(cloud, view.pose, view.intrinsics, opts);
}

DepthImage render_depth(const ScanGeometry& scan, const CameraView& view, const RenderOptions& opts) {
    if (scan.mesh && !scan.mesh->empty()) return render_depth(*scan.mesh, view, opts);
    return render_depth(scan.cloud, view, opts);
}

}  // namespace scd
