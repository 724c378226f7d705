#include "scd/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scd {

VoxelKey VoxelKey::of(const Vec3& p, double cell) {
    return {static_cast<std::int32_t>(std::floor(p.x() / cell)),
            static_cast<std::int32_t>(std::floor(p.y() / cell)),
            static_cast<std::int32_t>(std::floor(p.z() / cell))};
}

const std::array<std::array<int, 3>, 26>& neighbor_offsets_26() {
    static const auto offsets = [] {
        std::array<std::array<int, 3>, 26> out{};
        std::size_t n = 0;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx != 0 || dy != 0 || dz != 0) out[n++] = {dx, dy, dz};
        return out;
    }();
    return offsets;
}

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell) : points_(points), cell_(cell) {
    if (!(cell > 0.0)) throw ValidationError("spatial grid: cell size must be positive");
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        cells_[VoxelKey::of(points[i], cell)].push_back(i);
    }
}

template <typename Fn>
void SpatialGrid::visit(const Vec3& query, double radius, Fn&& fn) const {
    const VoxelKey lo = VoxelKey::of(query - Vec3::Constant(radius), cell_);
    const VoxelKey hi = VoxelKey::of(query + Vec3::Constant(radius), cell_);
    for (std::int32_t z = lo.z; z <= hi.z; ++z)
        for (std::int32_t y = lo.y; y <= hi.y; ++y)
            for (std::int32_t x = lo.x; x <= hi.x; ++x) {
                auto it = cells_.find({x, y, z});
                if (it == cells_.end()) continue;
                for (std::uint32_t idx : it->second) fn(idx);
            }
}

std::optional<std::uint32_t> SpatialGrid::nearest(const Vec3& query, double max_radius) const {
    std::optional<std::uint32_t> best;
    double best_d2 = max_radius * max_radius;
    visit(query, max_radius, [&](std::uint32_t idx) {
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && (!best || idx < *best))) {
            best_d2 = d2;
            best = idx;
        }
    });
    return best;
}

std::vector<std::uint32_t> SpatialGrid::within(const Vec3& query, double radius) const {
    std::vector<std::uint32_t> out;
    const double r2 = radius * radius;
    visit(query, radius, [&](std::uint32_t idx) {
        if ((points_[idx] - query).squaredNorm() <= r2) out.push_back(idx);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> SpatialGrid::knn(const Vec3& query, std::size_t k, double max_radius) const {
    std::vector<std::pair<double, std::uint32_t>> found;
    const double r2 = max_radius * max_radius;
    visit(query, max_radius, [&](std::uint32_t idx) {
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 <= r2) found.emplace_back(d2, idx);
    });
    const std::size_t keep = std::min(k, found.size());
    std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(keep), found.end());
    std::vector<std::uint32_t> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(found[i].second);
    return out;
}

}  // namespace scd
