#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "scd/geometry.hpp"

namespace scd {

struct VoxelKey {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t z = 0;

    static VoxelKey of(const Vec3& p, double cell);
    VoxelKey offset(int dx, int dy, int dz) const { return {x + dx, y + dy, z + dz}; }

    bool operator==(const VoxelKey&) const = default;
    auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint32_t>(k.x);
        h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.y);
        h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.z);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

// The 26 neighbour offsets of a voxel.
const std::array<std::array<int, 3>, 26>& neighbor_offsets_26();

// Uniform hash grid over a fixed point set. Ties in distance resolve to the
// lower point index so every query is deterministic.
class SpatialGrid {
public:
    SpatialGrid(std::span<const Vec3> points, double cell);

    double cell() const { return cell_; }

    std::optional<std::uint32_t> nearest(const Vec3& query, double max_radius) const;
    std::vector<std::uint32_t> within(const Vec3& query, double radius) const;
    // Up to k nearest points within max_radius, closest first.
    std::vector<std::uint32_t> knn(const Vec3& query, std::size_t k, double max_radius) const;

private:
    template <typename Fn>
    void visit(const Vec3& query, double radius, Fn&& fn) const;

    std::span<const Vec3> points_;
    double cell_;
    std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> cells_;
};

}  // namespace scd
