#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "scd/geometry.hpp"
#include "scd/spatial_grid.hpp"

namespace scd {

struct ResidualImage {
    Image<float> residual;     // |d_ref - d_rescan|, 0 where invalid
    Image<float> difference;   // d_ref - d_rescan; positive where the rescan surface is nearer
    Image<std::uint8_t> valid; // both depths valid

    int width() const { return residual.width(); }
    int height() const { return residual.height(); }
};

using BinaryImage = Image<std::uint8_t>;

enum class ThresholdMode { Fixed, RobustMad };

// Which depth changes may seed. `Any` flags |difference| > tau. `Nearer` only
// flags pixels where the rescan surface is in front of the reference one
// (difference > tau), i.e. geometry that appeared in the rescan.
enum class ChangeDirection { Any, Nearer };

struct ThresholdPolicy {
    ThresholdMode mode = ThresholdMode::Fixed;
    double tau_fixed = 0.10;
    double mad_k = 6.0;
    double tau_min = 0.05;
    ChangeDirection direction = ChangeDirection::Nearer;

    void validate() const;
};

ResidualImage depth_residual(const DepthImage& ref_depth, const DepthImage& rescan_depth);

// Threshold that `threshold` applies to this residual image.
double threshold_value(const ResidualImage& residual, const ThresholdPolicy& policy);
BinaryImage threshold(const ResidualImage& residual, const ThresholdPolicy& policy);

// Erosion then dilation with a (2r+1)^2 square; removes flagged structures
// thinner than 2r+1 pixels. r = 0 returns the input.
BinaryImage open_mask(const BinaryImage& flags, int radius);

struct PixelProvenance {
    std::uint32_t view = 0;
    int u = 0;
    int v = 0;

    bool operator==(const PixelProvenance&) const = default;
    auto operator<=>(const PixelProvenance&) const = default;
};

// Rescan point index -> pixels that flagged it (never empty).
struct SeedSet {
    std::map<std::uint32_t, std::vector<PixelProvenance>> seeds;

    std::size_t size() const { return seeds.size(); }
    bool empty() const { return seeds.empty(); }
    bool contains(std::uint32_t idx) const { return seeds.count(idx) != 0; }
    std::vector<std::uint32_t> indices() const;
    void add(std::uint32_t idx, const PixelProvenance& px);
    void merge(const SeedSet& other);
};

// Unprojects every flagged pixel with the rescan depth and snaps it to the
// nearest rescan point within snap_radius; unmatched pixels are dropped.
// `grid` must index `rescan.positions`.
SeedSet backproject_seeds(const BinaryImage& flags, const DepthImage& rescan_depth, const CameraView& view,
                          std::uint32_t view_id, const SpatialGrid& grid, double snap_radius = 0.03);

SeedSet accumulate(std::span<const SeedSet> per_view);

}  // namespace scd
