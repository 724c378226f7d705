#include "scd/seeds.hpp"

#include <algorithm>
#include <cmath>

namespace scd {

namespace {

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

void ThresholdPolicy::validate() const {
    if (!(tau_fixed > 0.0) || !(mad_k > 0.0) || !(tau_min > 0.0)) {
        throw ValidationError("threshold policy: thresholds must be positive");
    }
}

ResidualImage depth_residual(const DepthImage& ref_depth, const DepthImage& rescan_depth) {
    if (!ref_depth.same_shape(rescan_depth)) throw ValidationError("depth_residual: image dimensions differ");
    const int w = ref_depth.width();
    const int h = ref_depth.height();
    ResidualImage out{Image<float>(w, h, 0.0f), Image<float>(w, h, 0.0f), Image<std::uint8_t>(w, h, 0)};
    for (std::size_t k = 0; k < ref_depth.size(); ++k) {
        const float a = ref_depth.data()[k];
        const float b = rescan_depth.data()[k];
        if (!valid_depth(a) || !valid_depth(b)) continue;
        out.valid.data()[k] = 1;
        out.difference.data()[k] = a - b;
        out.residual.data()[k] = std::abs(a - b);
    }
    return out;
}

double threshold_value(const ResidualImage& residual, const ThresholdPolicy& policy) {
    policy.validate();
    if (policy.mode == ThresholdMode::Fixed) return policy.tau_fixed;
    std::vector<double> values;
    for (std::size_t k = 0; k < residual.residual.size(); ++k) {
        if (residual.valid.data()[k]) values.push_back(residual.residual.data()[k]);
    }
    const double med = median(values);
    for (double& v : values) v = std::abs(v - med);
    const double mad = median(std::move(values));
    return std::max(policy.tau_min, policy.mad_k * mad);
}

BinaryImage threshold(const ResidualImage& residual, const ThresholdPolicy& policy) {
    const double tau = threshold_value(residual, policy);
    BinaryImage out(residual.width(), residual.height(), 0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!residual.valid.data()[k]) continue;
        const double r = policy.direction == ChangeDirection::Any ? residual.residual.data()[k]
                                                                  : residual.difference.data()[k];
        if (r > tau) out.data()[k] = 1;
    }
    return out;
}

std::vector<std::uint32_t> SeedSet::indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(seeds.size());
    for (const auto& [idx, _] : seeds) out.push_back(idx);
    return out;
}

void SeedSet::add(std::uint32_t idx, const PixelProvenance& px) {
    auto& prov = seeds[idx];
    const auto it = std::lower_bound(prov.begin(), prov.end(), px);
    if (it == prov.end() || *it != px) prov.insert(it, px);
}

void SeedSet::merge(const SeedSet& other) {
    for (const auto& [idx, prov] : other.seeds) {
        for (const PixelProvenance& px : prov) add(idx, px);
    }
}

SeedSet backproject_seeds(const BinaryImage& flags, const DepthImage& rescan_depth, const CameraView& view,
                          std::uint32_t view_id, const SpatialGrid& grid, double snap_radius) {
    if (!flags.same_shape(rescan_depth)) throw ValidationError("backproject_seeds: image dimensions differ");
    SeedSet out;
    for (int r = 0; r < flags.height(); ++r) {
        for (int c = 0; c < flags.width(); ++c) {
            if (!flags.at(c, r)) continue;
            const float d = rescan_depth.at(c, r);
            if (!valid_depth(d)) continue;
            const Vec3 world = view.pose.camera_to_world(unproject(c, r, d, view.intrinsics));
            if (const auto idx = grid.nearest(world, snap_radius)) out.add(*idx, {view_id, c, r});
        }
    }
    return out;
}

SeedSet accumulate(std::span<const SeedSet> per_view) {
    SeedSet out;
    for (const SeedSet& s : per_view) out.merge(s);
    return out;
}

namespace {

BinaryImage square_filter(const BinaryImage& in, int r, bool erode) {
    const int w = in.width(), h = in.height();
    // Separable: rows then columns.
    BinaryImage tmp(w, h, 0), out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool v = erode;
            for (int dx = -r; dx <= r; ++dx) {
                const int xx = x + dx;
                const bool f = xx >= 0 && xx < w && in.at(xx, y);
                if (erode ? !f : f) {
                    v = !erode;
                    break;
                }
            }
            tmp.at(x, y) = v ? 1 : 0;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool v = erode;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                const bool f = yy >= 0 && yy < h && tmp.at(x, yy);
                if (erode ? !f : f) {
                    v = !erode;
                    break;
                }
            }
            out.at(x, y) = v ? 1 : 0;
        }
    }
    return out;
}

}  // namespace

BinaryImage open_mask(const BinaryImage& flags, int radius) {
    if (radius < 0) throw ValidationError("open_mask: radius must be >= 0");
    if (radius == 0) return flags;
    return square_filter(square_filter(flags, radius, true), radius, false);
}

}  // namespace scd
