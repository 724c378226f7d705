#include "scd/supervoxel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <span>
#include <tuple>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "scd/spatial_grid.hpp"

namespace scd {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

Vec3 plane_normal(std::span<const Vec3> pts, const std::vector<std::uint32_t>& idx) {
    if (idx.size() < 3) return Vec3::UnitZ();
    Vec3 mean = Vec3::Zero();
    for (std::uint32_t i : idx) mean += pts[i];
    mean /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (std::uint32_t i : idx) {
        const Vec3 d = pts[i] - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 n = eig.eigenvectors().col(0);
    if (!n.allFinite() || n.norm() == 0.0) return Vec3::UnitZ();
    n.normalize();
    // Canonical sign so that results do not depend on solver internals.
    for (int k = 2; k >= 0; --k) {
        if (n[k] != 0.0) {
            if (n[k] < 0.0) n = -n;
            break;
        }
    }
    return n;
}

std::vector<Vec3> fit_normals(std::span<const Vec3> pts, std::size_t k, double spacing_hint) {
    const double cell = std::max(spacing_hint, 1e-6);
    SpatialGrid grid(pts, cell);
    std::vector<Vec3> normals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<std::uint32_t> nn = grid.knn(pts[i], k, cell);
        double r = cell;
        while (nn.size() < k && r < 8.0 * cell) {
            r *= 2.0;
            nn = grid.knn(pts[i], k, r);
        }
        normals[i] = plane_normal(pts, nn);
    }
    return normals;
}

struct Voxel {
    Vec3 centroid = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    std::vector<std::uint32_t> points;
    std::vector<std::uint32_t> neighbors;
};

struct Features {
    Vec3 position;
    Vec3 color;
    Vec3 normal;
};

class Segmenter {
public:
    Segmenter(const PointCloud& cloud, const SupervoxelParams& params) : cloud_(cloud), params_(params) {
        voxelize();
        max_growth_ = params_.seed_resolution - std::sqrt(3.0) * params_.voxel_resolution;
        max_growth_ = std::max(max_growth_, 0.5 * params_.seed_resolution);
        spatial_norm_ = 1.0 / (9.0 * params_.seed_resolution * params_.seed_resolution);
    }

    SupervoxelGraph run();

private:
    void voxelize();
    std::vector<std::uint32_t> grid_seeds(const std::vector<std::uint32_t>& candidates, bool discard_isolated) const;
    double distance(const Voxel& v, const Features& f) const;
    // Priority flood from `starts`; only voxels flagged in `open` may be claimed.
    void grow(const std::vector<std::uint32_t>& starts, const std::vector<Features>& features,
              std::vector<std::uint32_t>& label, std::uint32_t first_label) const;
    Features features_of(const std::vector<std::uint32_t>& members) const;

    const PointCloud& cloud_;
    SupervoxelParams params_;
    std::vector<Voxel> voxels_;
    double max_growth_ = 0.0;
    double spatial_norm_ = 0.0;
};

void Segmenter::voxelize() {
    const double vr = params_.voxel_resolution;
    std::map<VoxelKey, std::vector<std::uint32_t>> by_key;
    for (std::uint32_t i = 0; i < cloud_.size(); ++i) by_key[VoxelKey::of(cloud_.positions[i], vr)].push_back(i);

    std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> index;
    index.reserve(by_key.size());
    voxels_.reserve(by_key.size());
    for (auto& [key, pts] : by_key) {
        Voxel v;
        v.points = std::move(pts);
        for (std::uint32_t p : v.points) {
            v.centroid += cloud_.positions[p];
            if (cloud_.has_colors()) v.color += cloud_.colors[p];
        }
        v.centroid /= static_cast<double>(v.points.size());
        v.color /= static_cast<double>(v.points.size());
        index.emplace(key, static_cast<std::uint32_t>(voxels_.size()));
        voxels_.push_back(std::move(v));
    }
    std::uint32_t vi = 0;
    for (const auto& [key, _] : by_key) {
        for (const auto& o : neighbor_offsets_26()) {
            auto it = index.find(key.offset(o[0], o[1], o[2]));
            if (it != index.end()) voxels_[vi].neighbors.push_back(it->second);
        }
        std::sort(voxels_[vi].neighbors.begin(), voxels_[vi].neighbors.end());
        ++vi;
    }

    if (cloud_.has_normals()) {
        for (Voxel& v : voxels_) {
            const Vec3 ref = cloud_.normals[v.points.front()];
            Vec3 n = Vec3::Zero();
            for (std::uint32_t p : v.points) {
                const Vec3& pn = cloud_.normals[p];
                n += pn.dot(ref) < 0.0 ? Vec3(-pn) : pn;
            }
            v.normal = n.norm() > 0.0 ? Vec3(n.normalized()) : ref;
        }
    } else {
        std::vector<Vec3> centroids;
        centroids.reserve(voxels_.size());
        for (const Voxel& v : voxels_) centroids.push_back(v.centroid);
        const std::vector<Vec3> normals = fit_normals(centroids, 16, 3.0 * vr);
        for (std::size_t i = 0; i < voxels_.size(); ++i) voxels_[i].normal = normals[i];
    }
}

std::vector<std::uint32_t> Segmenter::grid_seeds(const std::vector<std::uint32_t>& candidates,
                                                 bool discard_isolated) const {
    const double sr = params_.seed_resolution;
    std::map<VoxelKey, std::vector<std::uint32_t>> cells;
    for (std::uint32_t v : candidates) cells[VoxelKey::of(voxels_[v].centroid, sr)].push_back(v);

    std::vector<Vec3> centroids;
    if (discard_isolated) {
        centroids.reserve(voxels_.size());
        for (const Voxel& v : voxels_) centroids.push_back(v.centroid);
    }
    std::optional<SpatialGrid> grid;
    if (discard_isolated) grid.emplace(centroids, 0.5 * sr);

    std::vector<std::uint32_t> seeds;
    for (const auto& [key, members] : cells) {
        Vec3 mean = Vec3::Zero();
        for (std::uint32_t v : members) mean += voxels_[v].centroid;
        mean /= static_cast<double>(members.size());
        std::uint32_t best = members.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::uint32_t v : members) {
            const double d = (voxels_[v].centroid - mean).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = v;
            }
        }
        if (discard_isolated && grid->within(voxels_[best].centroid, 0.5 * sr).size() < 2) continue;
        seeds.push_back(best);
    }
    return seeds;
}

double Segmenter::distance(const Voxel& v, const Features& f) const {
    const double dc2 = (v.color - f.color).squaredNorm();
    const double ds2 = (v.centroid - f.position).squaredNorm();
    const double dn = 1.0 - std::abs(v.normal.dot(f.normal));
    return std::sqrt(params_.weight_color * dc2 + params_.weight_spatial * ds2 * spatial_norm_ +
                     params_.weight_normal * dn * dn);
}

Features Segmenter::features_of(const std::vector<std::uint32_t>& members) const {
    Features f{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    double count = 0.0;
    const Vec3 ref = voxels_[members.front()].normal;
    for (std::uint32_t m : members) {
        const Voxel& v = voxels_[m];
        const double w = static_cast<double>(v.points.size());
        f.position += w * v.centroid;
        f.color += w * v.color;
        f.normal += w * (v.normal.dot(ref) < 0.0 ? Vec3(-v.normal) : v.normal);
        count += w;
    }
    f.position /= count;
    f.color /= count;
    f.normal = f.normal.norm() > 0.0 ? Vec3(f.normal.normalized()) : ref;
    return f;
}

void Segmenter::grow(const std::vector<std::uint32_t>& starts, const std::vector<Features>& features,
                     std::vector<std::uint32_t>& label, std::uint32_t first_label) const {
    using Entry = std::tuple<double, std::uint32_t, std::uint32_t>;  // distance, label, voxel
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    const double limit2 = max_growth_ * max_growth_;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        queue.emplace(-1.0, first_label + static_cast<std::uint32_t>(s), starts[s]);
    }
    while (!queue.empty()) {
        const auto [d, lab, vox] = queue.top();
        queue.pop();
        if (label[vox] != kUnassigned) continue;
        label[vox] = lab;
        const std::size_t s = lab - first_label;
        const Vec3& origin = voxels_[starts[s]].centroid;
        for (std::uint32_t nb : voxels_[vox].neighbors) {
            if (label[nb] != kUnassigned) continue;
            if ((voxels_[nb].centroid - origin).squaredNorm() > limit2) continue;
            queue.emplace(distance(voxels_[nb], features[s]), lab, nb);
        }
    }
}

SupervoxelGraph Segmenter::run() {
    const std::uint32_t nv = static_cast<std::uint32_t>(voxels_.size());
    std::vector<std::uint32_t> all(nv);
    for (std::uint32_t i = 0; i < nv; ++i) all[i] = i;

    std::vector<std::uint32_t> starts = grid_seeds(all, true);
    std::vector<Features> feats;
    for (std::uint32_t s : starts) feats.push_back({voxels_[s].centroid, voxels_[s].color, voxels_[s].normal});

    std::vector<std::uint32_t> label(nv, kUnassigned);
    for (int it = 0; it < std::max(1, params_.max_iterations); ++it) {
        std::fill(label.begin(), label.end(), kUnassigned);
        grow(starts, feats, label, 0);
        if (it + 1 == std::max(1, params_.max_iterations)) break;
        std::vector<std::vector<std::uint32_t>> members(starts.size());
        for (std::uint32_t v = 0; v < nv; ++v)
            if (label[v] != kUnassigned) members[label[v]].push_back(v);
        std::vector<std::uint32_t> next_starts;
        std::vector<Features> next_feats;
        for (const auto& m : members) {
            if (m.empty()) continue;
            const Features f = features_of(m);
            std::uint32_t best = m.front();
            double best_d = std::numeric_limits<double>::infinity();
            for (std::uint32_t v : m) {
                const double d = (voxels_[v].centroid - f.position).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = v;
                }
            }
            next_starts.push_back(best);
            next_feats.push_back(f);
        }
        starts = std::move(next_starts);
        feats = std::move(next_feats);
    }

    // Voxels out of reach of every seed get seeded among themselves until none remain.
    std::uint32_t next_label = static_cast<std::uint32_t>(starts.size());
    while (true) {
        std::vector<std::uint32_t> left;
        for (std::uint32_t v = 0; v < nv; ++v)
            if (label[v] == kUnassigned) left.push_back(v);
        if (left.empty()) break;
        const std::vector<std::uint32_t> extra = grid_seeds(left, false);
        std::vector<Features> extra_feats;
        for (std::uint32_t s : extra) extra_feats.push_back({voxels_[s].centroid, voxels_[s].color, voxels_[s].normal});
        grow(extra, extra_feats, label, next_label);
        next_label += static_cast<std::uint32_t>(extra.size());
    }

    // Compact labels (a seed can lose every voxel only if it never claimed its start).
    std::vector<std::uint32_t> remap(next_label, kUnassigned);
    std::uint32_t count = 0;
    for (std::uint32_t v = 0; v < nv; ++v) {
        if (remap[label[v]] == kUnassigned) remap[label[v]] = 0;
    }
    for (std::uint32_t l = 0; l < next_label; ++l)
        if (remap[l] != kUnassigned) remap[l] = count++;

    SupervoxelGraph g;
    g.assignment.assign(cloud_.size(), 0);
    g.supervoxels.resize(count);
    std::vector<std::vector<std::uint32_t>> sv_voxels(count);
    for (std::uint32_t v = 0; v < nv; ++v) {
        const std::uint32_t s = remap[label[v]];
        sv_voxels[s].push_back(v);
        for (std::uint32_t p : voxels_[v].points) {
            g.assignment[p] = s;
            g.supervoxels[s].point_indices.push_back(p);
        }
    }
    for (std::uint32_t s = 0; s < count; ++s) {
        Supervoxel& sv = g.supervoxels[s];
        std::sort(sv.point_indices.begin(), sv.point_indices.end());
        const Features f = features_of(sv_voxels[s]);
        sv.centroid = f.position;
        sv.mean_color = f.color;
        sv.mean_normal = f.normal;
    }
    for (std::uint32_t v = 0; v < nv; ++v) {
        const std::uint32_t a = remap[label[v]];
        for (std::uint32_t nb : voxels_[v].neighbors) {
            const std::uint32_t b = remap[label[nb]];
            if (a < b) g.edges.emplace_back(a, b);
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

}  // namespace

void SupervoxelParams::validate() const {
    if (!(voxel_resolution > 0.0) || !(seed_resolution > voxel_resolution)) {
        throw ValidationError("supervoxel params: need seed_resolution > voxel_resolution > 0");
    }
    if (weight_color < 0.0 || weight_spatial < 0.0 || weight_normal < 0.0 ||
        weight_color + weight_spatial + weight_normal <= 0.0) {
        throw ValidationError("supervoxel params: weights must be non-negative and not all zero");
    }
    if (max_iterations < 1) throw ValidationError("supervoxel params: max_iterations must be >= 1");
}

void SupervoxelGraph::validate(std::size_t cloud_size) const {
    if (assignment.size() != cloud_size) throw ValidationError("supervoxel graph: assignment length mismatch");
    std::size_t total = 0;
    for (std::uint32_t s = 0; s < supervoxels.size(); ++s) {
        for (std::uint32_t p : supervoxels[s].point_indices) {
            if (p >= cloud_size || assignment[p] != s) {
                throw ValidationError("supervoxel graph: point lists disagree with assignment");
            }
        }
        total += supervoxels[s].point_indices.size();
    }
    if (total != cloud_size) throw ValidationError("supervoxel graph: not a partition of the cloud");
    for (const auto& [a, b] : edges) {
        if (a >= b || b >= supervoxels.size()) throw ValidationError("supervoxel graph: invalid edge");
    }
}

std::vector<Vec3> estimate_normals(const PointCloud& cloud, std::size_t k) {
    if (cloud.empty()) return {};
    Vec3 lo = cloud.positions.front(), hi = lo;
    for (const Vec3& p : cloud.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    // Cell sized so a k-neighbourhood spans roughly one cell on a surface.
    const double area_guess = std::max((hi - lo).squaredNorm(), 1e-12);
    const double spacing = std::sqrt(area_guess / static_cast<double>(cloud.size()));
    return fit_normals(cloud.positions, k, spacing * std::sqrt(static_cast<double>(k)));
}

SupervoxelGraph build_supervoxels(const PointCloud& cloud, const SupervoxelParams& params) {
    params.validate();
    if (cloud.empty()) throw ValidationError("build_supervoxels: empty cloud");
    Segmenter seg(cloud, params);
    return seg.run();
}

std::vector<std::uint32_t> mark_changed(const SupervoxelGraph& graph, const SeedSet& seeds,
                                        std::size_t min_seed_points) {
    std::vector<std::size_t> counts(graph.size(), 0);
    for (const auto& [idx, _] : seeds.seeds) {
        if (idx >= graph.assignment.size()) throw ValidationError("mark_changed: seed index out of range");
        ++counts[graph.assignment[idx]];
    }
    std::vector<std::uint32_t> out;
    const std::size_t need = std::max<std::size_t>(1, min_seed_points);
    for (std::uint32_t s = 0; s < counts.size(); ++s)
        if (counts[s] >= need) out.push_back(s);
    return out;
}

}  // namespace scd
