#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "scd/supervoxel.hpp"
#include "scd/synth.hpp"

using namespace scd;

namespace {

using Cell = std::array<long, 3>;

Cell cell_of(const Vec3& p, double s) {
    return {static_cast<long>(std::floor(p.x() / s)), static_cast<long>(std::floor(p.y() / s)),
            static_cast<long>(std::floor(p.z() / s))};
}

// Number of 26-connected voxel components among the given points.
int voxel_components(const PointCloud& c, const std::vector<std::uint32_t>& idx, double s) {
    std::set<Cell> cells;
    for (auto i : idx) cells.insert(cell_of(c.positions[i], s));
    std::set<Cell> seen;
    int comps = 0;
    for (const auto& start : cells) {
        if (seen.count(start)) continue;
        ++comps;
        std::queue<Cell> q;
        q.push(start);
        seen.insert(start);
        while (!q.empty()) {
            const Cell k = q.front();
            q.pop();
            for (long dx = -1; dx <= 1; ++dx)
                for (long dy = -1; dy <= 1; ++dy)
                    for (long dz = -1; dz <= 1; ++dz) {
                        const Cell n{k[0] + dx, k[1] + dy, k[2] + dz};
                        if (cells.count(n) && !seen.count(n)) {
                            seen.insert(n);
                            q.push(n);
                        }
                    }
        }
    }
    return comps;
}

void add_cube(PointCloud& c, const Vec3& origin, double side, double step, const Vec3& color) {
    const int n = static_cast<int>(std::round(side / step));
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= n; ++k) {
                if (i != 0 && i != n && j != 0 && j != n && k != 0 && k != n) continue;
                c.positions.push_back(origin + step * Vec3(i, j, k));
                c.colors.push_back(color);
            }
}

bool graph_connected(const SupervoxelGraph& g) {
    if (g.size() == 0) return true;
    std::vector<std::vector<std::uint32_t>> adj(g.size());
    for (const auto& [a, b] : g.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<bool> seen(g.size(), false);
    std::queue<std::uint32_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t n = 1;
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (auto v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                ++n;
                q.push(v);
            }
    }
    return n == g.size();
}

void check_invariants(const PointCloud& cloud, const SupervoxelGraph& g, const SupervoxelParams& p) {
    CHECK_NOTHROW(g.validate(cloud.size()));
    REQUIRE(g.assignment.size() == cloud.size());
    std::size_t total = 0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        const auto& sv = g.supervoxels[s];
        total += sv.point_indices.size();
        CHECK(!sv.point_indices.empty());
        for (auto i : sv.point_indices) {
            CHECK(g.assignment[i] == s);
            CHECK((cloud.positions[i] - sv.centroid).norm() <= 2 * p.seed_resolution);
        }
        CHECK(voxel_components(cloud, sv.point_indices, p.voxel_resolution) == 1);
    }
    CHECK(total == cloud.size());
    for (const auto& [a, b] : g.edges) {
        CHECK(a < b);
        CHECK(b < g.size());
    }
}

}  // namespace

TEST_CASE("two distant cubes give two supervoxels and no edges") {
    PointCloud c;
    add_cube(c, Vec3(0, 0, 0), 0.1, 0.01, Vec3(1, 0, 0));
    add_cube(c, Vec3(2.1, 0, 0), 0.1, 0.01, Vec3(0, 1, 0));
    const SupervoxelParams p;
    const auto g = build_supervoxels(c, p);
    CHECK(g.size() == 2);
    CHECK(g.edges.empty());
    check_invariants(c, g, p);
}

TEST_CASE("single point") {
    PointCloud c;
    c.positions = {Vec3(1, 2, 3)};
    const auto g = build_supervoxels(c);
    REQUIRE(g.size() == 1);
    CHECK(g.edges.empty());
    CHECK(g.supervoxels[0].point_indices == std::vector<std::uint32_t>{0});
}

TEST_CASE("empty cloud and bad params are rejected") {
    CHECK_THROWS_AS(build_supervoxels(PointCloud{}), ValidationError);
    SupervoxelParams p;
    p.seed_resolution = 0.01;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.weight_color = p.weight_spatial = p.weight_normal = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("flat plane yields about sixteen connected supervoxels") {
    PointCloud c;
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 200; ++j) {
            c.positions.emplace_back(0.0025 + 0.005 * i, 0.0025 + 0.005 * j, 0.0);
            c.colors.emplace_back(0.5, 0.5, 0.5);
        }
    const SupervoxelParams p;
    const auto g = build_supervoxels(c, p);
    CHECK(g.size() >= 8);
    CHECK(g.size() <= 24);
    CHECK(graph_connected(g));
    check_invariants(c, g, p);
}

TEST_CASE("synthetic room: invariants, determinism and purity") {
    const auto spec = synth::preset_moved_and_removed();
    const auto scene = synth::build_state(spec, synth::Epoch::Rescan);
    const SupervoxelParams p;
    const auto g = build_supervoxels(scene.cloud, p);
    check_invariants(scene.cloud, g, p);
    const auto again = build_supervoxels(scene.cloud, p);
    CHECK(again.assignment == g.assignment);
    CHECK(again.edges == g.edges);
    std::size_t pure = 0;
    for (const auto& sv : g.supervoxels) {
        std::set<std::uint32_t> ids;
        for (auto i : sv.point_indices) ids.insert(scene.cloud.instance_ids[i]);
        pure += ids.size() == 1;
    }
    CHECK(static_cast<double>(pure) >= 0.95 * static_cast<double>(g.size()));
}

TEST_CASE("mark_changed examples") {
    SupervoxelGraph g;
    g.assignment = {0, 1, 2, 3, 4, 4, 4, 3, 3};
    g.supervoxels.resize(5);
    SeedSet s;
    s.add(5, {0, 0, 0});
    CHECK(mark_changed(g, s) == std::vector<std::uint32_t>{4});
    CHECK(mark_changed(g, SeedSet{}).empty());
    SeedSet two;
    two.add(3, {0, 0, 0});
    two.add(7, {0, 0, 0});
    CHECK(mark_changed(g, two, 3).empty());
    CHECK(mark_changed(g, two, 2) == std::vector<std::uint32_t>{3});
    SeedSet bad;
    bad.add(100, {0, 0, 0});
    CHECK_THROWS_AS(mark_changed(g, bad), ValidationError);
}

TEST_CASE("normals of a plane are its axis") {
    PointCloud c;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) c.positions.emplace_back(0.01 * i, 0.0, 0.01 * j);
    const auto n = estimate_normals(c);
    REQUIRE(n.size() == c.size());
    for (const auto& v : n) {
        CHECK(v.norm() == doctest::Approx(1.0));
        CHECK(std::abs(v.y()) == doctest::Approx(1.0).epsilon(1e-9));
    }
}
