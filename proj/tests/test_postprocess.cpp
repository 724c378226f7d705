#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "scd/detection.hpp"

using namespace scd;

namespace {

void add_blob(PointCloud& c, const Vec3& o, int per_side, double step) {
    for (int i = 0; i < per_side; ++i)
        for (int j = 0; j < per_side; ++j)
            for (int k = 0; k < per_side; ++k) c.positions.push_back(o + step * Vec3(i, j, k));
}

std::vector<std::uint32_t> all(const PointCloud& c) {
    std::vector<std::uint32_t> v(c.size());
    std::iota(v.begin(), v.end(), 0u);
    return v;
}

}  // namespace

TEST_CASE("changed points gather labelled supervoxels") {
    SupervoxelGraph g;
    g.supervoxels.resize(3);
    for (std::uint32_t i = 0; i < 40; ++i) g.supervoxels[1].point_indices.push_back(i);
    for (std::uint32_t i = 40; i < 50; ++i) g.supervoxels[2].point_indices.push_back(i);
    g.supervoxels[0].point_indices = {50, 51};
    CHECK(changed_points(g, std::vector<std::uint8_t>{0, 0, 0}).empty());
    const auto one = changed_points(g, std::vector<std::uint8_t>{0, 1, 0});
    CHECK(one == g.supervoxels[1].point_indices);
    const auto two = changed_points(g, std::vector<std::uint8_t>{1, 0, 1});
    CHECK(two.size() == 12);
    CHECK(std::is_sorted(two.begin(), two.end()));
    CHECK_THROWS_AS(changed_points(g, std::vector<std::uint8_t>{1}), ValidationError);
}

TEST_CASE("connected components examples") {
    PointCloud c;
    add_blob(c, Vec3(0, 0, 0), 4, 0.02);  // 64 points
    add_blob(c, Vec3(1, 0, 0), 4, 0.02);
    auto d = connected_components(all(c), c);
    REQUIRE(d.size() == 2);
    CHECK(d.detections[0].point_indices.size() == 64);
    CHECK(d.detections[1].point_indices.size() == 64);
    CHECK_NOTHROW(d.validate());
    CHECK(d.detections[0].bbox.max.x() == doctest::Approx(0.06));

    PointCloud chain;
    for (int i = 0; i < 60; ++i) chain.positions.emplace_back(0.05 * i, 0.01, 0.01);
    CHECK(connected_components(all(chain), chain).size() == 1);

    PointCloud small;
    add_blob(small, Vec3(0, 0, 0), 4, 0.02);
    for (int i = 0; i < 10; ++i) small.positions.emplace_back(2.0 + 0.001 * i, 0, 0);
    const auto s = connected_components(all(small), small);
    CHECK(s.size() == 1);
    CHECK(s.detections[0].point_indices.size() == 64);

    CHECK(connected_components({}, c).size() == 0);
    CHECK_THROWS_AS(connected_components(all(c), c, 0.0), ValidationError);
}

TEST_CASE("scores are seeded fractions and order detections") {
    DetectionSet ds;
    Detection a, b, c;
    for (std::uint32_t i = 0; i < 200; ++i) a.point_indices.push_back(i);
    for (std::uint32_t i = 200; i < 260; ++i) b.point_indices.push_back(i);
    for (std::uint32_t i = 300; i < 400; ++i) c.point_indices.push_back(i);
    ds.detections = {a, b, c};
    SeedSet seeds;
    for (std::uint32_t i = 0; i < 20; ++i) seeds.add(i, {0, 0, 0});
    for (std::uint32_t i = 200; i < 260; ++i) seeds.add(i, {0, 0, 0});
    const auto out = score(ds, seeds);
    REQUIRE(out.size() == 3);
    CHECK(out.detections[0].score == doctest::Approx(1.0));
    CHECK(out.detections[0].point_indices.front() == 200);
    CHECK(out.detections[1].score == doctest::Approx(0.1));
    CHECK(out.detections[2].score == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.detections[i].id == i);
}

TEST_CASE("overlapping detections fail validation") {
    DetectionSet ds;
    Detection a, b;
    a.point_indices = {1, 2};
    b.point_indices = {2, 3};
    ds.detections = {a, b};
    CHECK_THROWS_AS(ds.validate(), ValidationError);
}
