#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "scd/eval.hpp"

using namespace scd;

namespace {

std::vector<std::uint32_t> range(std::uint32_t a, std::uint32_t b) {
    std::vector<std::uint32_t> v(b - a);
    std::iota(v.begin(), v.end(), a);
    return v;
}

Detection det(std::uint32_t id, std::vector<std::uint32_t> pts, double s) {
    Detection d;
    d.id = id;
    d.point_indices = std::move(pts);
    d.score = s;
    return d;
}

GroundTruth gt_of(std::vector<std::vector<std::uint32_t>> sets) {
    GroundTruth gt;
    std::uint32_t id = 1;
    for (auto& s : sets) gt.changed_instances.push_back({id++, std::move(s)});
    return gt;
}

}  // namespace

TEST_CASE("point IoU examples") {
    const auto g = range(0, 100);
    CHECK(iou(g, g) == 1.0);
    CHECK(iou(range(0, 10), range(10, 20)) == 0.0);
    CHECK(iou(range(0, 50), g) == 0.5);
    CHECK(iou({}, {}) == 0.0);
}

TEST_CASE("box IoU") {
    Aabb a{Vec3(0, 0, 0), Vec3(2, 1, 1)}, b{Vec3(1, 0, 0), Vec3(3, 1, 1)};
    CHECK(box_iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(box_iou(a, a) == doctest::Approx(1.0));
}

TEST_CASE("recall examples") {
    // GT0 matched at 0.6, GT1 at 0.1.
    const auto gt = gt_of({range(0, 100), range(100, 200)});
    DetectionSet ds;
    ds.detections = {det(0, range(0, 60), 0.9), det(1, range(100, 110), 0.5)};
    CHECK(iou(ds.detections[0].point_indices, gt.changed_instances[0].point_indices) == doctest::Approx(0.6));
    CHECK(iou(ds.detections[1].point_indices, gt.changed_instances[1].point_indices) == doctest::Approx(0.1));
    CHECK(recall_at(ds, gt, 0.5) == 50.0);
    CHECK(recall_at(ds, gt, 0.05) == 100.0);
    double prev = 101;
    for (double k = 0.0; k <= 1.0; k += 0.05) {
        const double r = recall_at(ds, gt, k);
        CHECK(r <= prev);
        prev = r;
    }
    CHECK_THROWS_AS(recall_at(ds, GroundTruth{}, 0.5), ValidationError);
}

TEST_CASE("greedy matching is one-to-one") {
    const auto gt = gt_of({range(0, 100), range(50, 150)});
    DetectionSet ds;
    ds.detections = {det(0, range(0, 100), 1.0)};
    const auto m = greedy_match(ds, gt);
    REQUIRE(m.size() == 1);
    CHECK(m[0].gt == 0);
    CHECK(recall_at(ds, gt, 0.25) == 50.0);
    // Adding a detection never lowers recall.
    ds.detections.push_back(det(1, range(100, 150), 0.5));
    CHECK(recall_at(ds, gt, 0.25) == 100.0);
}

TEST_CASE("average precision examples") {
    const auto gt = gt_of({range(0, 100)});
    DetectionSet exact;
    exact.detections = {det(0, range(0, 100), 0.7)};
    CHECK(average_precision(exact, gt) == doctest::Approx(1.0));
    CHECK(average_precision(DetectionSet{}, gt) == 0.0);

    DetectionSet tp_fp;
    tp_fp.detections = {det(0, range(0, 100), 0.9), det(1, range(500, 600), 0.8)};
    CHECK(average_precision(tp_fp, gt) == doctest::Approx(1.0));

    DetectionSet fp_tp;
    fp_tp.detections = {det(0, range(500, 600), 0.9), det(1, range(0, 100), 0.8)};
    CHECK(average_precision(fp_tp, gt) == doctest::Approx(0.5));
}

TEST_CASE("evaluate report") {
    const auto gt = gt_of({range(0, 100), range(100, 200)});
    DetectionSet ds;
    ds.detections = {det(0, range(0, 60), 0.9), det(1, range(100, 110), 0.5)};
    const std::vector<double> ks{0.2, 0.25, 0.5};
    const auto r = evaluate(ds, gt, ks);
    CHECK(r.recall.at(0.5) == 50.0);
    CHECK(r.gt_count == 2);
    CHECK(r.detection_count == 2);
    REQUIRE(r.gt_best_iou.size() == 2);
    CHECK(r.gt_best_iou[0] == doctest::Approx(0.6));
    CHECK(r.ap25 >= 0.0);
    CHECK(r.ap25 <= 1.0);
    CHECK(!r.table().empty());
    CHECK(r.to_json(gt).contains("recall"));
}
