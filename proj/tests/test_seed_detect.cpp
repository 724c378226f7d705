#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <random>
#include <set>

#include "oracles.hpp"
#include "scd/pipeline.hpp"
#include "scd/seeds.hpp"
#include "scd/synth.hpp"
#include "test_util.hpp"

using namespace scd;

namespace {

const Intrinsics kIntr{50.0, 50.0, 10.0, 10.0, 21, 21};

ResidualImage pair_of(std::initializer_list<float> ref, std::initializer_list<float> res) {
    DepthImage a(static_cast<int>(ref.size()), 1), b(static_cast<int>(res.size()), 1);
    std::copy(ref.begin(), ref.end(), a.data().begin());
    std::copy(res.begin(), res.end(), b.data().begin());
    return depth_residual(a, b);
}

}  // namespace

TEST_CASE("depth residual examples") {
    const auto same = pair_of({2.0f, 2.0f}, {2.0f, 2.0f});
    CHECK(same.residual.at(0, 0) == 0.0f);
    CHECK(same.valid.at(1, 0) == 1);

    const auto missing = pair_of({2.0f}, {0.0f});
    CHECK(missing.valid.at(0, 0) == 0);

    const auto r = pair_of({2.0f}, {2.3f});
    CHECK(r.residual.at(0, 0) == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(r.difference.at(0, 0) == doctest::Approx(-0.3).epsilon(1e-6));

    CHECK_THROWS_AS(depth_residual(DepthImage(2, 2), DepthImage(3, 2)), ValidationError);
}

TEST_CASE("fixed threshold examples and direction") {
    // Rescan nearer by 0.02 and by 0.25.
    const auto r = pair_of({2.0f, 2.0f}, {1.98f, 1.75f});
    ThresholdPolicy p;
    const auto flags = threshold(r, p);
    CHECK(flags.at(0, 0) == 0);
    CHECK(flags.at(1, 0) == 1);

    // Rescan farther by 0.25: only Any flags it.
    const auto far = pair_of({2.0f}, {2.25f});
    CHECK(threshold(far, p).at(0, 0) == 0);
    p.direction = ChangeDirection::Any;
    CHECK(threshold(far, p).at(0, 0) == 1);

    const auto zero = pair_of({1.0f, 2.0f, 3.0f}, {1.0f, 2.0f, 3.0f});
    for (auto mode : {ThresholdMode::Fixed, ThresholdMode::RobustMad}) {
        ThresholdPolicy q;
        q.mode = mode;
        const auto flags = threshold(zero, q);
        for (auto v : flags.data()) CHECK(v == 0);
    }

    const auto invalid = pair_of({0.0f, 0.0f}, {0.0f, 1.0f});
    ThresholdPolicy mad;
    mad.mode = ThresholdMode::RobustMad;
    const auto none = threshold(invalid, mad);
    for (auto v : none.data()) CHECK(v == 0);

    ThresholdPolicy bad;
    bad.tau_fixed = -1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("robust MAD threshold flags exactly the outlier mixture") {
    const int w = 100, h = 100;
    DepthImage ref(w, h, 2.5f), res(w, h);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> noise(0.0, 0.02);
    std::vector<bool> outlier(static_cast<std::size_t>(w * h), false);
    for (std::size_t k = 0; k < outlier.size(); ++k) {
        const bool out = k % 100 == 37;
        outlier[k] = out;
        res.data()[k] = 2.5f - static_cast<float>(out ? 0.5 : noise(rng));
    }
    const auto r = depth_residual(ref, res);
    std::vector<double> values(r.residual.data().begin(), r.residual.data().end());
    ThresholdPolicy p;
    p.mode = ThresholdMode::RobustMad;
    const double expected = std::max(p.tau_min, p.mad_k * oracle::mad(values));
    CHECK(threshold_value(r, p) == doctest::Approx(expected).epsilon(1e-9));
    const auto flags = threshold(r, p);
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < outlier.size(); ++k) {
        CHECK(static_cast<bool>(flags.data()[k]) == outlier[k]);
        flagged += flags.data()[k];
    }
    CHECK(flagged == 100);

    // With a tiny floor the MAD term itself decides.
    p.tau_min = 1e-6;
    CHECK(threshold_value(r, p) == doctest::Approx(p.mad_k * oracle::mad(values)).epsilon(1e-9));
}

TEST_CASE("opening removes thin structures and keeps blobs") {
    BinaryImage m(12, 12, 0);
    for (int r = 2; r < 7; ++r)
        for (int c = 2; c < 7; ++c) m.at(c, r) = 1;
    for (int r = 0; r < 12; ++r) m.at(10, r) = 1;  // one-pixel line
    const auto o = open_mask(m, 1);
    for (int r = 0; r < 12; ++r) {
        for (int c = 0; c < 12; ++c) {
            const bool blob = r >= 2 && r < 7 && c >= 2 && c < 7;
            CHECK(static_cast<bool>(o.at(c, r)) == blob);
        }
    }
    CHECK(open_mask(m, 0) == m);
    CHECK_THROWS_AS(open_mask(m, -1), ValidationError);
}

TEST_CASE("backprojection snaps flagged pixels to rescan points") {
    CameraView view;
    view.intrinsics = kIntr;
    std::vector<Vec3> pts{Vec3(0, 0, 2), Vec3(0.5, 0.5, 2.5)};
    SpatialGrid grid(pts, 0.05);
    BinaryImage flags(21, 21, 0);
    DepthImage depth(21, 21, 0.0f);

    flags.at(10, 10) = 1;
    depth.at(10, 10) = 2.0f;
    auto s = backproject_seeds(flags, depth, view, 3, grid);
    REQUIRE(s.size() == 1);
    CHECK(s.contains(0));
    CHECK(s.seeds.at(0) == std::vector<PixelProvenance>{{3, 10, 10}});

    // Pixel (0,0) at depth 2 lands ~0.57 m from the nearest point.
    flags = BinaryImage(21, 21, 0);
    flags.at(0, 0) = 1;
    depth.at(0, 0) = 2.0f;
    CHECK(backproject_seeds(flags, depth, view, 0, grid).empty());

    // Flagged pixel without rescan depth is skipped.
    flags = BinaryImage(21, 21, 0);
    flags.at(5, 5) = 1;
    CHECK(backproject_seeds(flags, DepthImage(21, 21, 0.0f), view, 0, grid).empty());
}

TEST_CASE("accumulate examples") {
    SeedSet a, b;
    a.add(4, {0, 1, 1});
    b.add(4, {1, 2, 2});
    const std::vector<SeedSet> both{a, b};
    const auto u = accumulate(both);
    CHECK(u.size() == 1);
    CHECK(u.seeds.at(4).size() == 2);

    CHECK(accumulate(std::vector<SeedSet>{}).empty());

    SeedSet c, d;
    for (std::uint32_t i = 0; i < 3; ++i) c.add(i, {0, 0, 0});
    for (std::uint32_t i = 10; i < 14; ++i) d.add(i, {1, 0, 0});
    CHECK(accumulate(std::vector<SeedSet>{c, d}).size() == 7);
}

namespace {

Scene synth_scene(const synth::SceneSpec& spec, const testutil::TempDir& dir) {
    return load_scene(synth::generate(spec, dir.path()));
}

}  // namespace

TEST_CASE("unchanged pair produces no seeds") {
    testutil::TempDir dir("seed_unchanged");
    const auto scene = synth_scene(synth::preset_unchanged(), dir);
    PipelineConfig cfg;
    CHECK(detect_seeds(scene, cfg).empty());
    cfg.threshold.direction = ChangeDirection::Any;
    CHECK(detect_seeds(scene, cfg).empty());
}

TEST_CASE("seeds on the moved scene lie on changed geometry and shrink with tau") {
    testutil::TempDir dir("seed_moved");
    const auto spec = synth::preset_moved_and_removed();
    const auto scene = synth_scene(spec, dir);
    const auto& ids = scene.rescan.cloud.instance_ids;
    REQUIRE(ids.size() == scene.rescan.cloud.size());

    PipelineConfig cfg;
    const auto seeds = detect_seeds(scene, cfg);
    CHECK(!seeds.empty());
    std::set<std::uint32_t> moved;
    for (const auto& o : spec.objects)
        if (o.change == synth::ChangeKind::Move) moved.insert(o.instance_id);
    for (const auto& [idx, prov] : seeds.seeds) {
        CHECK(moved.count(ids[idx]) == 1);
        CHECK(!prov.empty());
    }

    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double tau : {0.02, 0.05, 0.10, 0.2, 0.4, 1.0}) {
        cfg.threshold.tau_fixed = tau;
        cfg.threshold.direction = ChangeDirection::Any;
        const std::size_t n = detect_seeds(scene, cfg).size();
        CHECK(n <= prev);
        prev = n;
    }
}
