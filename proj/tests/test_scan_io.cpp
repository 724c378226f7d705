#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "scd/artifacts.hpp"
#include "scd/json_util.hpp"
#include "scd/manifest.hpp"
#include "scd/ply.hpp"
#include "scd/png_io.hpp"
#include "test_util.hpp"

using namespace scd;
using testutil::TempDir;

namespace {

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-5, 5), c(0, 1);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.positions.emplace_back(u(rng), u(rng), u(rng));
        // Colours on the 8-bit grid so they survive uchar storage.
        cloud.colors.emplace_back(std::round(c(rng) * 255) / 255, std::round(c(rng) * 255) / 255,
                                  std::round(c(rng) * 255) / 255);
        const Vec3 n3 = Vec3(u(rng), u(rng), u(rng)).normalized();
        // Normals are stored as float32; keep them exactly representable.
        const float fx = static_cast<float>(n3.x()), fy = static_cast<float>(n3.y()), fz = static_cast<float>(n3.z());
        cloud.normals.emplace_back(fx, fy, fz);
        cloud.instance_ids.push_back(static_cast<std::uint32_t>(rng() % 1000));
    }
    return cloud;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("ascii cloud with 3 points") {
    TempDir tmp;
    write_text(tmp / "a.ply",
               "ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\n"
               "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
               "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0.5 0 0 255\n");
    const PointCloud c = load_point_cloud(tmp / "a.ply");
    CHECK(c.size() == 3);
    CHECK(c.colors.size() == c.positions.size());
    CHECK(c.positions[2].isApprox(Vec3(0, 1, 0.5)));
    CHECK(c.colors[0].isApprox(Vec3(1, 0, 0)));
    CHECK_FALSE(c.has_normals());
}

TEST_CASE("binary and ascii clouds round-trip bit-exactly") {
    TempDir tmp;
    const PointCloud c = random_cloud(500, 3);
    for (PlyFormat fmt : {PlyFormat::BinaryLittleEndian, PlyFormat::Ascii}) {
        save_point_cloud(tmp / "c.ply", c, fmt);
        const PointCloud d = load_point_cloud(tmp / "c.ply");
        REQUIRE(d.size() == c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                REQUIRE(bit_equal(d.positions[i][k], c.positions[i][k]));
                REQUIRE(bit_equal(d.normals[i][k], c.normals[i][k]));
                REQUIRE(d.colors[i][k] == doctest::Approx(c.colors[i][k]).epsilon(1e-12));
            }
            REQUIRE(d.instance_ids[i] == c.instance_ids[i]);
        }
        save_point_cloud(tmp / "d.ply", d, fmt);
        CHECK(read_bytes(tmp / "c.ply") == read_bytes(tmp / "d.ply"));
    }
}

TEST_CASE("malformed ply reports a byte offset") {
    TempDir tmp;
    write_text(tmp / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1\n");
    try {
        load_point_cloud(tmp / "bad.ply");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    write_text(tmp / "bad2.ply", "plx\n");
    CHECK_THROWS_AS(load_point_cloud(tmp / "bad2.ply"), ParseError);
    write_text(tmp / "bad3.ply", "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty double x\n"
                                 "property double y\nproperty double z\nend_header\nabc");
    CHECK_THROWS_AS(load_point_cloud(tmp / "bad3.ply"), ParseError);
    CHECK_THROWS_AS(load_point_cloud(tmp / "missing.ply"), IoError);
}

TEST_CASE("mesh faces are fan-triangulated and round-trip") {
    TempDir tmp;
    write_text(tmp / "m.ply",
               "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
               "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
               "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
    const TriMesh m = load_mesh(tmp / "m.ply");
    CHECK(m.vertices.size() == 4);
    REQUIRE(m.faces.size() == 2);
    CHECK(m.faces[0] == std::array<std::uint32_t, 3>{0, 1, 2});
    CHECK(m.faces[1] == std::array<std::uint32_t, 3>{0, 2, 3});
    save_mesh(tmp / "n.ply", m);
    const TriMesh n = load_mesh(tmp / "n.ply");
    CHECK(n.faces == m.faces);
    CHECK(n.vertices == m.vertices);
    // A cloud-only file loads as a mesh with no faces.
    save_point_cloud(tmp / "c.ply", random_cloud(5, 1));
    CHECK(load_mesh(tmp / "c.ply").faces.empty());
}

TEST_CASE("depth and label png") {
    TempDir tmp;
    DepthImage d(4, 3, 0.0f);
    d.at(1, 1) = 2.0f;
    d.at(3, 2) = 0.5f;
    save_depth(tmp / "d.png", d, 0.001);
    const DepthImage e = load_depth(tmp / "d.png", 0.001);
    CHECK(e.at(1, 1) == doctest::Approx(2.0));
    CHECK(e.at(3, 2) == doctest::Approx(0.5));
    CHECK_FALSE(valid_depth(e.at(0, 0)));

    LabelImage l(5, 4, 0);
    for (int i = 0; i < 20; ++i) l.data()[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(i * 3271);
    save_labels(tmp / "l.png", l);
    CHECK(load_labels(tmp / "l.png") == l);

    ColorImage c(2, 2, Rgb8{1, 2, 3});
    save_color(tmp / "c.png", c);
    CHECK(load_color(tmp / "c.png") == c);
    CHECK_THROWS_AS(load_labels(tmp / "c.png"), ParseError);
    CHECK_THROWS_AS(load_color(tmp / "l.png"), ParseError);

    DepthImage far(1, 1, 70.0f);
    CHECK_THROWS_AS(save_depth(tmp / "far.png", far, 0.001), ValidationError);
}

TEST_CASE("raw 16-bit value 2000 at scale 0.001 reads 2.0 m") {
    TempDir tmp;
    LabelImage raw(1, 1, 2000);
    save_labels(tmp / "r.png", raw);
    CHECK(load_depth(tmp / "r.png", 0.001).at(0, 0) == doctest::Approx(2.0));
}

namespace {

void minimal_scene(const TempDir& tmp, bool with_rescan, bool with_scale) {
    PointCloud c;
    c.positions = {Vec3(0, 0, 1)};
    save_point_cloud(tmp / "ref.ply", c);
    save_point_cloud(tmp / "res.ply", c);
    save_pose(tmp / "pose.txt", Pose());
    nlohmann::json j{{"reference_scan", "ref.ply"},
                     {"views",
                      {{{"pose_path", "pose.txt"},
                        {"intrinsics", {{"fx", 10}, {"fy", 10}, {"cx", 2}, {"cy", 2}, {"width", 4}, {"height", 4}}}}}}};
    if (with_rescan) j["rescan"] = "res.ply";
    if (with_scale) j["depth_scale"] = 0.0005;
    write_json(tmp / "manifest.json", j);
}

}  // namespace

TEST_CASE("manifest: minimal, defaults, missing fields and files") {
    TempDir tmp;
    minimal_scene(tmp, true, false);
    const SceneManifest m = load_manifest(tmp / "manifest.json");
    CHECK(m.views.size() == 1);
    CHECK(m.depth_scale == 0.001);
    CHECK(m.rescan.is_absolute());
    CHECK(m.views[0].intrinsics == Intrinsics{10, 10, 2, 2, 4, 4});

    minimal_scene(tmp, true, true);
    CHECK(load_manifest(tmp / "manifest.json").depth_scale == 0.0005);

    minimal_scene(tmp, false, false);
    try {
        load_manifest(tmp / "manifest.json");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("\"rescan\"") != std::string::npos);
    }

    minimal_scene(tmp, true, false);
    fs::remove(tmp / "res.ply");
    try {
        load_manifest(tmp / "manifest.json");
        FAIL("expected an error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("res.ply") != std::string::npos);
    }

    try {
        load_manifest(tmp / "nope.json");
        FAIL("expected an error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
    }

    write_text(tmp / "broken.json", "{\n  \"rescan\": ,\n}");
    try {
        load_manifest(tmp / "broken.json");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("manifest save/load keeps paths") {
    TempDir tmp;
    minimal_scene(tmp, true, false);
    const SceneManifest m = load_manifest(tmp / "manifest.json");
    save_manifest(tmp / "copy.json", m);
    const SceneManifest n = load_manifest(tmp / "copy.json");
    CHECK(n.rescan == m.rescan);
    CHECK(n.views[0].pose_path == m.views[0].pose_path);
    CHECK(read_json(tmp / "copy.json")["rescan"] == "res.ply");
}

TEST_CASE("pose text files") {
    TempDir tmp;
    const Pose p = Pose::from_rotation_translation(Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()).toRotationMatrix(),
                                                   Vec3(1, 2, 3));
    save_pose(tmp / "p.txt", p);
    CHECK(load_pose(tmp / "p.txt").matrix() == p.matrix());
    write_text(tmp / "short.txt", "1 0 0 0\n0 1 0 0\n");
    CHECK_THROWS(load_pose(tmp / "short.txt"));
}

TEST_CASE("ground truth round trip and validation") {
    TempDir tmp;
    GroundTruth gt;
    gt.changed_instances = {{3, {1, 2, 5}}, {4, {7}}};
    gt.removed_instances = {9};
    save_ground_truth(tmp / "gt.json", gt);
    const GroundTruth g = load_ground_truth(tmp / "gt.json");
    REQUIRE(g.changed_instances.size() == 2);
    CHECK(g.changed_instances[0].point_indices == std::vector<std::uint32_t>{1, 2, 5});
    CHECK(g.removed_instances == std::vector<std::uint32_t>{9});
    CHECK_NOTHROW(g.validate(8));
    CHECK_THROWS_AS(g.validate(7), ValidationError);
    GroundTruth overlap = g;
    overlap.changed_instances[1].point_indices = {2};
    CHECK_THROWS_AS(overlap.validate(10), ValidationError);
}

TEST_CASE("detections round-trip bit-exactly") {
    TempDir tmp;
    DetectionSet d;
    d.detections.push_back({0, {1, 4, 9}, 1.0 / 3.0, {}});
    d.detections.push_back({1, {2, 3}, 0.1 + 0.2, {}});
    d.params = {{"lambda", 0.7}};
    save_detections(tmp / "d.json", d, nlohmann::json{{"x", 1}});
    const DetectionSet e = load_detections(tmp / "d.json");
    REQUIRE(e.size() == 2);
    CHECK(bit_equal(e.detections[0].score, 1.0 / 3.0));
    CHECK(bit_equal(e.detections[1].score, 0.1 + 0.2));
    CHECK(e.detections[0].point_indices == d.detections[0].point_indices);
    CHECK(e.params == d.params);
    save_detections(tmp / "e.json", e, nlohmann::json{{"x", 1}});
    CHECK(read_bytes(tmp / "d.json") == read_bytes(tmp / "e.json"));
}
