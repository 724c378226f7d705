#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "scd/geometry.hpp"
#include "scd/manifest.hpp"

namespace scd::synth {

enum class ChangeKind { Keep, Move, Remove, Add };

// Axis-aligned box in its own frame, resting on the floor, rotated by yaw
// about the vertical axis through its base centre.
struct CuboidSpec {
    std::uint32_t instance_id = 1;
    Vec3 size = Vec3(0.4, 0.4, 0.4);
    Vec3 position = Vec3(2.0, 2.0, 0.0);  // base centre
    double yaw = 0.0;
    Rgb8 color{200, 60, 60};
    ChangeKind change = ChangeKind::Keep;
    Vec3 move_translation = Vec3::Zero();
    double move_yaw = 0.0;
};

struct CameraRing {
    int count = 12;
    double radius = 1.7;
    double height = 1.5;
    double target_height = 0.3;
    Intrinsics intrinsics{300.0, 300.0, 160.0, 120.0, 320, 240};
};

// Room spans [0,x] x [0,y] with walls up to z; the floor is z = 0, +Z is up.
struct SceneSpec {
    Vec3 room = Vec3(4.0, 4.0, 2.5);
    std::vector<CuboidSpec> objects;
    CameraRing camera;
    double density = 10000.0;        // points per square meter
    double floor_margin = 0.05;      // floor left unsampled around object footprints
    bool floor_as_background = true; // floor and walls get mask id 0
    int mask_parts = 1;              // >1 fragments every oracle mask
    double depth_noise_sigma = 0.0;  // meters, stored depth images only
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static SceneSpec from_json(const nlohmann::json& j);
};

// Pre-built specs used by the tests and the command line.
SceneSpec preset_unchanged();
SceneSpec preset_moved_and_removed();  // 3 cuboids: 2 moved 0.5 m, 1 removed
SceneSpec preset_slid(double footprint_overlap = 0.6);

enum class Epoch { Reference, Rescan };

// Structure mask ids start here; object instance ids must stay below it.
constexpr std::uint16_t kStructureMaskBase = 1000;

struct Surface {
    Vec3 origin;
    Vec3 edge_u;
    Vec3 edge_v;
    std::uint32_t instance_id = 0;  // 0 for room structure
    int plane = -1;                 // structure plane index (floor 0, walls 1..4), -1 for objects
    Rgb8 color{};
};

struct SceneState {
    std::vector<Surface> surfaces;
    TriMesh mesh;
    std::vector<std::uint32_t> face_surface;  // mesh face -> surface index
    PointCloud cloud;                         // sampled, with colors, normals and instance ids
};

SceneState build_state(const SceneSpec& spec, Epoch epoch);

std::vector<Pose> camera_poses(const CameraRing& ring, const Vec3& room);

// Per-pixel instance id of the nearest surface; structure is 0 when
// floor_as_background, else kStructureMaskBase + plane.
LabelImage oracle_masks(const SceneState& scene, const Pose& pose, const Intrinsics& intr, bool floor_as_background);

ColorImage render_color(const SceneState& scene, const Pose& pose, const Intrinsics& intr);

// Splits each mask region into `parts` pixel-connected pieces with fresh ids;
// parts == 1 returns the input unchanged.
LabelImage fragment_masks(const LabelImage& labels, int parts, std::mt19937_64& rng);

GroundTruth ground_truth(const SceneSpec& spec, const SceneState& rescan);

// Writes manifest.json, both clouds, their meshes, poses, rescan depth/color
// images, oracle labels (source "color") and ground_truth.json under out_dir.
// Returns the manifest path.
std::filesystem::path generate(const SceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace scd::synth
