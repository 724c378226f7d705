#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scd/geometry.hpp"

namespace scd {

namespace fs = std::filesystem;

struct ViewDescriptor {
    fs::path pose_path;
    Intrinsics intrinsics;
    std::optional<fs::path> depth_path;
    std::optional<fs::path> color_path;
    std::map<std::string, fs::path> label_paths;  // by mask source
};

// Paths are absolute after load_manifest (resolved against the manifest's directory).
struct SceneManifest {
    fs::path reference_scan;
    fs::path rescan;
    std::vector<ViewDescriptor> views;
    std::optional<fs::path> ground_truth;
    double depth_scale = 0.001;
};

SceneManifest load_manifest(const fs::path& path);
// Paths below the manifest's directory are written relative to it.
void save_manifest(const fs::path& path, const SceneManifest& manifest);

Pose load_pose(const fs::path& path);
void save_pose(const fs::path& path, const Pose& pose);

// Loads the pose and every image referenced by the descriptor.
CameraView load_view(const ViewDescriptor& desc, double depth_scale);
std::vector<CameraView> load_views(const SceneManifest& manifest);

struct GroundTruthInstance {
    std::uint32_t instance_id = 0;
    std::vector<std::uint32_t> point_indices;  // sorted, into the rescan cloud
};

struct GroundTruth {
    std::vector<GroundTruthInstance> changed_instances;
    // Instances present only in the reference scan; not matchable on the rescan.
    std::vector<std::uint32_t> removed_instances;

    // Indices < cloud_size and instances pairwise disjoint.
    void validate(std::size_t cloud_size) const;
};

GroundTruth load_ground_truth(const fs::path& path);
void save_ground_truth(const fs::path& path, const GroundTruth& gt);

}  // namespace scd
