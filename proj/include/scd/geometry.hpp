#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "scd/error.hpp"

namespace scd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rigid camera-to-world transform. The rotation block is checked to be
// orthonormal with det = +1 and the last row to be (0,0,0,1), within 1e-6.
class Pose {
public:
    Pose() : matrix_(Mat4::Identity()) {}
    explicit Pose(const Mat4& camera_to_world);

    static Pose from_rotation_translation(const Mat3& rotation, const Vec3& translation);
    static Pose translation(const Vec3& t);

    const Mat4& matrix() const { return matrix_; }
    Mat3 rotation() const { return matrix_.topLeftCorner<3, 3>(); }
    Vec3 position() const { return matrix_.topRightCorner<3, 1>(); }

    Pose inverse() const;
    Pose operator*(const Pose& other) const;

    Vec3 camera_to_world(const Vec3& p_cam) const;
    Vec3 world_to_camera(const Vec3& p_world) const;

private:
    Mat4 matrix_;
};

// Pinhole intrinsics. Pixel (i, j) is centred on continuous coordinate (i, j),
// so a continuous u maps to column floor(u + 0.5).
struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;
    bool operator==(const Intrinsics&) const = default;
};

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double z = 0.0;

    int col() const;
    int row() const;
};

// Returns nothing iff the point is behind the camera or lands outside the image.
std::optional<Projection> project(const Vec3& point_cam, const Intrinsics& intr);

// Inverse of project. Throws ValidationError when depth <= 0.
Vec3 unproject(double u, double v, double depth, const Intrinsics& intr);

// World point into the camera frame of `pose` (applies the inverse transform).
Vec3 transform(const Pose& pose, const Vec3& point_world);

struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;              // RGB in [0,1]; empty when absent
    std::vector<Vec3> normals;             // unit vectors; empty when absent
    std::vector<std::uint32_t> instance_ids;  // empty when absent

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    bool has_colors() const { return !colors.empty(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_instance_ids() const { return !instance_ids.empty(); }

    void validate() const;
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<Vec3> colors;  // per vertex, optional

    bool empty() const { return faces.empty(); }

    // Appends a triangle unless it has zero area. Returns whether it was stored.
    bool add_face(std::uint32_t a, std::uint32_t b, std::uint32_t c);
    void validate() const;
};

template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
        if (width < 0 || height < 0) throw ValidationError("image dimensions must be non-negative");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool in_bounds(int col, int row) const {
        return col >= 0 && row >= 0 && col < width_ && row < height_;
    }

    T& at(int col, int row) { return data_[index(col, row)]; }
    const T& at(int col, int row) const { return data_[index(col, row)]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(int width, int height) const { return width_ == width && height_ == height; }
    template <typename U>
    bool same_shape(const Image<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Depth in meters; 0 marks an invalid pixel.
using DepthImage = Image<float>;
// Mask identifiers; 0 is "no mask".
using LabelImage = Image<std::uint16_t>;
using Rgb8 = std::array<std::uint8_t, 3>;
using ColorImage = Image<Rgb8>;

inline bool valid_depth(float d) { return d > 0.0f; }

struct CameraView {
    Pose pose;
    Intrinsics intrinsics;
    std::optional<DepthImage> depth;
    std::optional<ColorImage> color;
    std::map<std::string, LabelImage> labels;

    void validate() const;
};

}  // namespace scd
