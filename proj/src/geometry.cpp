#include "scd/geometry.hpp"

#include <cmath>
#include <sstream>

namespace scd {

namespace {

constexpr double kPoseTol = 1e-6;
constexpr double kNormalTol = 1e-4;

void check_rigid(const Mat4& m) {
    if (!m.allFinite()) throw ValidationError("pose contains non-finite values");
    const Eigen::RowVector4d last = m.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kPoseTol) {
        throw ValidationError("pose last row must be (0,0,0,1)");
    }
    const Mat3 r = m.topLeftCorner<3, 3>();
    const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > kPoseTol) {
        std::ostringstream msg;
        msg << "pose rotation is not orthonormal (max deviation " << ortho << ")";
        throw ValidationError(msg.str());
    }
    if (std::abs(r.determinant() - 1.0) > kPoseTol) {
        throw ValidationError("pose rotation must have determinant +1");
    }
}

}  // namespace

Pose::Pose(const Mat4& camera_to_world) : matrix_(camera_to_world) { check_rigid(matrix_); }

Pose Pose::from_rotation_translation(const Mat3& rotation, const Vec3& translation) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return Pose(m);
}

Pose Pose::translation(const Vec3& t) { return from_rotation_translation(Mat3::Identity(), t); }

Pose Pose::inverse() const {
    const Mat3 rt = rotation().transpose();
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rt;
    m.topRightCorner<3, 1>() = -rt * position();
    Pose out;
    out.matrix_ = m;
    return out;
}

Pose Pose::operator*(const Pose& other) const {
    Pose out;
    out.matrix_ = matrix_ * other.matrix_;
    return out;
}

Vec3 Pose::camera_to_world(const Vec3& p_cam) const {
    return matrix_.topLeftCorner<3, 3>() * p_cam + matrix_.topRightCorner<3, 1>();
}

Vec3 Pose::world_to_camera(const Vec3& p_world) const {
    return matrix_.topLeftCorner<3, 3>().transpose() * (p_world - matrix_.topRightCorner<3, 1>());
}

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: fx and fy must be positive");
    if (width <= 0 || height <= 0) throw ValidationError("intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw ValidationError("intrinsics: principal point outside the image");
    }
}

int Projection::col() const { return static_cast<int>(std::floor(u + 0.5)); }
int Projection::row() const { return static_cast<int>(std::floor(v + 0.5)); }

std::optional<Projection> project(const Vec3& point_cam, const Intrinsics& intr) {
    const double z = point_cam.z();
    if (!(z > 0.0)) return std::nullopt;
    Projection p{intr.fx * point_cam.x() / z + intr.cx, intr.fy * point_cam.y() / z + intr.cy, z};
    const int c = p.col();
    const int r = p.row();
    if (c < 0 || r < 0 || c >= intr.width || r >= intr.height) return std::nullopt;
    return p;
}

Vec3 unproject(double u, double v, double depth, const Intrinsics& intr) {
    if (!(depth > 0.0)) throw ValidationError("unproject: depth must be positive");
    return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

Vec3 transform(const Pose& pose, const Vec3& point_world) { return pose.world_to_camera(point_world); }

void PointCloud::validate() const {
    const std::size_t n = positions.size();
    if (!colors.empty() && colors.size() != n) throw ValidationError("point cloud: colors length mismatch");
    if (!normals.empty() && normals.size() != n) throw ValidationError("point cloud: normals length mismatch");
    if (!instance_ids.empty() && instance_ids.size() != n) {
        throw ValidationError("point cloud: instance_ids length mismatch");
    }
    for (const Vec3& p : positions) {
        if (!p.allFinite()) throw ValidationError("point cloud: non-finite position");
    }
    for (const Vec3& nrm : normals) {
        if (std::abs(nrm.norm() - 1.0) > kNormalTol) throw ValidationError("point cloud: normal is not unit length");
    }
}

bool TriMesh::add_face(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const Vec3 cross = (vertices.at(b) - vertices.at(a)).cross(vertices.at(c) - vertices.at(a));
    if (cross.norm() <= 0.0) return false;
    faces.push_back({a, b, c});
    return true;
}

void TriMesh::validate() const {
    if (!colors.empty() && colors.size() != vertices.size()) {
        throw ValidationError("mesh: vertex colors length mismatch");
    }
    for (const auto& f : faces) {
        for (std::uint32_t idx : f) {
            if (idx >= vertices.size()) throw ValidationError("mesh: face index out of range");
        }
        const Vec3 cross = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
        if (cross.norm() <= 0.0) throw ValidationError("mesh: degenerate face");
    }
}

void CameraView::validate() const {
    intrinsics.validate();
    const int w = intrinsics.width;
    const int h = intrinsics.height;
    if (depth && !depth->same_shape(w, h)) throw ValidationError("view: depth image size mismatch");
    if (color && !color->same_shape(w, h)) throw ValidationError("view: color image size mismatch");
    for (const auto& [name, img] : labels) {
        if (!img.same_shape(w, h)) throw ValidationError("view: label image '" + name + "' size mismatch");
    }
}

}  // namespace scd
