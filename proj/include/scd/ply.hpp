#pragma once

#include <filesystem>

#include "scd/geometry.hpp"

namespace scd {

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Vertex properties understood: x,y,z [red,green,blue] [nx,ny,nz] [instance_id].
// Unknown properties and elements are skipped. Points keep file order.
PointCloud load_point_cloud(const std::filesystem::path& path);

// Vertices plus a "face" element with a vertex_indices list. Polygons are
// fan-triangulated; zero-area triangles are dropped.
TriMesh load_mesh(const std::filesystem::path& path);

// Writes x,y,z as float64 so that save -> load -> save is bit-exact.
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::BinaryLittleEndian);

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace scd
