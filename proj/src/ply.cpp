#include "scd/ply.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace scd {

namespace {

static_assert(std::endian::native == std::endian::little, "PLY binary I/O assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct Property {
    std::string name;
    ScalarType type = ScalarType::Float32;
    bool is_list = false;
    ScalarType count_type = ScalarType::UInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;

    int find(const std::string& prop) const {
        for (std::size_t i = 0; i < properties.size(); ++i)
            if (properties[i].name == prop) return static_cast<int>(i);
        return -1;
    }
};

struct Header {
    PlyFormat format = PlyFormat::Ascii;
    std::vector<Element> elements;
    std::size_t body_offset = 0;
};

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
    std::ostringstream msg;
    msg << path.string() << ": byte " << offset << ": " << what;
    throw ParseError(msg.str());
}

ScalarType parse_type(const std::string& t, const std::filesystem::path& path, std::size_t offset) {
    if (t == "char" || t == "int8") return ScalarType::Int8;
    if (t == "uchar" || t == "uint8") return ScalarType::UInt8;
    if (t == "short" || t == "int16") return ScalarType::Int16;
    if (t == "ushort" || t == "uint16") return ScalarType::UInt16;
    if (t == "int" || t == "int32") return ScalarType::Int32;
    if (t == "uint" || t == "uint32") return ScalarType::UInt32;
    if (t == "float" || t == "float32") return ScalarType::Float32;
    if (t == "double" || t == "float64") return ScalarType::Float64;
    fail(path, offset, "unknown property type '" + t + "'");
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Header parse_header(const std::string& data, const std::filesystem::path& path) {
    Header h;
    std::size_t pos = 0;
    bool saw_format = false;
    auto next_line = [&](std::size_t& line_start) -> std::string {
        line_start = pos;
        const std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) fail(path, pos, "unterminated header");
        std::string line = data.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        return line;
    };
    std::size_t start = 0;
    if (next_line(start) != "ply") fail(path, 0, "missing 'ply' magic");
    while (true) {
        const std::string line = next_line(start);
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
        if (kw == "end_header") break;
        if (kw == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii") h.format = PlyFormat::Ascii;
            else if (fmt == "binary_little_endian") h.format = PlyFormat::BinaryLittleEndian;
            else fail(path, start, "unsupported format '" + fmt + "'");
            saw_format = true;
        } else if (kw == "element") {
            Element e;
            long long count = -1;
            ls >> e.name >> count;
            if (e.name.empty() || count < 0) fail(path, start, "malformed element line");
            e.count = static_cast<std::size_t>(count);
            h.elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (h.elements.empty()) fail(path, start, "property before any element");
            Property p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                p.is_list = true;
                p.count_type = parse_type(ct, path, start);
                p.type = parse_type(it, path, start);
            } else {
                ls >> p.name;
                p.type = parse_type(t, path, start);
            }
            if (p.name.empty()) fail(path, start, "property without a name");
            h.elements.back().properties.push_back(p);
        } else {
            fail(path, start, "unexpected header keyword '" + kw + "'");
        }
    }
    if (!saw_format) fail(path, 0, "missing format line");
    h.body_offset = pos;
    return h;
}

// Sequential reader over the body in either encoding.
class BodyReader {
public:
    BodyReader(const std::string& data, std::size_t offset, PlyFormat format, const std::filesystem::path& path)
        : data_(data), pos_(offset), format_(format), path_(path) {}

    double read(ScalarType t) {
        if (format_ == PlyFormat::Ascii) {
            const double v = read_ascii();
            return t == ScalarType::Float32 ? static_cast<double>(static_cast<float>(v)) : v;
        }
        const std::size_t n = type_size(t);
        if (pos_ + n > data_.size()) fail(path_, pos_, "unexpected end of binary body");
        const char* p = data_.data() + pos_;
        pos_ += n;
        switch (t) {
            case ScalarType::Int8: return get<std::int8_t>(p);
            case ScalarType::UInt8: return get<std::uint8_t>(p);
            case ScalarType::Int16: return get<std::int16_t>(p);
            case ScalarType::UInt16: return get<std::uint16_t>(p);
            case ScalarType::Int32: return get<std::int32_t>(p);
            case ScalarType::UInt32: return get<std::uint32_t>(p);
            case ScalarType::Float32: return get<float>(p);
            case ScalarType::Float64: return get<double>(p);
        }
        return 0.0;
    }

    std::size_t offset() const { return pos_; }

private:
    template <typename T>
    static double get(const char* p) {
        T v;
        std::memcpy(&v, p, sizeof(T));
        return static_cast<double>(v);
    }

    double read_ascii() {
        while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
        if (pos_ >= data_.size()) fail(path_, pos_, "unexpected end of ascii body");
        const char* begin = data_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail(path_, pos_, "malformed ascii number");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    const std::string& data_;
    std::size_t pos_;
    PlyFormat format_;
    const std::filesystem::path& path_;
};

struct RawPly {
    Header header;
    // Scalar vertex properties, one column per property.
    std::vector<std::vector<double>> vertex_columns;
    std::vector<std::vector<std::uint32_t>> faces;
    const Element* vertex = nullptr;
};

RawPly parse(const std::filesystem::path& path, bool want_faces) {
    const std::string data = read_file(path);
    RawPly raw;
    raw.header = parse_header(data, path);
    BodyReader reader(data, raw.header.body_offset, raw.header.format, path);
    for (const Element& e : raw.header.elements) {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face" && want_faces;
        int face_prop = -1;
        if (is_vertex) {
            raw.vertex = &e;
            raw.vertex_columns.assign(e.properties.size(), {});
            for (auto& col : raw.vertex_columns) col.reserve(e.count);
        }
        if (is_face) {
            face_prop = e.find("vertex_indices");
            if (face_prop < 0) face_prop = e.find("vertex_index");
            raw.faces.reserve(e.count);
        }
        for (std::size_t i = 0; i < e.count; ++i) {
            for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
                const Property& p = e.properties[pi];
                if (!p.is_list) {
                    const double v = reader.read(p.type);
                    if (is_vertex) raw.vertex_columns[pi].push_back(v);
                    continue;
                }
                const std::size_t at = reader.offset();
                const double count = reader.read(p.count_type);
                if (count < 0 || count != std::floor(count)) fail(path, at, "invalid list length");
                std::vector<std::uint32_t> items;
                items.reserve(static_cast<std::size_t>(count));
                for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
                    const std::size_t item_at = reader.offset();
                    const double v = reader.read(p.type);
                    if (v < 0 || v != std::floor(v)) fail(path, item_at, "invalid face index");
                    items.push_back(static_cast<std::uint32_t>(v));
                }
                if (is_face && static_cast<int>(pi) == face_prop) raw.faces.push_back(std::move(items));
            }
        }
    }
    if (!raw.vertex) fail(path, raw.header.body_offset, "no vertex element");
    return raw;
}

double color_scale(const Property& p) {
    switch (p.type) {
        case ScalarType::UInt8: return 1.0 / 255.0;
        case ScalarType::UInt16: return 1.0 / 65535.0;
        default: return 1.0;
    }
}

std::vector<Vec3> read_triplet(const RawPly& raw, const char* a, const char* b, const char* c, bool color) {
    const int ia = raw.vertex->find(a), ib = raw.vertex->find(b), ic = raw.vertex->find(c);
    if (ia < 0 || ib < 0 || ic < 0) return {};
    const double s = color ? color_scale(raw.vertex->properties[static_cast<std::size_t>(ia)]) : 1.0;
    const std::size_t n = raw.vertex->count;
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = Vec3(raw.vertex_columns[static_cast<std::size_t>(ia)][i], raw.vertex_columns[static_cast<std::size_t>(ib)][i],
                      raw.vertex_columns[static_cast<std::size_t>(ic)][i]) *
                 s;
    }
    return out;
}

PointCloud cloud_from_raw(const RawPly& raw, const std::filesystem::path& path) {
    PointCloud cloud;
    cloud.positions = read_triplet(raw, "x", "y", "z", false);
    if (cloud.positions.size() != raw.vertex->count) fail(path, raw.header.body_offset, "vertex element lacks x/y/z");
    cloud.colors = read_triplet(raw, "red", "green", "blue", true);
    cloud.normals = read_triplet(raw, "nx", "ny", "nz", false);
    const int id = raw.vertex->find("instance_id");
    if (id >= 0) {
        const auto& col = raw.vertex_columns[static_cast<std::size_t>(id)];
        cloud.instance_ids.reserve(col.size());
        for (double v : col) {
            if (v < 0) fail(path, raw.header.body_offset, "negative instance_id");
            cloud.instance_ids.push_back(static_cast<std::uint32_t>(v));
        }
    }
    try {
        cloud.validate();
    } catch (const ValidationError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return cloud;
}

std::uint8_t to_u8(double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

class BodyWriter {
public:
    BodyWriter(std::ostream& out, PlyFormat format) : out_(out), format_(format) {
        if (format_ == PlyFormat::Ascii) out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
    }

    template <typename T>
    void put(T v) {
        if (format_ == PlyFormat::BinaryLittleEndian) {
            out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
            return;
        }
        if (!first_) out_ << ' ';
        first_ = false;
        if constexpr (std::is_same_v<T, float>) {
            out_ << std::setprecision(std::numeric_limits<float>::max_digits10) << v
                 << std::setprecision(std::numeric_limits<double>::max_digits10);
        } else if constexpr (sizeof(T) == 1) {
            out_ << static_cast<int>(v);
        } else {
            out_ << v;
        }
    }

    void end_record() {
        if (format_ == PlyFormat::Ascii) out_ << '\n';
        first_ = true;
    }

private:
    std::ostream& out_;
    PlyFormat format_;
    bool first_ = true;
};

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

const char* format_name(PlyFormat f) {
    return f == PlyFormat::Ascii ? "ascii" : "binary_little_endian";
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path) {
    return cloud_from_raw(parse(path, false), path);
}

TriMesh load_mesh(const std::filesystem::path& path) {
    const RawPly raw = parse(path, true);
    TriMesh mesh;
    PointCloud cloud = cloud_from_raw(raw, path);
    mesh.vertices = std::move(cloud.positions);
    mesh.colors = std::move(cloud.colors);
    for (const auto& poly : raw.faces) {
        for (std::uint32_t idx : poly) {
            if (idx >= mesh.vertices.size()) fail(path, raw.header.body_offset, "face index out of range");
        }
        for (std::size_t k = 2; k < poly.size(); ++k) mesh.add_face(poly[0], poly[k - 1], poly[k]);
    }
    return mesh;
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
    cloud.validate();
    std::ofstream out = open_out(path);
    out << "ply\nformat " << format_name(format) << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (cloud.has_normals()) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (cloud.has_instance_ids()) out << "property uint instance_id\n";
    out << "end_header\n";
    BodyWriter w(out, format);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < 3; ++k) w.put(cloud.positions[i][k]);
        if (cloud.has_colors())
            for (int k = 0; k < 3; ++k) w.put(to_u8(cloud.colors[i][k]));
        if (cloud.has_normals())
            for (int k = 0; k < 3; ++k) w.put(static_cast<float>(cloud.normals[i][k]));
        if (cloud.has_instance_ids()) w.put(cloud.instance_ids[i]);
        w.end_record();
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh, PlyFormat format) {
    mesh.validate();
    std::ofstream out = open_out(path);
    const bool colored = !mesh.colors.empty();
    out << "ply\nformat " << format_name(format) << " 1.0\n"
        << "element vertex " << mesh.vertices.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (colored) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << mesh.faces.size() << "\n"
        << "property list uchar uint vertex_indices\nend_header\n";
    BodyWriter w(out, format);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        for (int k = 0; k < 3; ++k) w.put(mesh.vertices[i][k]);
        if (colored)
            for (int k = 0; k < 3; ++k) w.put(to_u8(mesh.colors[i][k]));
        w.end_record();
    }
    for (const auto& f : mesh.faces) {
        w.put(std::uint8_t{3});
        for (std::uint32_t idx : f) w.put(idx);
        w.end_record();
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace scd
