#include "scd/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "scd/json_util.hpp"
#include "scd/png_io.hpp"

namespace scd {

using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

fs::path require_file(const fs::path& base, const json& obj, const std::string& field, const std::string& where) {
    if (!obj.contains(field)) throw ValidationError(where + ": missing field \"" + field + "\"");
    if (!obj[field].is_string()) throw ValidationError(where + ": field \"" + field + "\" must be a string path");
    const fs::path p = resolve(base, obj[field].get<std::string>());
    if (!fs::exists(p)) throw IoError(where + ": field \"" + field + "\": file not found: " + p.string());
    return p;
}

std::optional<fs::path> optional_file(const fs::path& base, const json& obj, const std::string& field,
                                      const std::string& where) {
    if (!obj.contains(field) || obj[field].is_null()) return std::nullopt;
    return require_file(base, obj, field, where);
}

double number(const json& obj, const std::string& field, const std::string& where) {
    if (!obj.contains(field) || !obj[field].is_number()) {
        throw ValidationError(where + ": field \"" + field + "\" must be a number");
    }
    return obj[field].get<double>();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    const fs::path abs = fs::absolute(p).lexically_normal();
    const fs::path rel = abs.lexically_relative(base.lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return abs.generic_string();
}

}  // namespace

SceneManifest load_manifest(const fs::path& path) {
    const json doc = read_json(path);
    const fs::path base = fs::absolute(path).parent_path();
    const std::string where = path.string();
    if (!doc.is_object()) throw ValidationError(where + ": manifest must be a JSON object");

    SceneManifest m;
    m.reference_scan = require_file(base, doc, "reference_scan", where);
    m.rescan = require_file(base, doc, "rescan", where);
    if (doc.contains("depth_scale")) {
        m.depth_scale = number(doc, "depth_scale", where);
        if (!(m.depth_scale > 0.0)) throw ValidationError(where + ": field \"depth_scale\" must be positive");
    }
    if (doc.contains("ground_truth") && !doc["ground_truth"].is_null()) {
        m.ground_truth = require_file(base, doc, "ground_truth", where);
    }
    if (!doc.contains("views") || !doc["views"].is_array() || doc["views"].empty()) {
        throw ValidationError(where + ": field \"views\" must be a non-empty array");
    }
    for (std::size_t i = 0; i < doc["views"].size(); ++i) {
        const json& v = doc["views"][i];
        const std::string vwhere = where + ": views[" + std::to_string(i) + "]";
        if (!v.is_object()) throw ValidationError(vwhere + ": must be an object");
        ViewDescriptor d;
        d.pose_path = require_file(base, v, "pose_path", vwhere);
        if (!v.contains("intrinsics") || !v["intrinsics"].is_object()) {
            throw ValidationError(vwhere + ": missing field \"intrinsics\"");
        }
        const json& in = v["intrinsics"];
        const std::string iwhere = vwhere + ".intrinsics";
        d.intrinsics.fx = number(in, "fx", iwhere);
        d.intrinsics.fy = number(in, "fy", iwhere);
        d.intrinsics.cx = number(in, "cx", iwhere);
        d.intrinsics.cy = number(in, "cy", iwhere);
        d.intrinsics.width = static_cast<int>(number(in, "width", iwhere));
        d.intrinsics.height = static_cast<int>(number(in, "height", iwhere));
        try {
            d.intrinsics.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(iwhere + ": " + e.what());
        }
        d.depth_path = optional_file(base, v, "depth_path", vwhere);
        d.color_path = optional_file(base, v, "color_path", vwhere);
        if (v.contains("label_paths")) {
            if (!v["label_paths"].is_object()) throw ValidationError(vwhere + ": \"label_paths\" must be an object");
            for (const auto& [source, _] : v["label_paths"].items()) {
                d.label_paths[source] = require_file(base, v["label_paths"], source, vwhere + ".label_paths");
            }
        }
        m.views.push_back(std::move(d));
    }
    return m;
}

void save_manifest(const fs::path& path, const SceneManifest& m) {
    const fs::path base = fs::absolute(path).parent_path();
    json doc;
    doc["reference_scan"] = relative_to(m.reference_scan, base);
    doc["rescan"] = relative_to(m.rescan, base);
    doc["depth_scale"] = m.depth_scale;
    if (m.ground_truth) doc["ground_truth"] = relative_to(*m.ground_truth, base);
    doc["views"] = json::array();
    for (const ViewDescriptor& d : m.views) {
        json v;
        v["pose_path"] = relative_to(d.pose_path, base);
        v["intrinsics"] = {{"fx", d.intrinsics.fx}, {"fy", d.intrinsics.fy}, {"cx", d.intrinsics.cx},
                           {"cy", d.intrinsics.cy}, {"width", d.intrinsics.width}, {"height", d.intrinsics.height}};
        if (d.depth_path) v["depth_path"] = relative_to(*d.depth_path, base);
        if (d.color_path) v["color_path"] = relative_to(*d.color_path, base);
        if (!d.label_paths.empty()) {
            json labels = json::object();
            for (const auto& [source, p] : d.label_paths) labels[source] = relative_to(p, base);
            v["label_paths"] = labels;
        }
        doc["views"].push_back(v);
    }
    write_json(path, doc);
}

Pose load_pose(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Mat4 m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (!(in >> m(r, c))) {
                std::ostringstream msg;
                msg << path.string() << ": expected 16 numbers, failed at entry " << r * 4 + c;
                throw ParseError(msg.str());
            }
        }
    }
    try {
        return Pose(m);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_pose(const fs::path& path, const Pose& pose) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) out << pose.matrix()(r, c) << (c == 3 ? '\n' : ' ');
    }
}

CameraView load_view(const ViewDescriptor& desc, double depth_scale) {
    CameraView view;
    view.pose = load_pose(desc.pose_path);
    view.intrinsics = desc.intrinsics;
    if (desc.depth_path) view.depth = load_depth(*desc.depth_path, depth_scale);
    if (desc.color_path) view.color = load_color(*desc.color_path);
    for (const auto& [source, p] : desc.label_paths) view.labels.emplace(source, load_labels(p));
    view.validate();
    return view;
}

std::vector<CameraView> load_views(const SceneManifest& manifest) {
    std::vector<CameraView> views;
    views.reserve(manifest.views.size());
    for (const ViewDescriptor& d : manifest.views) views.push_back(load_view(d, manifest.depth_scale));
    return views;
}

void GroundTruth::validate(std::size_t cloud_size) const {
    std::vector<std::uint32_t> all;
    for (const auto& inst : changed_instances) {
        for (std::uint32_t idx : inst.point_indices) {
            if (idx >= cloud_size) {
                throw ValidationError("ground truth: instance " + std::to_string(inst.instance_id) +
                                      " has point index " + std::to_string(idx) + " beyond the rescan cloud");
            }
            all.push_back(idx);
        }
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw ValidationError("ground truth: instances are not disjoint");
    }
}

GroundTruth load_ground_truth(const fs::path& path) {
    const json doc = read_json(path);
    GroundTruth gt;
    try {
        for (const json& inst : doc.at("changed_instances")) {
            GroundTruthInstance g;
            g.instance_id = inst.at("instance_id").get<std::uint32_t>();
            g.point_indices = inst.at("point_indices").get<std::vector<std::uint32_t>>();
            std::sort(g.point_indices.begin(), g.point_indices.end());
            gt.changed_instances.push_back(std::move(g));
        }
        if (doc.contains("removed_instances")) {
            gt.removed_instances = doc["removed_instances"].get<std::vector<std::uint32_t>>();
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return gt;
}

void save_ground_truth(const fs::path& path, const GroundTruth& gt) {
    json doc;
    doc["changed_instances"] = json::array();
    for (const auto& g : gt.changed_instances) {
        doc["changed_instances"].push_back({{"instance_id", g.instance_id}, {"point_indices", g.point_indices}});
    }
    doc["removed_instances"] = gt.removed_instances;
    write_json(path, doc);
}

}  // namespace scd
