#include "scd/artifacts.hpp"

#include <algorithm>
#include <cmath>

#include "scd/json_util.hpp"

namespace scd {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name, const char* what) {
    if (!j.is_object() || !j.contains(name)) {
        throw ParseError(std::string(what) + ": missing field \"" + name + "\"");
    }
    try {
        return j[name].get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": field \"" + name + "\": " + e.what());
    }
}

Vec3 vec_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected [x, y, z]");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json edges_json(const std::vector<SupervoxelEdge>& edges) {
    json out = json::array();
    for (const auto& [a, b] : edges) out.push_back(json::array({a, b}));
    return out;
}

std::vector<SupervoxelEdge> edges_from(const json& j, const char* what) {
    std::vector<SupervoxelEdge> out;
    if (!j.is_array()) throw ParseError(std::string(what) + ": edges must be an array");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw ParseError(std::string(what) + ": edge must be [a, b]");
        out.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
    }
    return out;
}

}  // namespace

json seeds_to_json(const SeedSet& seeds) {
    json arr = json::array();
    for (const auto& [idx, pixels] : seeds.seeds) {
        json px = json::array();
        for (const auto& p : pixels) px.push_back(json::array({p.view, p.u, p.v}));
        arr.push_back(json{{"index", idx}, {"pixels", px}});
    }
    return json{{"count", seeds.size()}, {"seeds", arr}};
}

SeedSet seeds_from_json(const json& j) {
    SeedSet s;
    for (const auto& e : field<json>(j, "seeds", "seeds")) {
        const auto idx = field<std::uint32_t>(e, "index", "seeds");
        const json px = field<json>(e, "pixels", "seeds");
        if (!px.is_array() || px.empty()) throw ParseError("seeds: point " + std::to_string(idx) + " has no pixels");
        for (const auto& p : px) {
            if (!p.is_array() || p.size() != 3) throw ParseError("seeds: pixel must be [view, u, v]");
            s.add(idx, PixelProvenance{p[0].get<std::uint32_t>(), p[1].get<int>(), p[2].get<int>()});
        }
    }
    return s;
}

json graph_to_json(const SupervoxelGraph& graph) {
    json svs = json::array();
    for (const auto& sv : graph.supervoxels) {
        svs.push_back(json{{"centroid", vec_json(sv.centroid)},
                           {"mean_color", vec_json(sv.mean_color)},
                           {"mean_normal", vec_json(sv.mean_normal)}});
    }
    return json{{"assignment", graph.assignment}, {"supervoxels", svs}, {"edges", edges_json(graph.edges)}};
}

SupervoxelGraph graph_from_json(const json& j) {
    SupervoxelGraph g;
    g.assignment = field<std::vector<std::uint32_t>>(j, "assignment", "graph");
    for (const auto& s : field<json>(j, "supervoxels", "graph")) {
        Supervoxel sv;
        sv.centroid = vec_from(field<json>(s, "centroid", "graph"), "graph centroid");
        sv.mean_color = vec_from(field<json>(s, "mean_color", "graph"), "graph mean_color");
        sv.mean_normal = vec_from(field<json>(s, "mean_normal", "graph"), "graph mean_normal");
        g.supervoxels.push_back(std::move(sv));
    }
    for (std::size_t i = 0; i < g.assignment.size(); ++i) {
        const std::uint32_t sv = g.assignment[i];
        if (sv >= g.supervoxels.size()) throw ParseError("graph: assignment refers to unknown supervoxel");
        g.supervoxels[sv].point_indices.push_back(static_cast<std::uint32_t>(i));
    }
    g.edges = edges_from(field<json>(j, "edges", "graph"), "graph");
    g.validate(g.assignment.size());
    return g;
}

json assignments_to_json(const Assignments& a) {
    json sources = json::array();
    for (const auto& m : a.sources) {
        json views = json::object();
        for (const auto& [v, masks] : m.per_view) views[std::to_string(v)] = masks;
        sources.push_back(json{{"source", m.source}, {"views", views}});
    }
    return json{{"sources", sources},
                {"edge_weights", {{"mode", a.mode}, {"edges", edges_json(a.weights.edges)}, {"weights", a.weights.weights}}}};
}

Assignments assignments_from_json(const json& j) {
    Assignments a;
    for (const auto& s : field<json>(j, "sources", "assignments")) {
        MaskAssignment m;
        m.source = field<std::string>(s, "source", "assignments");
        const json views = field<json>(s, "views", "assignments");
        for (const auto& [k, v] : views.items()) {
            std::uint32_t view = 0;
            try {
                view = static_cast<std::uint32_t>(std::stoul(k));
            } catch (const std::exception&) {
                throw ParseError("assignments: view key \"" + k + "\" is not an index");
            }
            m.per_view[view] = v.get<std::vector<std::uint16_t>>();
        }
        a.sources.push_back(std::move(m));
    }
    const json w = field<json>(j, "edge_weights", "assignments");
    a.mode = field<std::string>(w, "mode", "assignments");
    a.weights.edges = edges_from(field<json>(w, "edges", "assignments"), "assignments");
    a.weights.weights = field<std::vector<double>>(w, "weights", "assignments");
    if (a.weights.weights.size() != a.weights.edges.size()) {
        throw ParseError("assignments: edges and weights differ in length");
    }
    return a;
}

json labels_to_json(const OptimizationOutput& o) {
    return json{{"optimized", o.optimized},
                {"p_change", o.p.p_change},
                {"q_change", o.q.p_change},
                {"labels", o.labels},
                {"components", o.components},
                {"energy", o.energy},
                {"energy_history", o.energy_history}};
}

OptimizationOutput labels_from_json(const json& j) {
    OptimizationOutput o;
    o.optimized = field<bool>(j, "optimized", "labels");
    o.p.p_change = field<std::vector<double>>(j, "p_change", "labels");
    o.q.p_change = field<std::vector<double>>(j, "q_change", "labels");
    o.labels = field<std::vector<std::uint8_t>>(j, "labels", "labels");
    o.components = field<std::vector<std::uint32_t>>(j, "components", "labels");
    o.energy = field<double>(j, "energy", "labels");
    o.energy_history = field<std::vector<double>>(j, "energy_history", "labels");
    if (o.labels.size() != o.q.size() || o.p.size() != o.q.size()) {
        throw ParseError("labels: p_change, q_change and labels differ in length");
    }
    return o;
}

json detections_to_json(const DetectionSet& dets, const json& metrics) {
    json arr = json::array();
    for (const auto& d : dets.detections) {
        arr.push_back(json{{"id", d.id}, {"score", d.score}, {"point_indices", d.point_indices}});
    }
    json out{{"detections", arr}, {"params", dets.params}};
    if (!metrics.is_null()) out["metrics"] = metrics;
    return out;
}

DetectionSet detections_from_json(const json& j, const PointCloud* cloud) {
    DetectionSet dets;
    for (const auto& e : field<json>(j, "detections", "detections")) {
        Detection d;
        d.id = field<std::uint32_t>(e, "id", "detections");
        d.score = field<double>(e, "score", "detections");
        d.point_indices = field<std::vector<std::uint32_t>>(e, "point_indices", "detections");
        if (!std::is_sorted(d.point_indices.begin(), d.point_indices.end())) {
            std::sort(d.point_indices.begin(), d.point_indices.end());
        }
        if (cloud) {
            for (auto idx : d.point_indices) {
                if (idx >= cloud->size()) {
                    throw ValidationError("detections: point index " + std::to_string(idx) + " outside the cloud");
                }
            }
            d.bbox = Aabb::of(*cloud, d.point_indices);
        }
        dets.detections.push_back(std::move(d));
    }
    if (j.contains("params")) dets.params = j["params"];
    dets.validate();
    return dets;
}

void save_detections(const std::filesystem::path& path, const DetectionSet& dets, const json& metrics) {
    write_json(path, detections_to_json(dets, metrics));
}

DetectionSet load_detections(const std::filesystem::path& path, const PointCloud* cloud) {
    try {
        return detections_from_json(read_json(path), cloud);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

PointCloud colorize_detections(const PointCloud& cloud, const DetectionSet& dets) {
    PointCloud out;
    out.positions = cloud.positions;
    out.normals = cloud.normals;
    out.colors.assign(cloud.size(), Vec3(0.6, 0.6, 0.6));
    out.instance_ids.assign(cloud.size(), 0);
    for (std::size_t k = 0; k < dets.detections.size(); ++k) {
        // Golden-angle hues.
        const double h = std::fmod(0.61803398875 * static_cast<double>(k), 1.0) * 6.0;
        const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
        Vec3 c;
        switch (static_cast<int>(h)) {
            case 0: c = Vec3(1, x, 0); break;
            case 1: c = Vec3(x, 1, 0); break;
            case 2: c = Vec3(0, 1, x); break;
            case 3: c = Vec3(0, x, 1); break;
            case 4: c = Vec3(x, 0, 1); break;
            default: c = Vec3(1, 0, x); break;
        }
        for (auto idx : dets.detections[k].point_indices) {
            out.colors[idx] = c;
            out.instance_ids[idx] = dets.detections[k].id + 1;
        }
    }
    return out;
}

}  // namespace scd
