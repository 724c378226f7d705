#include "scd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "scd/json_util.hpp"
#include "scd/ply.hpp"
#include "scd/png_io.hpp"
#include "scd/render.hpp"

namespace scd::synth {

using nlohmann::json;

namespace {

const char* change_name(ChangeKind k) {
    switch (k) {
        case ChangeKind::Keep: return "keep";
        case ChangeKind::Move: return "move";
        case ChangeKind::Remove: return "remove";
        case ChangeKind::Add: return "add";
    }
    return "keep";
}

ChangeKind parse_change(const std::string& s) {
    if (s == "keep") return ChangeKind::Keep;
    if (s == "move") return ChangeKind::Move;
    if (s == "remove") return ChangeKind::Remove;
    if (s == "add") return ChangeKind::Add;
    throw ValidationError("scene spec: unknown change \"" + s + "\" (keep|move|remove|add)");
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("scene spec: " + what + " must be [x, y, z]");
    for (const auto& e : j) {
        if (!e.is_number()) throw ValidationError("scene spec: " + what + " must hold numbers");
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 yaw_rotation(double yaw) {
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

bool present(const CuboidSpec& c, Epoch e) {
    if (e == Epoch::Reference) return c.change != ChangeKind::Add;
    return c.change != ChangeKind::Remove;
}

struct Placement {
    Vec3 position;
    double yaw;
};

Placement placement(const CuboidSpec& c, Epoch e) {
    if (e == Epoch::Rescan && c.change == ChangeKind::Move) {
        return {c.position + c.move_translation, c.yaw + c.move_yaw};
    }
    return {c.position, c.yaw};
}

Rgb8 shade(const Rgb8& c, double f) {
    Rgb8 out;
    for (int k = 0; k < 3; ++k) {
        out[static_cast<std::size_t>(k)] =
            static_cast<std::uint8_t>(std::lround(std::clamp(c[static_cast<std::size_t>(k)] * f, 0.0, 255.0)));
    }
    return out;
}

// Footprint corners of a placed cuboid, counter-clockwise.
std::array<Vec3, 4> footprint(const CuboidSpec& c, const Placement& p, double grow) {
    const Mat3 r = yaw_rotation(p.yaw);
    const double hx = c.size.x() / 2 + grow;
    const double hy = c.size.y() / 2 + grow;
    return {p.position + r * Vec3(-hx, -hy, 0), p.position + r * Vec3(hx, -hy, 0),
            p.position + r * Vec3(hx, hy, 0), p.position + r * Vec3(-hx, hy, 0)};
}

bool inside_footprint(const CuboidSpec& c, const Placement& p, double grow, const Vec3& q) {
    const Vec3 local = yaw_rotation(p.yaw).transpose() * (q - p.position);
    return std::abs(local.x()) <= c.size.x() / 2 + grow && std::abs(local.y()) <= c.size.y() / 2 + grow;
}

std::vector<Surface> cuboid_surfaces(const CuboidSpec& c, const Placement& p) {
    const Mat3 r = yaw_rotation(p.yaw);
    const double sx = c.size.x(), sy = c.size.y(), sz = c.size.z();
    const double hx = sx / 2, hy = sy / 2;
    struct Local {
        Vec3 o, u, v;
        double shade;
    };
    const Local faces[] = {
        {{-hx, -hy, sz}, {sx, 0, 0}, {0, sy, 0}, 1.0},
        {{-hx, -hy, 0}, {sx, 0, 0}, {0, 0, sz}, 0.85},
        {{-hx, hy, 0}, {0, 0, sz}, {sx, 0, 0}, 0.75},
        {{-hx, -hy, 0}, {0, 0, sz}, {0, sy, 0}, 0.65},
        {{hx, -hy, 0}, {0, sy, 0}, {0, 0, sz}, 0.9},
    };
    std::vector<Surface> out;
    for (const auto& f : faces) {
        Surface s;
        s.origin = p.position + r * f.o;
        s.edge_u = r * f.u;
        s.edge_v = r * f.v;
        s.instance_id = c.instance_id;
        s.plane = -1;
        s.color = shade(c.color, f.shade);
        out.push_back(s);
    }
    return out;
}

std::vector<Surface> room_surfaces(const Vec3& room) {
    const double x = room.x(), y = room.y(), z = room.z();
    std::vector<Surface> out;
    auto add = [&](Vec3 o, Vec3 u, Vec3 v, int plane, Rgb8 color) {
        Surface s;
        s.origin = o;
        s.edge_u = u;
        s.edge_v = v;
        s.instance_id = 0;
        s.plane = plane;
        s.color = color;
        out.push_back(s);
    };
    add({0, 0, 0}, {x, 0, 0}, {0, y, 0}, 0, {128, 128, 128});
    add({0, 0, 0}, {0, 0, z}, {x, 0, 0}, 1, {210, 200, 180});
    add({0, y, 0}, {x, 0, 0}, {0, 0, z}, 2, {190, 200, 210});
    add({0, 0, 0}, {0, y, 0}, {0, 0, z}, 3, {200, 210, 190});
    add({x, 0, 0}, {0, 0, z}, {0, y, 0}, 4, {210, 190, 200});
    return out;
}

Vec3 to_unit(const Rgb8& c) { return Vec3(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0); }

}  // namespace

void SceneSpec::validate() const {
    if (!(room.x() > 0 && room.y() > 0 && room.z() > 0)) {
        throw ValidationError("scene spec: room dimensions must be positive");
    }
    if (!(density > 0)) throw ValidationError("scene spec: density must be positive");
    if (!(floor_margin >= 0)) throw ValidationError("scene spec: floor_margin must be >= 0");
    if (mask_parts < 1) throw ValidationError("scene spec: mask_parts must be >= 1");
    if (!(depth_noise_sigma >= 0)) throw ValidationError("scene spec: depth_noise_sigma must be >= 0");
    if (camera.count < 1) throw ValidationError("scene spec: camera count must be >= 1");
    if (!(camera.radius > 0)) throw ValidationError("scene spec: camera radius must be positive");
    camera.intrinsics.validate();

    std::set<std::uint32_t> ids;
    for (const auto& c : objects) {
        const std::string where = "scene spec: object " + std::to_string(c.instance_id);
        if (c.instance_id == 0 || c.instance_id >= kStructureMaskBase) {
            throw ValidationError(where + ": instance_id must be in [1, " +
                                  std::to_string(kStructureMaskBase - 1) + "]");
        }
        if (!ids.insert(c.instance_id).second) throw ValidationError(where + ": duplicate instance_id");
        if (!(c.size.x() > 0 && c.size.y() > 0 && c.size.z() > 0)) {
            throw ValidationError(where + ": size must be positive");
        }
        for (Epoch e : {Epoch::Reference, Epoch::Rescan}) {
            if (!present(c, e)) continue;
            const Placement p = placement(c, e);
            if (std::abs(p.position.z()) > 1e-12) throw ValidationError(where + ": objects must rest on the floor");
            for (const Vec3& q : footprint(c, p, 0.0)) {
                if (q.x() < 0 || q.y() < 0 || q.x() > room.x() || q.y() > room.y()) {
                    throw ValidationError(where + ": object leaves the room");
                }
            }
            if (c.size.z() > room.z()) throw ValidationError(where + ": object taller than the room");
        }
    }
}

json SceneSpec::to_json() const {
    json objs = json::array();
    for (const auto& c : objects) {
        json o{{"instance_id", c.instance_id},
               {"shape", "cuboid"},
               {"size", vec_json(c.size)},
               {"position", vec_json(c.position)},
               {"yaw", c.yaw},
               {"color", json::array({c.color[0], c.color[1], c.color[2]})},
               {"change", change_name(c.change)}};
        if (c.change == ChangeKind::Move) {
            o["translation"] = vec_json(c.move_translation);
            o["rotation_yaw"] = c.move_yaw;
        }
        objs.push_back(o);
    }
    const Intrinsics& k = camera.intrinsics;
    return json{{"room", vec_json(room)},
                {"objects", objs},
                {"camera",
                 {{"count", camera.count},
                  {"radius", camera.radius},
                  {"height", camera.height},
                  {"target_height", camera.target_height},
                  {"intrinsics",
                   {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}}}},
                {"density", density},
                {"floor_margin", floor_margin},
                {"floor_as_background", floor_as_background},
                {"mask_parts", mask_parts},
                {"depth_noise_sigma", depth_noise_sigma},
                {"seed", seed}};
}

SceneSpec SceneSpec::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("scene spec: must be a JSON object");
    SceneSpec s;
    try {
        if (j.contains("room")) s.room = vec_from(j["room"], "room");
        if (j.contains("density")) s.density = j["density"].get<double>();
        if (j.contains("floor_margin")) s.floor_margin = j["floor_margin"].get<double>();
        if (j.contains("floor_as_background")) s.floor_as_background = j["floor_as_background"].get<bool>();
        if (j.contains("mask_parts")) s.mask_parts = j["mask_parts"].get<int>();
        if (j.contains("depth_noise_sigma")) s.depth_noise_sigma = j["depth_noise_sigma"].get<double>();
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("camera")) {
            const json& c = j["camera"];
            if (c.contains("count")) s.camera.count = c["count"].get<int>();
            if (c.contains("radius")) s.camera.radius = c["radius"].get<double>();
            if (c.contains("height")) s.camera.height = c["height"].get<double>();
            if (c.contains("target_height")) s.camera.target_height = c["target_height"].get<double>();
            if (c.contains("intrinsics")) {
                const json& k = c["intrinsics"];
                s.camera.intrinsics = Intrinsics{k.at("fx").get<double>(), k.at("fy").get<double>(),
                                                 k.at("cx").get<double>(), k.at("cy").get<double>(),
                                                 k.at("width").get<int>(), k.at("height").get<int>()};
            }
        }
        if (j.contains("objects")) {
            for (const json& o : j["objects"]) {
                CuboidSpec c;
                if (o.contains("shape") && o["shape"] != "cuboid") {
                    throw ValidationError("scene spec: only cuboid shapes are supported");
                }
                c.instance_id = o.at("instance_id").get<std::uint32_t>();
                c.size = vec_from(o.at("size"), "size");
                c.position = vec_from(o.at("position"), "position");
                if (o.contains("yaw")) c.yaw = o["yaw"].get<double>();
                if (o.contains("color")) {
                    const json& col = o["color"];
                    if (!col.is_array() || col.size() != 3) throw ValidationError("scene spec: color must be [r, g, b]");
                    for (std::size_t k = 0; k < 3; ++k) c.color[k] = col[k].get<std::uint8_t>();
                }
                if (o.contains("change")) c.change = parse_change(o["change"].get<std::string>());
                if (o.contains("translation")) c.move_translation = vec_from(o["translation"], "translation");
                if (o.contains("rotation_yaw")) c.move_yaw = o["rotation_yaw"].get<double>();
                s.objects.push_back(c);
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scene spec: ") + e.what());
    }
    s.validate();
    return s;
}

SceneSpec preset_unchanged() {
    SceneSpec s;
    s.room = Vec3(3.5, 3.5, 1.0);
    s.density = 6400.0;
    s.objects = {
        {1, Vec3(0.4, 0.4, 0.4), Vec3(1.3, 1.2, 0), 0.0, {220, 50, 50}, ChangeKind::Keep, Vec3::Zero(), 0.0},
        {2, Vec3(0.4, 0.4, 0.4), Vec3(2.3, 1.8, 0), 0.0, {50, 180, 60}, ChangeKind::Keep, Vec3::Zero(), 0.0},
        {3, Vec3(0.4, 0.4, 0.4), Vec3(1.2, 2.3, 0), 0.0, {60, 80, 220}, ChangeKind::Keep, Vec3::Zero(), 0.0},
    };
    s.camera.radius = 1.6;
    return s;
}

SceneSpec preset_moved_and_removed() {
    SceneSpec s = preset_unchanged();
    s.objects[0].change = ChangeKind::Move;
    s.objects[0].move_translation = Vec3(0.5, 0, 0);
    s.objects[1].change = ChangeKind::Move;
    s.objects[1].move_translation = Vec3(0, 0.5, 0);
    s.objects[2].change = ChangeKind::Remove;
    return s;
}

SceneSpec preset_slid(double footprint_overlap) {
    if (!(footprint_overlap >= 0.0 && footprint_overlap < 1.0)) {
        throw ValidationError("preset_slid: overlap must be in [0, 1)");
    }
    SceneSpec s = preset_unchanged();
    const double length = 1.2;
    const double shift = length * (1.0 - footprint_overlap);
    // Old and new footprints together are centred in the room.
    const Vec3 start(s.room.x() / 2 - shift / 2, s.room.y() / 2, 0);
    s.objects = {{1, Vec3(length, 0.4, 0.4), start, 0.0, {200, 120, 40}, ChangeKind::Move, Vec3(shift, 0, 0), 0.0}};
    return s;
}

std::vector<Pose> camera_poses(const CameraRing& ring, const Vec3& room) {
    const Vec3 centre(room.x() / 2, room.y() / 2, 0);
    const Vec3 target(centre.x(), centre.y(), ring.target_height);
    std::vector<Pose> poses;
    for (int i = 0; i < ring.count; ++i) {
        const double a = 2.0 * M_PI * i / ring.count;
        const Vec3 eye(centre.x() + ring.radius * std::cos(a), centre.y() + ring.radius * std::sin(a), ring.height);
        const Vec3 forward = (target - eye).normalized();
        const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
        const Vec3 down = forward.cross(right);
        Mat3 r;
        r.col(0) = right;
        r.col(1) = down;
        r.col(2) = forward;
        poses.push_back(Pose::from_rotation_translation(r, eye));
    }
    return poses;
}

SceneState build_state(const SceneSpec& spec, Epoch epoch) {
    spec.validate();
    SceneState st;
    st.surfaces = room_surfaces(spec.room);
    std::vector<std::pair<const CuboidSpec*, Placement>> placed;
    for (const auto& c : spec.objects) {
        if (!present(c, epoch)) continue;
        const Placement p = placement(c, epoch);
        placed.emplace_back(&c, p);
        for (auto& s : cuboid_surfaces(c, p)) st.surfaces.push_back(s);
    }

    for (std::size_t si = 0; si < st.surfaces.size(); ++si) {
        const Surface& s = st.surfaces[si];
        const auto base = static_cast<std::uint32_t>(st.mesh.vertices.size());
        const Vec3 col = to_unit(s.color);
        const std::array<Vec3, 4> corners{s.origin, s.origin + s.edge_u, s.origin + s.edge_u + s.edge_v,
                                          s.origin + s.edge_v};
        for (const Vec3& v : corners) {
            st.mesh.vertices.push_back(v);
            st.mesh.colors.push_back(col);
        }
        if (st.mesh.add_face(base, base + 1, base + 2)) st.face_surface.push_back(static_cast<std::uint32_t>(si));
        if (st.mesh.add_face(base, base + 2, base + 3)) st.face_surface.push_back(static_cast<std::uint32_t>(si));
    }

    const double spacing = 1.0 / std::sqrt(spec.density);
    for (const Surface& s : st.surfaces) {
        const double lu = s.edge_u.norm(), lv = s.edge_v.norm();
        const long nu = std::max(1L, std::lround(lu / spacing));
        const long nv = std::max(1L, std::lround(lv / spacing));
        const Vec3 normal = s.edge_u.cross(s.edge_v).normalized();
        const Vec3 col = to_unit(s.color);
        for (long j = 0; j < nv; ++j) {
            for (long i = 0; i < nu; ++i) {
                const Vec3 p = s.origin + s.edge_u * ((i + 0.5) / nu) + s.edge_v * ((j + 0.5) / nv);
                if (s.plane == 0) {
                    bool covered = false;
                    for (const auto& [c, pl] : placed) {
                        if (inside_footprint(*c, pl, spec.floor_margin, p)) {
                            covered = true;
                            break;
                        }
                    }
                    if (covered) continue;
                }
                st.cloud.positions.push_back(p);
                st.cloud.colors.push_back(col);
                st.cloud.normals.push_back(normal);
                st.cloud.instance_ids.push_back(s.instance_id);
            }
        }
    }
    return st;
}

LabelImage oracle_masks(const SceneState& scene, const Pose& pose, const Intrinsics& intr, bool floor_as_background) {
    RenderOptions opts;
    opts.max_range = std::numeric_limits<double>::infinity();
    const MeshRender r = render_mesh(scene.mesh, pose, intr, opts);
    LabelImage out(intr.width, intr.height, 0);
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const std::int32_t f = r.face.at(x, y);
            if (f < 0) continue;
            const Surface& s = scene.surfaces[scene.face_surface[static_cast<std::size_t>(f)]];
            if (s.instance_id != 0) {
                out.at(x, y) = static_cast<std::uint16_t>(s.instance_id);
            } else if (!floor_as_background) {
                out.at(x, y) = static_cast<std::uint16_t>(kStructureMaskBase + s.plane);
            }
        }
    }
    return out;
}

ColorImage render_color(const SceneState& scene, const Pose& pose, const Intrinsics& intr) {
    RenderOptions opts;
    opts.max_range = std::numeric_limits<double>::infinity();
    const MeshRender r = render_mesh(scene.mesh, pose, intr, opts);
    ColorImage out(intr.width, intr.height, Rgb8{0, 0, 0});
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const std::int32_t f = r.face.at(x, y);
            if (f >= 0) out.at(x, y) = scene.surfaces[scene.face_surface[static_cast<std::size_t>(f)]].color;
        }
    }
    return out;
}

LabelImage fragment_masks(const LabelImage& labels, int parts, std::mt19937_64& rng) {
    if (parts < 1) throw ValidationError("fragment_masks: parts must be >= 1");
    if (parts == 1) return labels;

    const int w = labels.width(), h = labels.height();
    std::map<std::uint16_t, std::vector<int>> regions;  // id -> pixel linear indices
    for (int i = 0; i < w * h; ++i) {
        const std::uint16_t id = labels.data()[static_cast<std::size_t>(i)];
        if (id != 0) regions[id].push_back(i);
    }

    LabelImage out(w, h, 0);
    std::uint32_t next_id = 1;
    std::vector<int> owner(static_cast<std::size_t>(w) * h, -1);
    for (const auto& [id, pixels] : regions) {
        const int k = std::min<int>(parts, static_cast<int>(pixels.size()));
        // Farthest-point seeds inside the region, first one drawn from rng.
        std::vector<int> seeds;
        std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
        seeds.push_back(pixels[pick(rng)]);
        std::vector<double> dist(pixels.size(), std::numeric_limits<double>::infinity());
        while (static_cast<int>(seeds.size()) < k) {
            const int s = seeds.back();
            std::size_t best = 0;
            double best_d = -1.0;
            for (std::size_t p = 0; p < pixels.size(); ++p) {
                const double dx = pixels[p] % w - s % w, dy = pixels[p] / w - s / w;
                dist[p] = std::min(dist[p], dx * dx + dy * dy);
                if (dist[p] > best_d) {
                    best_d = dist[p];
                    best = p;
                }
            }
            seeds.push_back(pixels[best]);
        }
        if (next_id + static_cast<std::uint32_t>(k) > 65536u) {
            throw ValidationError("fragment_masks: more than 65535 fragment ids needed");
        }

        // Multi-source BFS over 4-connected pixels of the same id.
        std::deque<int> queue;
        for (int s = 0; s < k; ++s) {
            owner[static_cast<std::size_t>(seeds[static_cast<std::size_t>(s)])] = s;
            queue.push_back(seeds[static_cast<std::size_t>(s)]);
        }
        while (!queue.empty()) {
            const int p = queue.front();
            queue.pop_front();
            const int x = p % w, y = p / w;
            const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (const auto& n : nb) {
                if (!labels.in_bounds(n[0], n[1]) || labels.at(n[0], n[1]) != id) continue;
                const int q = n[1] * w + n[0];
                if (owner[static_cast<std::size_t>(q)] >= 0) continue;
                owner[static_cast<std::size_t>(q)] = owner[static_cast<std::size_t>(p)];
                queue.push_back(q);
            }
        }
        // Pixels in components holding no seed go to the nearest seed.
        for (int p : pixels) {
            if (owner[static_cast<std::size_t>(p)] >= 0) continue;
            double best = std::numeric_limits<double>::infinity();
            for (int s = 0; s < k; ++s) {
                const int sp = seeds[static_cast<std::size_t>(s)];
                const double dx = p % w - sp % w, dy = p / w - sp / w;
                if (dx * dx + dy * dy < best) {
                    best = dx * dx + dy * dy;
                    owner[static_cast<std::size_t>(p)] = s;
                }
            }
        }
        for (int p : pixels) {
            out.data()[static_cast<std::size_t>(p)] =
                static_cast<std::uint16_t>(next_id + static_cast<std::uint32_t>(owner[static_cast<std::size_t>(p)]));
        }
        next_id += static_cast<std::uint32_t>(k);
    }
    return out;
}

GroundTruth ground_truth(const SceneSpec& spec, const SceneState& rescan) {
    GroundTruth gt;
    for (const auto& c : spec.objects) {
        if (c.change == ChangeKind::Remove) {
            gt.removed_instances.push_back(c.instance_id);
            continue;
        }
        if (c.change != ChangeKind::Move && c.change != ChangeKind::Add) continue;
        GroundTruthInstance inst;
        inst.instance_id = c.instance_id;
        for (std::size_t i = 0; i < rescan.cloud.size(); ++i) {
            if (rescan.cloud.instance_ids[i] == c.instance_id) inst.point_indices.push_back(static_cast<std::uint32_t>(i));
        }
        gt.changed_instances.push_back(std::move(inst));
    }
    std::sort(gt.removed_instances.begin(), gt.removed_instances.end());
    std::sort(gt.changed_instances.begin(), gt.changed_instances.end(),
              [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
    return gt;
}

std::filesystem::path generate(const SceneSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "poses");
    fs::create_directories(out_dir / "depth");
    fs::create_directories(out_dir / "color");
    fs::create_directories(out_dir / "labels" / "color");

    const SceneState ref = build_state(spec, Epoch::Reference);
    const SceneState res = build_state(spec, Epoch::Rescan);
    save_point_cloud(out_dir / "reference.ply", ref.cloud);
    save_point_cloud(out_dir / "rescan.ply", res.cloud);
    save_mesh(out_dir / "reference_mesh.ply", ref.mesh);
    save_mesh(out_dir / "rescan_mesh.ply", res.mesh);
    save_ground_truth(out_dir / "ground_truth.json", ground_truth(spec, res));
    write_json(out_dir / "scene_spec.json", spec.to_json());

    SceneManifest manifest;
    manifest.reference_scan = out_dir / "reference.ply";
    manifest.rescan = out_dir / "rescan.ply";
    manifest.ground_truth = out_dir / "ground_truth.json";

    const Intrinsics& intr = spec.camera.intrinsics;
    const auto poses = camera_poses(spec.camera, spec.room);
    RenderOptions opts;
    opts.max_range = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        std::mt19937_64 rng(spec.seed * 1000003ULL + i);
        char name[32];
        std::snprintf(name, sizeof name, "view_%03zu", i);
        const std::string stem(name);

        save_pose(out_dir / "poses" / (stem + ".txt"), poses[i]);

        DepthImage depth = render_mesh(res.mesh, poses[i], intr, opts).depth;
        if (spec.depth_noise_sigma > 0) {
            std::normal_distribution<double> noise(0.0, spec.depth_noise_sigma);
            for (float& d : depth.data()) {
                if (valid_depth(d)) d = static_cast<float>(std::max(1e-3, d + noise(rng)));
            }
        }
        save_depth(out_dir / "depth" / (stem + ".png"), depth, manifest.depth_scale);
        save_color(out_dir / "color" / (stem + ".png"), render_color(res, poses[i], intr));
        const LabelImage masks =
            fragment_masks(oracle_masks(res, poses[i], intr, spec.floor_as_background), spec.mask_parts, rng);
        save_labels(out_dir / "labels" / "color" / (stem + ".png"), masks);

        ViewDescriptor d;
        d.pose_path = out_dir / "poses" / (stem + ".txt");
        d.intrinsics = intr;
        d.depth_path = out_dir / "depth" / (stem + ".png");
        d.color_path = out_dir / "color" / (stem + ".png");
        d.label_paths["color"] = out_dir / "labels" / "color" / (stem + ".png");
        manifest.views.push_back(d);
    }
    const fs::path manifest_path = out_dir / "manifest.json";
    save_manifest(manifest_path, manifest);
    return manifest_path;
}

}  // namespace scd::synth
