#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's algorithms; only its plain data types are shared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "scd/geometry.hpp"
#include "scd/synth.hpp"

namespace oracle {

using scd::Vec3;

// Depth (camera z) of the first surface hit through pixel centre (col, row),
// or nothing. The room is open at the top; cuboids are solid boxes.
inline std::optional<double> ray_cast(const scd::synth::SceneSpec& spec, scd::synth::Epoch epoch,
                                      const scd::Pose& pose, const scd::Intrinsics& intr, int col, int row) {
    const Vec3 dc((col - intr.cx) / intr.fx, (row - intr.cy) / intr.fy, 1.0);
    const Vec3 d = pose.rotation() * dc;  // camera z grows by 1 per unit t
    const Vec3 o = pose.position();
    double best = std::numeric_limits<double>::infinity();
    const double X = spec.room.x(), Y = spec.room.y(), Z = spec.room.z();
    auto consider = [&](double t, const Vec3& p, int skip_axis, const Vec3& lo, const Vec3& hi) {
        if (!(t > 1e-3) || t >= best) return;
        for (int a = 0; a < 3; ++a) {
            if (a == skip_axis) continue;
            if (p[a] < lo[a] - 1e-12 || p[a] > hi[a] + 1e-12) return;
        }
        best = t;
    };
    const Vec3 lo(0, 0, 0), hi(X, Y, Z);
    for (int axis = 0; axis < 3; ++axis) {
        if (d[axis] == 0) continue;
        for (double plane : {0.0, hi[axis]}) {
            if (axis == 2 && plane > 0) continue;  // no ceiling
            const double t = (plane - o[axis]) / d[axis];
            consider(t, o + t * d, axis, lo, hi);
        }
    }
    for (const auto& c : spec.objects) {
        using scd::synth::ChangeKind;
        if (epoch == scd::synth::Epoch::Reference && c.change == ChangeKind::Add) continue;
        if (epoch == scd::synth::Epoch::Rescan && c.change == ChangeKind::Remove) continue;
        Vec3 pos = c.position;
        double yaw = c.yaw;
        if (epoch == scd::synth::Epoch::Rescan && c.change == ChangeKind::Move) {
            pos += c.move_translation;
            yaw += c.move_yaw;
        }
        const double cs = std::cos(yaw), sn = std::sin(yaw);
        auto to_local = [&](const Vec3& v) { return Vec3(cs * v.x() + sn * v.y(), -sn * v.x() + cs * v.y(), v.z()); };
        const Vec3 ol = to_local(o - pos), dl = to_local(d);
        const Vec3 blo(-c.size.x() / 2, -c.size.y() / 2, 0), bhi(c.size.x() / 2, c.size.y() / 2, c.size.z());
        double tmin = -std::numeric_limits<double>::infinity(), tmax = std::numeric_limits<double>::infinity();
        bool miss = false;
        for (int a = 0; a < 3; ++a) {
            if (std::abs(dl[a]) < 1e-15) {
                if (ol[a] < blo[a] || ol[a] > bhi[a]) miss = true;
                continue;
            }
            double t0 = (blo[a] - ol[a]) / dl[a], t1 = (bhi[a] - ol[a]) / dl[a];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
        }
        if (!miss && tmin <= tmax && tmin > 1e-3 && tmin < best) best = tmin;
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

// Median by full sort, lower/upper mean for even sizes.
inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mad(const std::vector<double>& v) {
    const double m = median(v);
    std::vector<double> dev;
    for (double x : v) dev.push_back(std::abs(x - m));
    return median(dev);
}

// KL((p,1-p) || (q,1-q)) in nats after (1-eps) x + eps/2 smoothing.
inline double kl(double p, double q, double eps) {
    p = (1 - eps) * p + eps / 2;
    q = (1 - eps) * q + eps / 2;
    double out = 0.0;
    if (p > 0) out += p * std::log(p / q);
    if (p < 1) out += (1 - p) * std::log((1 - p) / (1 - q));
    return out;
}

struct Edge {
    std::size_t a, b;
    double w;
};

// Energy of a partition given as per-node component labels; component
// values are means of the members' smoothed probabilities.
inline double partition_energy(const std::vector<double>& p, const std::vector<Edge>& edges,
                               const std::vector<int>& comp, double lambda, double eps) {
    const int k = *std::max_element(comp.begin(), comp.end()) + 1;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        sum[static_cast<std::size_t>(comp[i])] += (1 - eps) * p[i] + eps / 2;
        cnt[static_cast<std::size_t>(comp[i])] += 1;
    }
    std::vector<double> val(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) val[static_cast<std::size_t>(c)] = sum[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)];
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        // Value is already smoothed; undo smoothing so kl() re-applies it.
        const double q = (val[static_cast<std::size_t>(comp[i])] - eps / 2) / (1 - eps);
        e += kl(p[i], q, eps);
    }
    for (const auto& ed : edges) {
        if (std::abs(val[static_cast<std::size_t>(comp[ed.a])] - val[static_cast<std::size_t>(comp[ed.b])]) > 1e-12) {
            e += lambda * ed.w;
        }
    }
    return e;
}

// Exhaustive minimum over restricted growth strings.
inline double min_partition_energy(const std::vector<double>& p, const std::vector<Edge>& edges, double lambda,
                                   double eps) {
    const std::size_t n = p.size();
    std::vector<int> comp(n, 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
        if (i == n) {
            best = std::min(best, partition_energy(p, edges, comp, lambda, eps));
            return;
        }
        for (int c = 0; c <= used; ++c) {
            comp[i] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    comp[0] = 0;
    rec(1, 1);
    return best;
}

}  // namespace oracle
