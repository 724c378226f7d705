#include "scd/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace scd {

double iou(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt) {
    std::size_t inter = 0;
    auto a = pred.begin();
    auto b = gt.begin();
    while (a != pred.end() && b != gt.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            ++inter;
            ++a;
            ++b;
        }
    }
    const std::size_t uni = pred.size() + gt.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double box_iou(const Aabb& a, const Aabb& b) {
    Aabb inter{a.min.cwiseMax(b.min), a.max.cwiseMin(b.max)};
    const double vi = inter.volume();
    const double vu = a.volume() + b.volume() - vi;
    return vu <= 0.0 ? 0.0 : vi / vu;
}

std::vector<std::vector<double>> iou_table(const DetectionSet& dets, const GroundTruth& gt, IouMode mode,
                                           const PointCloud* cloud) {
    if (mode == IouMode::Box && !cloud) throw ValidationError("box IoU needs the rescan cloud");
    std::vector<std::vector<double>> table(gt.changed_instances.size(), std::vector<double>(dets.size(), 0.0));
    for (std::size_t g = 0; g < gt.changed_instances.size(); ++g) {
        const auto& gpts = gt.changed_instances[g].point_indices;
        const Aabb gbox = mode == IouMode::Box ? Aabb::of(*cloud, gpts) : Aabb{};
        for (std::size_t d = 0; d < dets.size(); ++d) {
            const Detection& det = dets.detections[d];
            table[g][d] = mode == IouMode::Point ? iou(det.point_indices, gpts)
                                                 : box_iou(Aabb::of(*cloud, det.point_indices), gbox);
        }
    }
    return table;
}

std::vector<Match> greedy_match(const DetectionSet& dets, const GroundTruth& gt, IouMode mode,
                                const PointCloud* cloud) {
    const auto table = iou_table(dets, gt, mode, cloud);
    std::vector<Match> pairs;
    for (std::size_t g = 0; g < table.size(); ++g)
        for (std::size_t d = 0; d < dets.size(); ++d)
            if (table[g][d] > 0.0) pairs.push_back({g, dets.detections[d].id, table[g][d]});
    std::sort(pairs.begin(), pairs.end(), [](const Match& a, const Match& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.detection != b.detection) return a.detection < b.detection;
        return a.gt < b.gt;
    });
    std::vector<bool> gt_used(table.size(), false);
    std::map<std::uint32_t, bool> det_used;
    std::vector<Match> out;
    for (const Match& m : pairs) {
        if (gt_used[m.gt] || det_used[m.detection]) continue;
        gt_used[m.gt] = true;
        det_used[m.detection] = true;
        out.push_back(m);
    }
    std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.gt < b.gt; });
    return out;
}

double recall_at(const DetectionSet& dets, const GroundTruth& gt, double k, IouMode mode, const PointCloud* cloud) {
    if (gt.changed_instances.empty()) throw ValidationError("recall_at: no ground truth");
    std::size_t hits = 0;
    for (const Match& m : greedy_match(dets, gt, mode, cloud)) hits += m.iou > k ? 1 : 0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.changed_instances.size());
}

double average_precision(const DetectionSet& dets, const GroundTruth& gt, double k, IouMode mode,
                         const PointCloud* cloud) {
    const std::size_t n_gt = gt.changed_instances.size();
    if (dets.size() == 0 || n_gt == 0) return 0.0;
    const auto table = iou_table(dets, gt, mode, cloud);
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dets.detections[a].score != dets.detections[b].score) {
            return dets.detections[a].score > dets.detections[b].score;
        }
        return dets.detections[a].id < dets.detections[b].id;
    });
    std::vector<bool> taken(n_gt, false);
    std::vector<double> precision, recall;
    std::size_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t d = order[rank];
        double best = 0.0;
        std::size_t best_g = n_gt;
        for (std::size_t g = 0; g < n_gt; ++g) {
            if (!taken[g] && table[g][d] > best) {
                best = table[g][d];
                best_g = g;
            }
        }
        if (best_g < n_gt && best > k) {
            taken[best_g] = true;
            ++tp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

EvalReport evaluate(const DetectionSet& dets, const GroundTruth& gt, std::span<const double> ks, IouMode mode,
                    const PointCloud* cloud) {
    EvalReport r;
    r.gt_count = gt.changed_instances.size();
    r.detection_count = dets.size();
    r.matches = greedy_match(dets, gt, mode, cloud);
    r.gt_best_iou.assign(r.gt_count, 0.0);
    for (const Match& m : r.matches) r.gt_best_iou[m.gt] = m.iou;
    for (double k : ks) r.recall[k] = recall_at(dets, gt, k, mode, cloud);
    r.ap25 = average_precision(dets, gt, 0.25, mode, cloud);
    return r;
}

nlohmann::json EvalReport::to_json(const GroundTruth& gt) const {
    nlohmann::json j;
    j["recall"] = nlohmann::json::object();
    for (const auto& [k, v] : recall) {
        std::ostringstream key;
        key << std::fixed << std::setprecision(2) << k;
        j["recall"][key.str()] = v;
    }
    j["ap25"] = ap25;
    j["gt_count"] = gt_count;
    j["detection_count"] = detection_count;
    j["matches"] = nlohmann::json::array();
    for (const Match& m : matches) {
        j["matches"].push_back(
            {{"gt_instance", gt.changed_instances.at(m.gt).instance_id}, {"detection", m.detection}, {"iou", m.iou}});
    }
    j["gt_best_iou"] = gt_best_iou;
    return j;
}

std::string EvalReport::table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    for (const auto& [k, _] : recall) out << "Recall@" << k << "  ";
    out << "AP@0.25\n";
    for (const auto& [k, v] : recall) out << std::setw(11) << v << "  ";
    out << std::setw(7) << 100.0 * ap25 << '\n';
    return out.str();
}

}  // namespace scd
