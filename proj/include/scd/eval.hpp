#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scd/detection.hpp"
#include "scd/manifest.hpp"

namespace scd {

enum class IouMode { Point, Box };

// |pred ∩ gt| / |pred ∪ gt| over sorted index sets; 0 when both are empty.
double iou(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt);
double box_iou(const Aabb& a, const Aabb& b);

struct Match {
    std::size_t gt = 0;          // index into GroundTruth::changed_instances
    std::uint32_t detection = 0; // Detection::id
    double iou = 0.0;
};

// IoU table, rows = ground-truth instances, columns = detections (in set order).
// Box mode needs the rescan cloud to box the ground-truth points.
std::vector<std::vector<double>> iou_table(const DetectionSet& dets, const GroundTruth& gt, IouMode mode,
                                           const PointCloud* cloud = nullptr);

// One-to-one greedy matching in descending IoU; ties prefer the lower
// detection id, then the lower ground-truth index.
std::vector<Match> greedy_match(const DetectionSet& dets, const GroundTruth& gt, IouMode mode = IouMode::Point,
                                const PointCloud* cloud = nullptr);

// Percentage of ground-truth instances whose matched IoU exceeds k.
double recall_at(const DetectionSet& dets, const GroundTruth& gt, double k, IouMode mode = IouMode::Point,
                 const PointCloud* cloud = nullptr);

// All-point interpolated area under the precision-recall curve.
double average_precision(const DetectionSet& dets, const GroundTruth& gt, double k = 0.25,
                         IouMode mode = IouMode::Point, const PointCloud* cloud = nullptr);

struct EvalReport {
    std::map<double, double> recall;  // k -> percent
    double ap25 = 0.0;
    std::vector<double> gt_best_iou;  // matched IoU per ground-truth instance (0 if unmatched)
    std::vector<Match> matches;
    std::size_t gt_count = 0;
    std::size_t detection_count = 0;

    nlohmann::json to_json(const GroundTruth& gt) const;
    std::string table() const;
};

EvalReport evaluate(const DetectionSet& dets, const GroundTruth& gt, std::span<const double> ks,
                    IouMode mode = IouMode::Point, const PointCloud* cloud = nullptr);

}  // namespace scd
