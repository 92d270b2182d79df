#pragma once

#include "json.hpp"
#include "zoomspec/iqcore.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace zoomspec {

struct Match {
  std::size_t det = 0;
  std::optional<std::size_t> truth;
  double iou = 0.0;
};

// Greedy by descending confidence (input order breaks ties). Each detection
// takes the unmatched truth with the highest plain T-F IoU >= iou_thresh.
// Result is indexed like `dets`. With class_aware, only same-class pairs
// may match.
std::vector<Match> match_detections(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                    double iou_thresh, bool class_aware = false);

// One recording's worth of detections and ground truth.
struct EvalScene {
  std::vector<Detection> dets;
  std::vector<EmitterTruth> truths;
};

// All-points interpolated AP. Zero truths: 1 with no detections, else 0.
double average_precision(std::span<const Detection> dets, std::span<const EmitterTruth> truths, double iou_thresh);
// Matching per scene, PR sweep over the pooled detections.
double average_precision(std::span<const EvalScene> scenes, double iou_thresh);

// 0.50, 0.55, ..., 0.95
std::array<double, 10> iou_thresholds();

double map_50_95(std::span<const Detection> dets, std::span<const EmitterTruth> truths);
double map_50_95(std::span<const EvalScene> scenes);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Detections with confidence >= conf_thresh only.
PrecisionRecall precision_recall_at(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                    double iou_thresh, double conf_thresh = 0.0);
PrecisionRecall precision_recall_at(std::span<const EvalScene> scenes, double iou_thresh, double conf_thresh = 0.0);

// (kNumModClasses + 1)^2 counts; index kNumModClasses is background.
// Rows are true classes, columns predicted classes.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
constexpr std::size_t kBackground = kNumModClasses;

ConfusionMatrix confusion_matrix(std::span<const Detection> dets, std::span<const EmitterTruth> truths,
                                 double iou_thresh);
ConfusionMatrix confusion_matrix(std::span<const EvalScene> scenes, double iou_thresh);

struct EvalReport {
  std::map<double, double> ap_per_iou;
  double map_50_95 = 0.0;
  double precision_50 = 0.0;
  double recall_50 = 0.0;
  // Classes seen in the truths or detections.
  std::map<ModClass, std::map<double, double>> per_class_ap;
  // Mean over classes present in the truths of their mAP@0.5:0.95.
  double class_map_50_95 = 0.0;
  ConfusionMatrix confusion;
};

EvalReport evaluate(std::span<const EvalScene> scenes);
EvalReport evaluate(std::span<const Detection> dets, std::span<const EmitterTruth> truths);

nlohmann::json report_to_json(const EvalReport& r);
void write_report(const EvalReport& r, const std::filesystem::path& path);

// `<name>.det.json`
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_detections(std::span<const Detection> dets, const std::filesystem::path& path);

} // namespace zoomspec
