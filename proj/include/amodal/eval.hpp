#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amodal/instance.hpp"

namespace amodal {

struct EvalConfig {
  /// Matching thresholds; the default is 0.50:0.05:0.95.
  std::vector<double> iou_thresholds = default_thresholds();
  int max_detections = 100;  // per-image cap
  bool class_agnostic = true;

  static std::vector<double> default_thresholds();
  void validate() const;
};

struct EvalDetection {
  std::int64_t image_id = 0;
  BinaryMask mask;
  double score = 0.0;
  std::optional<std::string> category;
};

struct EvalGroundTruth {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  BinaryMask mask;
  std::optional<std::string> category;
};

struct ThresholdCurve {
  double threshold = 0.0;
  double ap = 0.0;      // percent
  double recall = 0.0;  // percent, at max_detections
};

struct MatchRecord {
  double threshold = 0.0;
  std::int64_t image_id = 0;
  int detection_index = 0;  // index into the input detection list
  std::int64_t gt_id = -1;  // -1: unmatched (false positive)
  double iou = 0.0;
  double score = 0.0;
};

struct ImageBreakdown {
  std::int64_t image_id = 0;
  std::int64_t n_gt = 0;
  std::int64_t n_detections = 0;            // after the per-image cap
  std::vector<int> matched_per_threshold;   // aligned with iou_thresholds
};

struct EvalReport {
  std::optional<double> ap;    // percent, averaged over thresholds
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ar;    // percent, mean recall over thresholds
  std::vector<ThresholdCurve> per_threshold;
  std::vector<ImageBreakdown> per_image;
  std::vector<MatchRecord> trace;  // audit trail of every matching decision
  std::int64_t n_gt = 0;
  std::int64_t n_detections = 0;
};

/// Greedy matching for one image: detections must be sorted by
/// descending score. Each detection takes the highest-IoU still
/// unmatched ground truth when that IoU reaches the threshold; IoU ties
/// break toward the lower ground-truth index. Returns, per detection,
/// the index into `gts` or -1.
std::vector<int> match_detections(const std::vector<const EvalDetection*>& dets,
                                  const std::vector<const EvalGroundTruth*>& gts,
                                  double iou_threshold);

/// 101-point interpolated AP (COCO convention) averaged over the
/// configured thresholds, plus AR at max_detections. Scores only
/// determine ranking. Reports null metrics when there is no ground
/// truth.
EvalReport average_precision(const std::vector<EvalDetection>& dets,
                             const std::vector<EvalGroundTruth>& gts,
                             const EvalConfig& cfg);

/// Independent verification path: the same definition evaluated by
/// explicit enumeration of the precision-recall staircase. Guarded to
/// small scenes (<= 20 detections and ground truths per image).
EvalReport oracle_ap(const std::vector<EvalDetection>& dets,
                     const std::vector<EvalGroundTruth>& gts,
                     const EvalConfig& cfg);

std::vector<EvalGroundTruth> ground_truth_from_manifest(
    const DatasetManifest& manifest);

/// Aggregate evaluation of a result set against a ground-truth
/// manifest. Detections referencing unknown images are an error
/// (listed). In class-specific mode metrics are computed per category
/// and averaged over the categories present in the ground truth.
struct ClassEvalReport {
  EvalReport overall;                          // class-agnostic or averaged
  std::map<std::string, EvalReport> per_class; // class-specific mode only
};

ClassEvalReport evaluate_run(const DatasetManifest& gt_manifest,
                             const std::vector<EvalDetection>& dets,
                             const EvalConfig& cfg);

std::string eval_report_to_json(const ClassEvalReport& report,
                                bool include_trace = false);

/// PR curve points (per threshold) as CSV: threshold,recall,precision.
std::string pr_curves_csv(const std::vector<EvalDetection>& dets,
                          const std::vector<EvalGroundTruth>& gts,
                          const EvalConfig& cfg);

}  // namespace amodal
