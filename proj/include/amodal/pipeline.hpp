#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amodal/eval.hpp"
#include "amodal/image.hpp"
#include "amodal/instance.hpp"
#include "amodal/model.hpp"

namespace amodal {

/// One front-end detector output.
struct DetectionRecord {
  std::int64_t image_id = 0;
  BoundingBox box;  // kind carries modal/amodal per the detector
  double score_front = 0.0;
  std::optional<std::string> category;
  std::optional<BinaryMask> modal_mask;  // some detectors supply one; unused
};

struct AmodalResult {
  DetectionRecord detection;
  BinaryMask amodal_mask;
  double iou_estimate = 0.0;
  double score_refined = 0.0;
  bool degenerate = false;  // zero-area box after clamping
};

/// score_front * iou_estimate. Both factors must be in [0, 1].
double refine_confidence(double score_front, double iou_estimate);

/// Detection file: a JSON array (or one JSON object per line) of
/// {image_id, bbox: [x, y, w, h], score, category?, box_kind?};
/// box_kind defaults to "modal". Violations carry the record index.
std::vector<DetectionRecord> ingest_detections(const std::string& path);
std::vector<DetectionRecord> detections_from_json(const std::string& text,
                                                  const std::string& hint);

/// Clamps every box to its image's bounds (from the manifest). Returns
/// how many boxes actually changed, for the caller to warn about.
/// Unknown image ids are an error.
int clamp_detections(std::vector<DetectionRecord>& dets,
                     const DatasetManifest& manifest);

/// Prompts the model with every detection box for one image. One result
/// per detection, input order preserved. Degenerate boxes yield a
/// flagged empty-mask result instead of failing the batch.
std::vector<AmodalResult> run_inference(const Image& image,
                                        const std::vector<DetectionRecord>& dets,
                                        const Model& model);

/// Indices of `results` sorted by descending refined score; ties keep
/// input order.
std::vector<std::size_t> score_descending_order(
    const std::vector<AmodalResult>& results);

/// Output schema: detection fields plus
/// {segmentation: RLE, iou_estimate, score_refined}.
std::string results_to_json(const std::vector<AmodalResult>& results);
void write_results(const std::vector<AmodalResult>& results,
                   const std::string& path);

/// Reads a result file back as evaluator input (uses score_refined).
std::vector<EvalDetection> load_results_as_detections(const std::string& path);

}  // namespace amodal
