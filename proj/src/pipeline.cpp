#include "amodal/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "amodal/errors.hpp"

namespace amodal {

using nlohmann::json;

double refine_confidence(double score_front, double iou_estimate) {
  if (score_front < 0.0 || score_front > 1.0) {
    throw std::invalid_argument("refine_confidence: front score outside [0,1]");
  }
  if (iou_estimate < 0.0 || iou_estimate > 1.0) {
    throw std::invalid_argument("refine_confidence: IoU estimate outside [0,1]");
  }
  return score_front * iou_estimate;
}

namespace {

DetectionRecord record_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("image_id") || !j.contains("bbox") ||
      !j.contains("score")) {
    throw SchemaError(where + ": needs image_id, bbox, score");
  }
  DetectionRecord rec;
  rec.image_id = j.at("image_id").get<std::int64_t>();
  const auto& bbox = j.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw SchemaError(where + ": bbox must be [x, y, w, h]");
  }
  rec.box.x = bbox.at(0).get<double>();
  rec.box.y = bbox.at(1).get<double>();
  rec.box.w = bbox.at(2).get<double>();
  rec.box.h = bbox.at(3).get<double>();
  rec.score_front = j.at("score").get<double>();
  if (rec.score_front < 0.0 || rec.score_front > 1.0) {
    throw SchemaError(where + ": score " + std::to_string(rec.score_front) +
                      " outside [0,1]");
  }
  if (j.contains("category") && !j.at("category").is_null()) {
    rec.category = j.at("category").get<std::string>();
  }
  rec.box.kind = BoxKind::modal;
  if (j.contains("box_kind") && !j.at("box_kind").is_null()) {
    const std::string kind = j.at("box_kind").get<std::string>();
    if (kind == "amodal") {
      rec.box.kind = BoxKind::amodal;
    } else if (kind == "modal") {
      rec.box.kind = BoxKind::modal;
    } else {
      throw SchemaError(where + ": unknown box_kind '" + kind + "'");
    }
  }
  return rec;
}

}  // namespace

std::vector<DetectionRecord> detections_from_json(const std::string& text,
                                                  const std::string& hint) {
  std::vector<DetectionRecord> records;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return records;

  if (text[first] == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw SchemaError(hint + ": invalid JSON: " + e.what());
    }
    std::size_t index = 0;
    for (const auto& item : j) {
      records.push_back(record_from_json(
          item, hint + ": record " + std::to_string(index)));
      ++index;
    }
    return records;
  }

  // Line-delimited JSON objects.
  std::istringstream lines(text);
  std::string line;
  std::size_t index = 0;
  while (std::getline(lines, line)) {
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(hint + ": record " + std::to_string(index) +
                        ": invalid JSON: " + e.what());
    }
    records.push_back(
        record_from_json(j, hint + ": record " + std::to_string(index)));
    ++index;
  }
  return records;
}

std::vector<DetectionRecord> ingest_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open detections: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return detections_from_json(buf.str(), path);
}

int clamp_detections(std::vector<DetectionRecord>& dets,
                     const DatasetManifest& manifest) {
  int clamped = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const ImageInfo* info = manifest.find_image(dets[i].image_id);
    if (info == nullptr) {
      throw SchemaError("detection " + std::to_string(i) +
                        " references unknown image " +
                        std::to_string(dets[i].image_id));
    }
    const BoundingBox before = dets[i].box;
    const BoundingBox after = before.clamped(info->width, info->height);
    if (after.x != before.x || after.y != before.y || after.w != before.w ||
        after.h != before.h) {
      ++clamped;
    }
    dets[i].box = after;
  }
  return clamped;
}

std::vector<AmodalResult> run_inference(const Image& image,
                                        const std::vector<DetectionRecord>& dets,
                                        const Model& model) {
  const auto& cfg = model.config();

  // Front-end images may be any size; the model works at its own
  // resolution and the masks are mapped back.
  const bool needs_resize =
      image.height != cfg.image_size || image.width != cfg.image_size;
  Image model_image = image;
  if (needs_resize) {
    model_image = resize_nearest(image, cfg.image_size, cfg.image_size);
  }
  const double sx = static_cast<double>(cfg.image_size) / image.width;
  const double sy = static_cast<double>(cfg.image_size) / image.height;

  std::vector<AmodalResult> results;
  results.reserve(dets.size());
  for (const auto& det : dets) {
    AmodalResult result;
    result.detection = det;
    BoundingBox box = det.box.clamped(image.width, image.height);
    if (box.degenerate()) {
      // Third-party detection files happen to contain these; emit a
      // flagged empty result rather than aborting the batch.
      result.degenerate = true;
      result.amodal_mask = BinaryMask(image.height, image.width);
      result.iou_estimate = 0.0;
      result.score_refined = 0.0;
      results.push_back(std::move(result));
      continue;
    }
    BoundingBox model_box{box.x * sx, box.y * sy, box.w * sx, box.h * sy,
                          box.kind};
    const PromptedPrediction pred = model.predict(model_image, model_box);
    BinaryMask mask = threshold_logits(pred.mask_logits);
    if (needs_resize) {
      // Map the model-resolution mask back to the original frame.
      BinaryMask full(image.height, image.width);
      for (int r = 0; r < image.height; ++r) {
        const int mr = std::min(cfg.image_size - 1,
                                static_cast<int>(r * sy));
        for (int c = 0; c < image.width; ++c) {
          const int mc = std::min(cfg.image_size - 1,
                                  static_cast<int>(c * sx));
          full.set(r, c, mask.at(mr, mc));
        }
      }
      mask = std::move(full);
    }
    result.degenerate = mask_area(mask) == 0;  // nothing cleared the threshold
    result.amodal_mask = std::move(mask);
    result.iou_estimate = pred.iou_estimate;
    result.score_refined = refine_confidence(det.score_front, pred.iou_estimate);
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<std::size_t> score_descending_order(
    const std::vector<AmodalResult>& results) {
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return results[a].score_refined > results[b].score_refined;
                   });
  return order;
}

std::string results_to_json(const std::vector<AmodalResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    json j;
    j["image_id"] = r.detection.image_id;
    j["bbox"] = {r.detection.box.x, r.detection.box.y, r.detection.box.w,
               r.detection.box.h};
    j["score"] = r.detection.score_front;
    if (r.detection.category) j["category"] = *r.detection.category;
    j["box_kind"] =
        r.detection.box.kind == BoxKind::amodal ? "amodal" : "modal";
    const RunLengthEncoding rle = rle_encode(r.amodal_mask);
    j["segmentation"] = {{"size", {rle.height, rle.width}},
                         {"counts", rle.counts}};
    j["iou_estimate"] = r.iou_estimate;
    j["score_refined"] = r.score_refined;
    if (r.degenerate) j["degenerate"] = true;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_results(const std::vector<AmodalResult>& results,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write results: " + path);
  out << results_to_json(results);
}

std::vector<EvalDetection> load_results_as_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open results: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_array()) throw SchemaError(path + ": result file must be an array");

  std::vector<EvalDetection> dets;
  std::size_t index = 0;
  for (const auto& item : j) {
    const std::string where = path + ": record " + std::to_string(index++);
    if (!item.contains("image_id") || !item.contains("segmentation")) {
      throw SchemaError(where + ": needs image_id and segmentation");
    }
    EvalDetection det;
    det.image_id = item.at("image_id").get<std::int64_t>();
    const auto& seg = item.at("segmentation");
    if (!seg.contains("size") || !seg.contains("counts")) {
      throw SchemaError(where + ": segmentation needs size and counts");
    }
    RunLengthEncoding rle;
    rle.height = seg.at("size").at(0).get<int>();
    rle.width = seg.at("size").at(1).get<int>();
    for (const auto& c : seg.at("counts")) {
      rle.counts.push_back(c.get<std::int64_t>());
    }
    try {
      det.mask = rle_decode(rle);
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (item.contains("score_refined")) {
      det.score = item.at("score_refined").get<double>();
    } else if (item.contains("score")) {
      det.score = item.at("score").get<double>();
    } else {
      throw SchemaError(where + ": needs score_refined or score");
    }
    if (item.contains("category") && !item.at("category").is_null()) {
      det.category = item.at("category").get<std::string>();
    }
    dets.push_back(std::move(det));
  }
  return dets;
}

}  // namespace amodal
