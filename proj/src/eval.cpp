#include "amodal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "amodal/errors.hpp"

namespace amodal {

std::vector<double> EvalConfig::default_thresholds() {
  std::vector<double> t;
  for (int p = 50; p <= 95; p += 5) t.push_back(p / 100.0);
  return t;
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) {
    throw std::invalid_argument("eval: no IoU thresholds");
  }
  double prev = 0.0;
  for (const double t : iou_thresholds) {
    if (t <= prev || t > 1.0) {
      throw std::invalid_argument(
          "eval: thresholds must be strictly increasing in (0, 1]");
    }
    prev = t;
  }
  if (max_detections <= 0) {
    throw std::invalid_argument("eval: max_detections must be positive");
  }
}

std::vector<int> match_detections(
    const std::vector<const EvalDetection*>& dets,
    const std::vector<const EvalGroundTruth*>& gts, double iou_threshold) {
  std::vector<int> assignment(dets.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = mask_iou(dets[d]->mask, gts[g]->mask);
      if (best < 0 || iou > best_iou) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      assignment[d] = best;
      taken[best] = true;
    }
  }
  return assignment;
}

namespace {

/// Global detection order: descending score, ties by input index.
std::vector<int> score_order(const std::vector<EvalDetection>& dets) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

std::vector<double> recall_grid() {
  std::vector<double> r;
  for (int k = 0; k <= 100; ++k) r.push_back(k / 100.0);
  return r;
}

struct PreparedScene {
  // Detections kept after the per-image cap, in global score order.
  std::vector<int> det_indices;                 // into the input list
  std::vector<std::int64_t> det_image;          // image per kept detection
  std::map<std::int64_t, std::vector<int>> image_dets;  // kept, score order
  std::map<std::int64_t, std::vector<int>> image_gts;   // input order
};

PreparedScene prepare(const std::vector<EvalDetection>& dets,
                      const std::vector<EvalGroundTruth>& gts,
                      const EvalConfig& cfg) {
  PreparedScene scene;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    scene.image_gts[gts[g].image_id].push_back(static_cast<int>(g));
  }
  std::map<std::int64_t, int> per_image_count;
  for (const int d : score_order(dets)) {
    auto& count = per_image_count[dets[d].image_id];
    if (count >= cfg.max_detections) continue;
    ++count;
    scene.det_indices.push_back(d);
    scene.det_image.push_back(dets[d].image_id);
    scene.image_dets[dets[d].image_id].push_back(d);
  }
  return scene;
}

void check_dimensions(const std::vector<EvalDetection>& dets,
                      const std::vector<EvalGroundTruth>& gts,
                      const PreparedScene& scene) {
  for (const auto& [image_id, gt_list] : scene.image_gts) {
    const auto it = scene.image_dets.find(image_id);
    if (it == scene.image_dets.end() || gt_list.empty()) continue;
    const BinaryMask& ref = gts[gt_list.front()].mask;
    for (const int d : it->second) {
      if (!dets[d].mask.same_shape(ref)) {
        throw DimensionError("eval: detection mask shape differs from ground "
                             "truth in image " +
                             std::to_string(image_id));
      }
    }
  }
}

}  // namespace

EvalReport average_precision(const std::vector<EvalDetection>& dets,
                             const std::vector<EvalGroundTruth>& gts,
                             const EvalConfig& cfg) {
  cfg.validate();
  EvalReport report;
  report.n_gt = static_cast<std::int64_t>(gts.size());
  report.n_detections = static_cast<std::int64_t>(dets.size());
  if (gts.empty()) return report;  // metrics stay null

  const PreparedScene scene = prepare(dets, gts, cfg);
  check_dimensions(dets, gts, scene);
  const std::vector<double> grid = recall_grid();
  const double n_gt = static_cast<double>(gts.size());

  // per-image breakdown skeleton (every image seen on either side)
  std::map<std::int64_t, std::size_t> image_row;
  for (const auto& [image_id, gt_list] : scene.image_gts) {
    image_row.emplace(image_id, image_row.size());
    report.per_image.push_back(ImageBreakdown{
        image_id, static_cast<std::int64_t>(gt_list.size()), 0, {}});
  }
  for (const auto& [image_id, det_list] : scene.image_dets) {
    auto [it, inserted] = image_row.emplace(image_id, image_row.size());
    if (inserted) report.per_image.push_back(ImageBreakdown{image_id, 0, 0, {}});
    report.per_image[it->second].n_detections =
        static_cast<std::int64_t>(det_list.size());
  }

  double ap_sum = 0.0;
  double recall_sum = 0.0;
  for (std::size_t ti = 0; ti < cfg.iou_thresholds.size(); ++ti) {
    const double threshold = cfg.iou_thresholds[ti];
    // Per-image greedy matching; flags indexed like scene.det_indices.
    std::map<std::int64_t, std::vector<int>> assignments;
    for (const auto& [image_id, det_list] : scene.image_dets) {
      std::vector<const EvalDetection*> dptr;
      std::vector<const EvalGroundTruth*> gptr;
      for (const int d : det_list) dptr.push_back(&dets[d]);
      const auto git = scene.image_gts.find(image_id);
      if (git != scene.image_gts.end()) {
        for (const int g : git->second) gptr.push_back(&gts[g]);
      }
      std::vector<int> local = match_detections(dptr, gptr, threshold);
      int matched = 0;
      for (std::size_t i = 0; i < local.size(); ++i) {
        MatchRecord rec;
        rec.threshold = threshold;
        rec.image_id = image_id;
        rec.detection_index = det_list[i];
        rec.score = dets[det_list[i]].score;
        if (local[i] >= 0) {
          const int g = git->second[local[i]];
          rec.gt_id = gts[g].id;
          rec.iou = mask_iou(dets[det_list[i]].mask, gts[g].mask);
          ++matched;
        }
        report.trace.push_back(rec);
      }
      report.per_image[image_row.at(image_id)].matched_per_threshold.push_back(
          matched);
      assignments[image_id] = std::move(local);
    }
    // images with ground truth but no detections match nothing
    for (auto& row : report.per_image) {
      row.matched_per_threshold.resize(ti + 1, 0);
    }

    // Cumulate TP/FP in global score order.
    std::map<std::int64_t, std::size_t> cursor;
    std::vector<bool> tp_flags;
    tp_flags.reserve(scene.det_indices.size());
    for (std::size_t i = 0; i < scene.det_indices.size(); ++i) {
      const std::int64_t image_id = scene.det_image[i];
      const std::size_t pos = cursor[image_id]++;
      tp_flags.push_back(assignments[image_id][pos] >= 0);
    }

    const std::size_t n = tp_flags.size();
    std::vector<double> precision(n), recall(n);
    double tp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (tp_flags[k]) tp += 1.0;
      precision[k] = tp / static_cast<double>(k + 1);
      recall[k] = tp / n_gt;
    }
    // Monotone precision from the tail (COCO convention).
    for (std::size_t k = n; k-- > 1;) {
      precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }

    double ap_t = 0.0;
    for (const double r : grid) {
      const auto it = std::lower_bound(recall.begin(), recall.end(), r);
      if (it != recall.end()) {
        ap_t += precision[static_cast<std::size_t>(it - recall.begin())];
      }
    }
    ap_t /= static_cast<double>(grid.size());
    const double recall_t = n > 0 ? recall.back() : 0.0;

    report.per_threshold.push_back(
        ThresholdCurve{threshold, 100.0 * ap_t, 100.0 * recall_t});
    ap_sum += ap_t;
    recall_sum += recall_t;
    if (threshold == 0.50) report.ap50 = 100.0 * ap_t;
    if (threshold == 0.75) report.ap75 = 100.0 * ap_t;
  }

  report.ap = 100.0 * ap_sum / static_cast<double>(cfg.iou_thresholds.size());
  report.ar =
      100.0 * recall_sum / static_cast<double>(cfg.iou_thresholds.size());
  return report;
}

EvalReport oracle_ap(const std::vector<EvalDetection>& dets,
                     const std::vector<EvalGroundTruth>& gts,
                     const EvalConfig& cfg) {
  cfg.validate();
  {
    std::map<std::int64_t, int> dcount, gcount;
    for (const auto& d : dets) ++dcount[d.image_id];
    for (const auto& g : gts) ++gcount[g.image_id];
    for (const auto& [id, c] : dcount) {
      if (c > 20) throw std::invalid_argument("oracle_ap: size guard (>20 "
                                              "detections in image " +
                                              std::to_string(id) + ")");
    }
    for (const auto& [id, c] : gcount) {
      if (c > 20) throw std::invalid_argument(
          "oracle_ap: size guard (>20 ground truths in image " +
          std::to_string(id) + ")");
    }
  }

  EvalReport report;
  report.n_gt = static_cast<std::int64_t>(gts.size());
  report.n_detections = static_cast<std::int64_t>(dets.size());
  if (gts.empty()) return report;

  // Global order: score descending, stable by input index.
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].score > dets[b].score;
  });
  // Per-image cap.
  std::map<std::int64_t, int> seen;
  std::vector<int> kept;
  for (const int d : order) {
    if (seen[dets[d].image_id]++ < cfg.max_detections) kept.push_back(d);
  }

  const double n_gt = static_cast<double>(gts.size());
  double ap_sum = 0.0;
  double recall_sum = 0.0;
  for (const double threshold : cfg.iou_thresholds) {
    // Greedy matching, re-derived from scratch: walk the global list,
    // each detection grabs its best still-free ground truth.
    std::vector<bool> gt_taken(gts.size(), false);
    std::vector<bool> is_tp;
    for (const int d : kept) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gts[g].image_id != dets[d].image_id || gt_taken[g]) continue;
        const double iou = mask_iou(dets[d].mask, gts[g].mask);
        if (best < 0 || iou > best_iou) {
          best = static_cast<int>(g);
          best_iou = iou;
        }
      }
      if (best >= 0 && best_iou >= threshold) {
        gt_taken[best] = true;
        is_tp.push_back(true);
      } else {
        is_tp.push_back(false);
      }
    }

    // Explicit precision-recall staircase.
    const std::size_t n = is_tp.size();
    std::vector<double> p_k(n), r_k(n);
    double tp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (is_tp[k]) tp += 1.0;
      p_k[k] = tp / static_cast<double>(k + 1);
      r_k[k] = tp / n_gt;
    }

    double ap_t = 0.0;
    for (int gi = 0; gi <= 100; ++gi) {
      const double r = gi / 100.0;
      double best_p = 0.0;  // max precision at recall >= r
      for (std::size_t k = 0; k < n; ++k) {
        if (r_k[k] >= r && p_k[k] > best_p) best_p = p_k[k];
      }
      ap_t += best_p;
    }
    ap_t /= 101.0;
    const double recall_t = n > 0 ? r_k.back() : 0.0;

    report.per_threshold.push_back(
        ThresholdCurve{threshold, 100.0 * ap_t, 100.0 * recall_t});
    ap_sum += ap_t;
    recall_sum += recall_t;
    if (threshold == 0.50) report.ap50 = 100.0 * ap_t;
    if (threshold == 0.75) report.ap75 = 100.0 * ap_t;
  }
  report.ap = 100.0 * ap_sum / static_cast<double>(cfg.iou_thresholds.size());
  report.ar =
      100.0 * recall_sum / static_cast<double>(cfg.iou_thresholds.size());
  return report;
}

std::vector<EvalGroundTruth> ground_truth_from_manifest(
    const DatasetManifest& manifest) {
  std::vector<EvalGroundTruth> gts;
  for (const auto& ann : manifest.annotations) {
    EvalGroundTruth gt;
    gt.id = ann.id;
    gt.image_id = ann.image_id;
    gt.mask = ann.amodal_mask;
    gt.category = ann.category;
    gts.push_back(std::move(gt));
  }
  return gts;
}

ClassEvalReport evaluate_run(const DatasetManifest& gt_manifest,
                             const std::vector<EvalDetection>& dets,
                             const EvalConfig& cfg) {
  // Align detections with the manifest's images.
  std::vector<std::int64_t> unknown;
  for (const auto& d : dets) {
    if (gt_manifest.find_image(d.image_id) == nullptr) {
      unknown.push_back(d.image_id);
    }
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::ostringstream msg;
    msg << "eval: detections reference unknown image ids:";
    for (const auto id : unknown) msg << " " << id;
    throw SchemaError(msg.str());
  }

  const std::vector<EvalGroundTruth> gts =
      ground_truth_from_manifest(gt_manifest);

  ClassEvalReport out;
  if (cfg.class_agnostic) {
    out.overall = average_precision(dets, gts, cfg);
    return out;
  }

  // Class-specific mode: group by category and average over the
  // categories present in the ground truth.
  std::set<std::string> categories;
  for (const auto& g : gts) categories.insert(g.category.value_or(""));
  double ap = 0.0, ap50 = 0.0, ap75 = 0.0, ar = 0.0;
  int counted = 0;
  for (const auto& cat : categories) {
    std::vector<EvalDetection> cd;
    std::vector<EvalGroundTruth> cg;
    for (const auto& d : dets) {
      if (d.category.value_or("") == cat) cd.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.category.value_or("") == cat) cg.push_back(g);
    }
    EvalReport r = average_precision(cd, cg, cfg);
    if (r.ap) {
      ap += *r.ap;
      ap50 += r.ap50.value_or(0.0);
      ap75 += r.ap75.value_or(0.0);
      ar += r.ar.value_or(0.0);
      ++counted;
    }
    out.per_class[cat] = std::move(r);
  }
  out.overall.n_gt = static_cast<std::int64_t>(gts.size());
  out.overall.n_detections = static_cast<std::int64_t>(dets.size());
  if (counted > 0) {
    out.overall.ap = ap / counted;
    out.overall.ap50 = ap50 / counted;
    out.overall.ap75 = ap75 / counted;
    out.overall.ar = ar / counted;
  }
  return out;
}

namespace {

nlohmann::json report_json(const EvalReport& r, bool include_trace) {
  nlohmann::json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("ap", r.ap);
  put("ap50", r.ap50);
  put("ap75", r.ap75);
  put("ar", r.ar);
  j["n_gt"] = r.n_gt;
  j["n_detections"] = r.n_detections;
  j["per_threshold"] = nlohmann::json::array();
  for (const auto& t : r.per_threshold) {
    j["per_threshold"].push_back({{"iou_threshold", t.threshold},
                                  {"ap", t.ap},
                                  {"recall", t.recall}});
  }
  j["per_image"] = nlohmann::json::array();
  for (const auto& row : r.per_image) {
    j["per_image"].push_back({{"image_id", row.image_id},
                              {"n_gt", row.n_gt},
                              {"n_detections", row.n_detections},
                              {"matched_per_threshold",
                               row.matched_per_threshold}});
  }
  if (include_trace) {
    j["matches"] = nlohmann::json::array();
    for (const auto& m : r.trace) {
      j["matches"].push_back({{"threshold", m.threshold},
                              {"image_id", m.image_id},
                              {"detection_index", m.detection_index},
                              {"gt_id", m.gt_id},
                              {"iou", m.iou},
                              {"score", m.score}});
    }
  }
  return j;
}

}  // namespace

std::string eval_report_to_json(const ClassEvalReport& report,
                                bool include_trace) {
  nlohmann::json j = report_json(report.overall, include_trace);
  if (!report.per_class.empty()) {
    j["per_class"] = nlohmann::json::object();
    for (const auto& [cat, r] : report.per_class) {
      j["per_class"][cat.empty() ? "<uncategorized>" : cat] =
          report_json(r, false);
    }
  }
  return j.dump(2) + "\n";
}

std::string pr_curves_csv(const std::vector<EvalDetection>& dets,
                          const std::vector<EvalGroundTruth>& gts,
                          const EvalConfig& cfg) {
  // Raw (recall, precision) staircase per threshold.
  std::ostringstream csv;
  csv << "iou_threshold,recall,precision\n";
  if (gts.empty()) return csv.str();

  const PreparedScene scene = prepare(dets, gts, cfg);
  const double n_gt = static_cast<double>(gts.size());
  for (const double threshold : cfg.iou_thresholds) {
    std::map<std::int64_t, std::vector<int>> assignments;
    for (const auto& [image_id, det_list] : scene.image_dets) {
      std::vector<const EvalDetection*> dptr;
      std::vector<const EvalGroundTruth*> gptr;
      for (const int d : det_list) dptr.push_back(&dets[d]);
      const auto git = scene.image_gts.find(image_id);
      if (git != scene.image_gts.end()) {
        for (const int g : git->second) gptr.push_back(&gts[g]);
      }
      assignments[image_id] = match_detections(dptr, gptr, threshold);
    }
    std::map<std::int64_t, std::size_t> cursor;
    double tp = 0.0;
    for (std::size_t i = 0; i < scene.det_indices.size(); ++i) {
      const std::int64_t image_id = scene.det_image[i];
      const std::size_t pos = cursor[image_id]++;
      if (assignments[image_id][pos] >= 0) tp += 1.0;
      csv << threshold << "," << (tp / n_gt) << ","
          << (tp / static_cast<double>(i + 1)) << "\n";
    }
  }
  return csv.str();
}

}  // namespace amodal
