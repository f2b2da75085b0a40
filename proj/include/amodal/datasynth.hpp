#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/instance.hpp"
#include "amodal/rng.hpp"

namespace amodal {

enum class ShapeKind { rectangle, ellipse };

std::string to_string(ShapeKind kind);

/// Parametric convex shape. Parametric objects can be rasterized at any
/// real-valued center, which gives the occlusion-rate search sub-pixel
/// granularity.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::rectangle;
  double half_w = 1.0;
  double half_h = 1.0;
  double angle = 0.0;  // radians
  float intensity = 0.5f;

  bool inside(double dx, double dy) const;
  BinaryMask rasterize(int canvas_h, int canvas_w, double cx, double cy) const;

  /// Exact width/height of the axis-aligned bounding box of the
  /// (rotated) continuous shape.
  std::pair<double, double> continuous_box_dims() const;
};

/// An unoccluded object available for pasting: a tight crop plus mask,
/// optionally with the parametric form it was rasterized from.
struct CompleteObject {
  Image crop;
  BinaryMask mask;
  std::int64_t source_id = 0;
  std::optional<std::string> category;
  std::optional<ShapeSpec> shape;

  /// Long side of the mask's tight box, in pixels.
  double long_side() const;
};

struct SynthesisConfig {
  int canvas = 64;
  double ror_min = 0.15;
  double ror_max = 0.60;
  double scale_jitter_min = 0.8;
  double scale_jitter_max = 1.2;
  double placement_tolerance = 0.02;  // absolute ROR error
  std::uint64_t seed = 0;
  int max_attempt_factor = 20;
  bool include_occluder_annotations = false;

  // shape corpus knobs
  double background = 0.08;
  double background_noise = 0.015;
  double min_long_side = 20.0;
  double max_long_side = 38.0;
  double min_aspect = 0.55;
  double min_intensity = 0.30;
  double max_intensity = 0.95;
  double min_intensity_gap = 0.18;

  void validate() const;
};

/// Random rectangle or ellipse with arbitrary rotation.
CompleteObject make_shape_object(const SynthesisConfig& cfg, Rng& rng,
                                 std::int64_t source_id);

/// Rescales the occluder so its long side equals the target's long side
/// times a jitter factor drawn from [jitter_lo, jitter_hi]; the aspect
/// ratio is preserved up to rasterization.
CompleteObject normalize_size(const CompleteObject& occluder,
                              const CompleteObject& target, double jitter_lo,
                              double jitter_hi, Rng& rng);

struct Placement {
  bool feasible = false;
  double cx = 0.0;
  double cy = 0.0;
  double achieved_ror = 0.0;
  double max_attainable = 0.0;
};

/// Rasterizes the occluder somewhere on the canvas (center given).
/// Integer paste offsets are used for non-parametric objects.
BinaryMask occluder_mask_at(const CompleteObject& occluder, int canvas_h,
                            int canvas_w, double cx, double cy);

/// Searches the segment from (start_cx, start_cy) to the target box
/// center for the occluder position whose achieved ROR
/// (|target n occluder| / |target|) is within tolerance of desired_ror.
/// Bisection along the segment plus a fine scan around the crossing.
/// infeasible=false results report the best attainable value.
Placement place_occluder(const BinaryMask& target_amodal,
                         const CompleteObject& occluder, double start_cx,
                         double start_cy, double desired_ror,
                         double tolerance);

struct SynthesizedSample {
  Image image;
  AmodalInstance occluded_target;
  AmodalInstance occluder_instance;  // unoccluded foreground object
};

/// Pastes the occluder over the base image at center (cx, cy): target's
/// amodal mask is unchanged, its new modal mask is amodal minus the
/// pasted occluder mask. Throws when the occluder lands fully outside
/// the canvas.
SynthesizedSample composite(const Image& base, const AmodalInstance& target,
                            const CompleteObject& occluder, double cx,
                            double cy);

/// The dual annotation: the original (unoccluded) version and the
/// synthesized occluded version of the same instance, sharing pair_key.
std::pair<AmodalInstance, AmodalInstance> dual_emit(
    const AmodalInstance& original, const AmodalInstance& synthesized,
    std::int64_t pair_key);

struct SynthesisRecord {
  std::int64_t pair_key = 0;
  double requested_ror = 0.0;
  double achieved_ror = 0.0;
};

struct SkipRecord {
  int attempt = 0;
  double requested_ror = 0.0;
  double best_achieved = 0.0;
  std::string reason;
};

struct SynthesisReport {
  int requested_pairs = 0;
  int produced_pairs = 0;
  std::vector<SynthesisRecord> samples;
  std::vector<SkipRecord> skipped;
};

std::string report_to_json(const SynthesisReport& report);

struct SynthesisResult {
  DatasetManifest manifest;
  std::vector<Image> images;  // aligned with manifest.images
  SynthesisReport report;
};

/// The full forge: n_pairs dual-annotated occlusion pairs over flat
/// noise-textured canvases. Deterministic given cfg.seed. May produce
/// fewer pairs than requested when placements keep failing; the report
/// records every skip.
SynthesisResult synthesize_pairs(int n_pairs, const SynthesisConfig& cfg);

using AmodalPredictFn =
    std::function<BinaryMask(const Image&, const BoundingBox&)>;

/// Pseudo-label completeness check: an instance is collected iff the
/// predicted amodal mask agrees with its ground-truth visible mask at
/// IoU >= iou_threshold. Images are aligned with manifest.images.
std::vector<CompleteObject> collect_complete(const DatasetManifest& manifest,
                                             const std::vector<Image>& images,
                                             const AmodalPredictFn& predict,
                                             double iou_threshold = 0.9);

}  // namespace amodal
