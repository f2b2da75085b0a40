#include "amodal/datasynth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "amodal/errors.hpp"

namespace amodal {

std::string to_string(ShapeKind kind) {
  return kind == ShapeKind::rectangle ? "rectangle" : "ellipse";
}

bool ShapeSpec::inside(double dx, double dy) const {
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const double u = ca * dx + sa * dy;
  const double v = -sa * dx + ca * dy;
  if (kind == ShapeKind::rectangle) {
    return std::abs(u) <= half_w && std::abs(v) <= half_h;
  }
  const double a = u / half_w;
  const double b = v / half_h;
  return a * a + b * b <= 1.0;
}

BinaryMask ShapeSpec::rasterize(int canvas_h, int canvas_w, double cx,
                                double cy) const {
  BinaryMask mask(canvas_h, canvas_w);
  const double radius = std::hypot(half_w, half_h);
  const int r0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
  const int r1 = std::min(canvas_h - 1,
                          static_cast<int>(std::ceil(cy + radius + 1)));
  const int c0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
  const int c1 = std::min(canvas_w - 1,
                          static_cast<int>(std::ceil(cx + radius + 1)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (inside(c + 0.5 - cx, r + 0.5 - cy)) mask.set(r, c, true);
    }
  }
  return mask;
}

std::pair<double, double> ShapeSpec::continuous_box_dims() const {
  const double c = std::abs(std::cos(angle));
  const double s = std::abs(std::sin(angle));
  if (kind == ShapeKind::rectangle) {
    return {2.0 * (half_w * c + half_h * s), 2.0 * (half_w * s + half_h * c)};
  }
  return {2.0 * std::sqrt(half_w * half_w * c * c + half_h * half_h * s * s),
          2.0 * std::sqrt(half_w * half_w * s * s + half_h * half_h * c * c)};
}

double CompleteObject::long_side() const {
  const BoundingBox box = tight_bbox(mask);
  return std::max(box.w, box.h);
}

void SynthesisConfig::validate() const {
  if (canvas <= 0) throw std::invalid_argument("canvas must be positive");
  if (!(0.0 < ror_min && ror_min <= ror_max && ror_max < 1.0)) {
    throw std::invalid_argument("ror range must be ordered inside (0,1)");
  }
  if (!(0.0 < scale_jitter_min && scale_jitter_min <= scale_jitter_max)) {
    throw std::invalid_argument("scale jitter range must be positive ordered");
  }
  if (placement_tolerance <= 0.0) {
    throw std::invalid_argument("placement tolerance must be positive");
  }
}

namespace {

/// Canonical rasterization of a parametric shape: tight crop + mask.
CompleteObject rasterize_canonical(const ShapeSpec& spec,
                                   std::int64_t source_id,
                                   std::optional<std::string> category) {
  const double radius = std::hypot(spec.half_w, spec.half_h);
  const int side = static_cast<int>(std::ceil(2.0 * radius)) + 4;
  const double center = side / 2.0;
  BinaryMask full = spec.rasterize(side, side, center, center);
  if (mask_area(full) == 0) {
    throw std::invalid_argument("degenerate shape rasterizes to nothing");
  }
  const BoundingBox box = tight_bbox(full);
  const int bx = static_cast<int>(box.x);
  const int by = static_cast<int>(box.y);
  const int bw = static_cast<int>(box.w);
  const int bh = static_cast<int>(box.h);

  CompleteObject obj;
  obj.mask = BinaryMask(bh, bw);
  obj.crop = Image(bh, bw, 0.0f);
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      if (full.at(by + r, bx + c)) {
        obj.mask.set(r, c, true);
        obj.crop.at(r, c) = spec.intensity;
      }
    }
  }
  obj.source_id = source_id;
  obj.category = std::move(category);
  obj.shape = spec;
  return obj;
}

}  // namespace

CompleteObject make_shape_object(const SynthesisConfig& cfg, Rng& rng,
                                 std::int64_t source_id) {
  ShapeSpec spec;
  spec.kind = rng.bernoulli(0.5) ? ShapeKind::rectangle : ShapeKind::ellipse;
  const double long_side = rng.uniform(cfg.min_long_side, cfg.max_long_side);
  const double aspect = rng.uniform(cfg.min_aspect, 1.0);
  spec.half_w = long_side / 2.0;
  spec.half_h = long_side * aspect / 2.0;
  spec.angle = rng.uniform(0.0, M_PI);
  spec.intensity =
      static_cast<float>(rng.uniform(cfg.min_intensity, cfg.max_intensity));
  return rasterize_canonical(spec, source_id, to_string(spec.kind));
}

CompleteObject normalize_size(const CompleteObject& occluder,
                              const CompleteObject& target, double jitter_lo,
                              double jitter_hi, Rng& rng) {
  const double occ_long = occluder.long_side();
  const double target_long = target.long_side();
  if (occ_long <= 1.0 || target_long <= 1.0) {
    throw std::invalid_argument("normalize_size: degenerate (<=1px) object");
  }
  const double s = rng.uniform(jitter_lo, jitter_hi);
  const double factor = target_long * s / occ_long;

  if (occluder.shape) {
    ShapeSpec spec = *occluder.shape;
    spec.half_w *= factor;
    spec.half_h *= factor;
    if (std::min(spec.half_w, spec.half_h) < 0.75) {
      throw std::invalid_argument("normalize_size: rescaled shape degenerate");
    }
    return rasterize_canonical(spec, occluder.source_id, occluder.category);
  }

  // Raster path: nearest-neighbour rescale of crop and mask.
  const int nh = std::max(
      1, static_cast<int>(std::lround(occluder.mask.height() * factor)));
  const int nw = std::max(
      1, static_cast<int>(std::lround(occluder.mask.width() * factor)));
  CompleteObject out;
  out.mask = BinaryMask(nh, nw);
  out.crop = Image(nh, nw, 0.0f);
  for (int r = 0; r < nh; ++r) {
    const int sr = std::min(occluder.mask.height() - 1,
                            static_cast<int>(static_cast<std::int64_t>(r) *
                                             occluder.mask.height() / nh));
    for (int c = 0; c < nw; ++c) {
      const int sc = std::min(occluder.mask.width() - 1,
                              static_cast<int>(static_cast<std::int64_t>(c) *
                                               occluder.mask.width() / nw));
      out.mask.set(r, c, occluder.mask.at(sr, sc));
      out.crop.at(r, c) = occluder.crop.at(sr, sc);
    }
  }
  if (mask_area(out.mask) == 0) {
    throw std::invalid_argument("normalize_size: rescaled mask is empty");
  }
  out.source_id = occluder.source_id;
  out.category = occluder.category;
  return out;
}

BinaryMask occluder_mask_at(const CompleteObject& occluder, int canvas_h,
                            int canvas_w, double cx, double cy) {
  if (occluder.shape) {
    return occluder.shape->rasterize(canvas_h, canvas_w, cx, cy);
  }
  // Integer paste: crop center lands as close to (cx, cy) as possible.
  BinaryMask mask(canvas_h, canvas_w);
  const int top =
      static_cast<int>(std::lround(cy - occluder.mask.height() / 2.0));
  const int left =
      static_cast<int>(std::lround(cx - occluder.mask.width() / 2.0));
  for (int r = 0; r < occluder.mask.height(); ++r) {
    const int cr = top + r;
    if (cr < 0 || cr >= canvas_h) continue;
    for (int c = 0; c < occluder.mask.width(); ++c) {
      const int cc = left + c;
      if (cc < 0 || cc >= canvas_w) continue;
      if (occluder.mask.at(r, c)) mask.set(cr, cc, true);
    }
  }
  return mask;
}

namespace {

double overlap_ratio(const BinaryMask& target, const BinaryMask& occ,
                     std::int64_t target_area) {
  std::int64_t inter = 0;
  const auto& pt = target.pixels();
  const auto& po = occ.pixels();
  for (std::size_t i = 0; i < pt.size(); ++i) inter += pt[i] & po[i];
  return static_cast<double>(inter) / static_cast<double>(target_area);
}

}  // namespace

Placement place_occluder(const BinaryMask& target_amodal,
                         const CompleteObject& occluder, double start_cx,
                         double start_cy, double desired_ror,
                         double tolerance) {
  const std::int64_t target_area = mask_area(target_amodal);
  if (target_area == 0) {
    throw EmptyMaskError("place_occluder: empty target mask");
  }
  if (desired_ror < 0.0 || desired_ror >= 1.0) {
    throw std::invalid_argument("place_occluder: desired ROR outside [0,1)");
  }
  const BoundingBox tb = tight_bbox(target_amodal);
  const double end_cx = tb.cx();
  const double end_cy = tb.cy();

  const auto ror_at = [&](double t) {
    const double cx = start_cx + t * (end_cx - start_cx);
    const double cy = start_cy + t * (end_cy - start_cy);
    const BinaryMask occ = occluder_mask_at(occluder, target_amodal.height(),
                                            target_amodal.width(), cx, cy);
    return overlap_ratio(target_amodal, occ, target_area);
  };
  const auto center_at = [&](double t, Placement& p) {
    p.cx = start_cx + t * (end_cx - start_cx);
    p.cy = start_cy + t * (end_cy - start_cy);
  };

  Placement placement;
  placement.max_attainable = ror_at(1.0);

  if (desired_ror == 0.0) {
    placement.achieved_ror = ror_at(0.0);
    placement.feasible = placement.achieved_ror <= tolerance;
    center_at(0.0, placement);
    return placement;
  }
  if (placement.max_attainable + tolerance < desired_ror) {
    placement.achieved_ror = placement.max_attainable;
    center_at(1.0, placement);
    placement.feasible = false;
    return placement;
  }

  // Bisection on the (stepwise nondecreasing) ROR along the segment.
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 24; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ror_at(mid) < desired_ror) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Fine scan around the crossing: rasterization makes the ROR a
  // staircase in t, so pick the step closest to the request.
  const double window = 0.015;
  double best_t = hi;
  double best_err = std::abs(ror_at(hi) - desired_ror);
  for (int i = 0; i <= 96; ++i) {
    const double t =
        std::clamp(hi - window + 2.0 * window * i / 96.0, 0.0, 1.0);
    const double err = std::abs(ror_at(t) - desired_ror);
    if (err < best_err - 1e-12) {
      best_err = err;
      best_t = t;
    }
  }

  placement.achieved_ror = ror_at(best_t);
  center_at(best_t, placement);
  placement.feasible =
      std::abs(placement.achieved_ror - desired_ror) <= tolerance;
  return placement;
}

SynthesizedSample composite(const Image& base, const AmodalInstance& target,
                            const CompleteObject& occluder, double cx,
                            double cy) {
  const int h = base.height;
  const int w = base.width;
  const BinaryMask occ_mask = occluder_mask_at(occluder, h, w, cx, cy);
  if (mask_area(occ_mask) == 0) {
    throw std::invalid_argument("composite: occluder fully outside canvas");
  }

  SynthesizedSample sample;
  sample.image = base;
  if (occluder.shape) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (occ_mask.at(r, c)) sample.image.at(r, c) = occluder.shape->intensity;
      }
    }
  } else {
    const int top =
        static_cast<int>(std::lround(cy - occluder.mask.height() / 2.0));
    const int left =
        static_cast<int>(std::lround(cx - occluder.mask.width() / 2.0));
    for (int r = 0; r < occluder.mask.height(); ++r) {
      const int cr = top + r;
      if (cr < 0 || cr >= h) continue;
      for (int c = 0; c < occluder.mask.width(); ++c) {
        const int cc = left + c;
        if (cc < 0 || cc >= w) continue;
        if (occluder.mask.at(r, c)) {
          sample.image.at(cr, cc) = occluder.crop.at(r, c);
        }
      }
    }
  }

  const BinaryMask modal = subtract(target.amodal_mask, occ_mask);
  sample.occluded_target =
      make_instance(target.id, target.image_id, modal, target.amodal_mask,
                    target.category, InstanceOrigin::synthetic_occluded,
                    target.pair_key);
  sample.occluder_instance =
      make_instance(0, target.image_id, occ_mask, occ_mask, occluder.category,
                    InstanceOrigin::synthetic_unoccluded, std::nullopt);
  return sample;
}

std::pair<AmodalInstance, AmodalInstance> dual_emit(
    const AmodalInstance& original, const AmodalInstance& synthesized,
    std::int64_t pair_key) {
  AmodalInstance unoccluded = original;
  unoccluded.origin = InstanceOrigin::synthetic_unoccluded;
  unoccluded.pair_key = pair_key;
  AmodalInstance occluded = synthesized;
  occluded.origin = InstanceOrigin::synthetic_occluded;
  occluded.pair_key = pair_key;
  validate_instance(unoccluded);
  validate_instance(occluded);
  if (unoccluded.is_occluded) {
    throw std::invalid_argument("dual_emit: original entry must be unoccluded");
  }
  return {std::move(unoccluded), std::move(occluded)};
}

std::string report_to_json(const SynthesisReport& report) {
  nlohmann::json j;
  j["requested_pairs"] = report.requested_pairs;
  j["produced_pairs"] = report.produced_pairs;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples) {
    j["samples"].push_back({{"pair_key", s.pair_key},
                            {"requested_ror", s.requested_ror},
                            {"achieved_ror", s.achieved_ror}});
  }
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : report.skipped) {
    j["skipped"].push_back({{"attempt", s.attempt},
                            {"requested_ror", s.requested_ror},
                            {"best_achieved", s.best_achieved},
                            {"reason", s.reason}});
  }
  return j.dump(2) + "\n";
}

SynthesisResult synthesize_pairs(int n_pairs, const SynthesisConfig& cfg) {
  cfg.validate();
  if (cfg.canvas < static_cast<int>(cfg.max_long_side) + 6) {
    throw InfeasibleError("canvas too small for the configured shape sizes");
  }

  SynthesisResult result;
  result.manifest.name = "synthetic-shapes";
  result.report.requested_pairs = n_pairs;

  const int max_attempts = std::max(n_pairs * cfg.max_attempt_factor, 32);
  int attempt = 0;
  std::int64_t next_annotation_id = 1;

  while (result.report.produced_pairs < n_pairs && attempt < max_attempts) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
    ++attempt;

    CompleteObject target = make_shape_object(cfg, rng, attempt);
    CompleteObject occluder = make_shape_object(cfg, rng, attempt);
    // Distinct gray levels keep the boundary between the two objects
    // visible in the composite.
    if (occluder.shape && target.shape) {
      int guard = 0;
      while (std::abs(occluder.shape->intensity - target.shape->intensity) <
                 cfg.min_intensity_gap &&
             guard++ < 16) {
        occluder.shape->intensity = static_cast<float>(
            rng.uniform(cfg.min_intensity, cfg.max_intensity));
      }
      occluder = rasterize_canonical(*occluder.shape, occluder.source_id,
                                     occluder.category);
    }
    try {
      occluder = normalize_size(occluder, target,
                                cfg.scale_jitter_min, cfg.scale_jitter_max,
                                rng);
    } catch (const std::invalid_argument&) {
      result.report.skipped.push_back(
          SkipRecord{attempt, 0.0, 0.0, "degenerate occluder after rescale"});
      continue;
    }

    // Target fully inside the canvas (the completion task needs the
    // whole amodal extent to exist).
    const double t_radius =
        std::hypot(target.shape->half_w, target.shape->half_h) + 1.0;
    if (2.0 * t_radius + 2.0 >= cfg.canvas) {
      result.report.skipped.push_back(
          SkipRecord{attempt, 0.0, 0.0, "target too large for canvas"});
      continue;
    }
    const double tcx = rng.uniform(t_radius + 1.0, cfg.canvas - t_radius - 1.0);
    const double tcy = rng.uniform(t_radius + 1.0, cfg.canvas - t_radius - 1.0);
    const BinaryMask target_mask =
        target.shape->rasterize(cfg.canvas, cfg.canvas, tcx, tcy);
    if (mask_area(target_mask) == 0) {
      result.report.skipped.push_back(
          SkipRecord{attempt, 0.0, 0.0, "target rasterized empty"});
      continue;
    }

    // Base canvas shared by the dual pair.
    Image original_image(cfg.canvas, cfg.canvas,
                         static_cast<float>(cfg.background));
    if (cfg.background_noise > 0.0) {
      for (auto& px : original_image.pixels) {
        px += static_cast<float>(rng.normal(0.0, cfg.background_noise));
        px = std::clamp(px, 0.0f, 1.0f);
      }
    }
    for (int r = 0; r < cfg.canvas; ++r) {
      for (int c = 0; c < cfg.canvas; ++c) {
        if (target_mask.at(r, c)) {
          original_image.at(r, c) = target.shape->intensity;
        }
      }
    }

    const double desired = rng.uniform(cfg.ror_min, cfg.ror_max);
    const double o_radius =
        std::hypot(occluder.shape->half_w, occluder.shape->half_h);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const double dist = t_radius + o_radius + 3.0;
    const double start_cx = tcx + dist * std::cos(theta);
    const double start_cy = tcy + dist * std::sin(theta);

    const Placement placement = place_occluder(
        target_mask, occluder, start_cx, start_cy, desired,
        cfg.placement_tolerance);
    if (!placement.feasible) {
      result.report.skipped.push_back(SkipRecord{
          attempt, desired, placement.achieved_ror, "ROR not attainable"});
      continue;
    }

    const std::int64_t pair_key = result.report.produced_pairs;
    const std::int64_t original_image_id = 2 * pair_key + 1;
    const std::int64_t synthesized_image_id = 2 * pair_key + 2;

    AmodalInstance target_inst = make_instance(
        next_annotation_id, synthesized_image_id, target_mask, target_mask,
        target.category, InstanceOrigin::synthetic_unoccluded, pair_key);

    SynthesizedSample sample;
    try {
      sample = composite(original_image, target_inst, occluder, placement.cx,
                         placement.cy);
    } catch (const std::invalid_argument&) {
      result.report.skipped.push_back(SkipRecord{
          attempt, desired, placement.achieved_ror, "composite failed"});
      continue;
    }
    if (mask_area(sample.occluded_target.modal_mask) == 0) {
      result.report.skipped.push_back(SkipRecord{
          attempt, desired, placement.achieved_ror, "target fully hidden"});
      continue;
    }

    AmodalInstance original_inst = target_inst;
    original_inst.image_id = original_image_id;

    auto [unoccluded_entry, occluded_entry] =
        dual_emit(original_inst, sample.occluded_target, pair_key);
    unoccluded_entry.id = next_annotation_id++;
    occluded_entry.id = next_annotation_id++;

    // File paths are relative to wherever the manifest is written.
    char file[64];
    std::snprintf(file, sizeof(file), "images/img_%06lld.png",
                  static_cast<long long>(original_image_id));
    result.manifest.images.push_back(ImageInfo{
        original_image_id, cfg.canvas, cfg.canvas, file});
    result.images.push_back(original_image);
    std::snprintf(file, sizeof(file), "images/img_%06lld.png",
                  static_cast<long long>(synthesized_image_id));
    result.manifest.images.push_back(ImageInfo{
        synthesized_image_id, cfg.canvas, cfg.canvas, file});
    result.images.push_back(sample.image);

    result.manifest.annotations.push_back(std::move(unoccluded_entry));
    result.manifest.annotations.push_back(std::move(occluded_entry));
    if (cfg.include_occluder_annotations) {
      AmodalInstance occ_inst = sample.occluder_instance;
      occ_inst.id = next_annotation_id++;
      occ_inst.image_id = synthesized_image_id;
      result.manifest.annotations.push_back(std::move(occ_inst));
    }

    result.report.samples.push_back(
        SynthesisRecord{pair_key, desired, placement.achieved_ror});
    ++result.report.produced_pairs;
  }
  return result;
}

std::vector<CompleteObject> collect_complete(const DatasetManifest& manifest,
                                             const std::vector<Image>& images,
                                             const AmodalPredictFn& predict,
                                             double iou_threshold) {
  if (images.size() != manifest.images.size()) {
    throw std::invalid_argument(
        "collect_complete: images not aligned with manifest");
  }
  std::vector<CompleteObject> collected;
  for (const auto& ann : manifest.annotations) {
    if (mask_area(ann.modal_mask) == 0) {
      throw EmptyMaskError("collect_complete: instance " +
                           std::to_string(ann.id) + " has no visible mask");
    }
    std::size_t image_index = images.size();
    for (std::size_t i = 0; i < manifest.images.size(); ++i) {
      if (manifest.images[i].id == ann.image_id) {
        image_index = i;
        break;
      }
    }
    if (image_index == images.size()) {
      throw SchemaError("collect_complete: unknown image_id " +
                        std::to_string(ann.image_id));
    }
    const Image& image = images[image_index];
    const BinaryMask predicted = predict(image, ann.modal_box);
    if (mask_iou(predicted, ann.modal_mask) < iou_threshold) continue;

    const BoundingBox box = ann.modal_box;
    const int bx = static_cast<int>(box.x);
    const int by = static_cast<int>(box.y);
    const int bw = static_cast<int>(box.w);
    const int bh = static_cast<int>(box.h);
    CompleteObject obj;
    obj.mask = BinaryMask(bh, bw);
    obj.crop = Image(bh, bw, 0.0f);
    for (int r = 0; r < bh; ++r) {
      for (int c = 0; c < bw; ++c) {
        if (ann.modal_mask.at(by + r, bx + c)) {
          obj.mask.set(r, c, true);
          obj.crop.at(r, c) = image.at(by + r, bx + c);
        }
      }
    }
    obj.source_id = ann.id;
    obj.category = ann.category;
    collected.push_back(std::move(obj));
  }
  return collected;
}

}  // namespace amodal
