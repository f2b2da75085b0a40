#include "amodal/instance.hpp"

namespace amodal {

std::string to_string(InstanceOrigin origin) {
  switch (origin) {
    case InstanceOrigin::real:
      return "real";
    case InstanceOrigin::synthetic_occluded:
      return "synthetic-occluded";
    case InstanceOrigin::synthetic_unoccluded:
      return "synthetic-unoccluded";
  }
  return "real";
}

InstanceOrigin origin_from_string(const std::string& s) {
  if (s == "real") return InstanceOrigin::real;
  if (s == "synthetic-occluded") return InstanceOrigin::synthetic_occluded;
  if (s == "synthetic-unoccluded") return InstanceOrigin::synthetic_unoccluded;
  throw SchemaError("unknown instance origin: " + s);
}

AmodalInstance make_instance(std::int64_t id, std::int64_t image_id,
                             BinaryMask modal, BinaryMask amodal,
                             std::optional<std::string> category,
                             InstanceOrigin origin,
                             std::optional<std::int64_t> pair_key) {
  if (!modal.same_shape(amodal)) {
    throw DimensionError("make_instance: modal/amodal shape mismatch");
  }
  if (!mask_contains(amodal, modal)) {
    throw std::invalid_argument(
        "make_instance: modal mask is not contained in amodal mask");
  }
  AmodalInstance inst;
  inst.id = id;
  inst.image_id = image_id;
  inst.is_occluded = !(modal == amodal);
  inst.modal_box = mask_area(modal) > 0
                       ? tight_bbox(modal, BoxKind::modal)
                       : BoundingBox{0, 0, 0, 0, BoxKind::modal};
  inst.amodal_box = tight_bbox(amodal, BoxKind::amodal);
  inst.modal_mask = std::move(modal);
  inst.amodal_mask = std::move(amodal);
  inst.category = std::move(category);
  inst.origin = origin;
  inst.pair_key = pair_key;
  return inst;
}

void validate_instance(const AmodalInstance& inst) {
  if (!inst.modal_mask.same_shape(inst.amodal_mask)) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": modal/amodal shape mismatch");
  }
  if (!mask_contains(inst.amodal_mask, inst.modal_mask)) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": modal mask not contained in amodal mask");
  }
  const bool differs = !(inst.modal_mask == inst.amodal_mask);
  if (inst.is_occluded != differs) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": is_occluded flag inconsistent with masks");
  }
  if (mask_area(inst.amodal_mask) == 0) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": empty amodal mask");
  }
  const BoundingBox ab = tight_bbox(inst.amodal_mask);
  if (ab.x != inst.amodal_box.x || ab.y != inst.amodal_box.y ||
      ab.w != inst.amodal_box.w || ab.h != inst.amodal_box.h) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": amodal box is not tight");
  }
  if (mask_area(inst.modal_mask) > 0) {
    const BoundingBox mb = tight_bbox(inst.modal_mask);
    if (mb.x != inst.modal_box.x || mb.y != inst.modal_box.y ||
        mb.w != inst.modal_box.w || mb.h != inst.modal_box.h) {
      throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                  ": modal box is not tight");
    }
  } else if (!inst.modal_box.degenerate()) {
    throw std::invalid_argument("instance " + std::to_string(inst.id) +
                                ": empty modal mask with non-degenerate box");
  }
}

double occlusion_rate(const AmodalInstance& inst) {
  const std::int64_t amodal_area = mask_area(inst.amodal_mask);
  if (amodal_area == 0) {
    throw EmptyMaskError("occlusion_rate: empty amodal mask");
  }
  const std::int64_t modal_area = mask_area(inst.modal_mask);
  return 1.0 - static_cast<double>(modal_area) /
                   static_cast<double>(amodal_area);
}

const ImageInfo* DatasetManifest::find_image(std::int64_t image_id) const {
  for (const auto& info : images) {
    if (info.id == image_id) return &info;
  }
  return nullptr;
}

}  // namespace amodal
