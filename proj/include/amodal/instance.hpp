#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amodal/mask.hpp"

namespace amodal {

enum class InstanceOrigin { real, synthetic_occluded, synthetic_unoccluded };

std::string to_string(InstanceOrigin origin);
InstanceOrigin origin_from_string(const std::string& s);

/// One object's paired modal/amodal annotation.
///
/// Invariants (checked by validate_instance):
///   - modal_mask is a pixel-wise subset of amodal_mask
///   - is_occluded iff the masks differ
///   - boxes are the tight boxes of their masks (degenerate box for an
///     empty modal mask, which occurs when the object is fully hidden)
struct AmodalInstance {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  BinaryMask modal_mask;
  BinaryMask amodal_mask;
  BoundingBox modal_box;
  BoundingBox amodal_box;
  std::optional<std::string> category;
  bool is_occluded = false;
  InstanceOrigin origin = InstanceOrigin::real;
  std::optional<std::int64_t> pair_key;
};

/// Builds an instance from its two masks, deriving boxes and the
/// occlusion flag. Throws when modal is not contained in amodal.
AmodalInstance make_instance(std::int64_t id, std::int64_t image_id,
                             BinaryMask modal, BinaryMask amodal,
                             std::optional<std::string> category = {},
                             InstanceOrigin origin = InstanceOrigin::real,
                             std::optional<std::int64_t> pair_key = {});

/// Throws std::invalid_argument describing the first violated invariant.
void validate_instance(const AmodalInstance& inst);

/// 1 - area(modal)/area(amodal). Throws EmptyMaskError when the amodal
/// mask is empty.
double occlusion_rate(const AmodalInstance& inst);

struct ImageInfo {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file;
};

/// Ordered collection of images and instances; the unit the filters,
/// the forge, the trainer and the evaluator exchange.
struct DatasetManifest {
  std::string name;
  std::vector<ImageInfo> images;
  std::vector<AmodalInstance> annotations;

  const ImageInfo* find_image(std::int64_t image_id) const;
};

}  // namespace amodal
