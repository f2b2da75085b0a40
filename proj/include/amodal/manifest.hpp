#pragma once

#include <string>

#include "amodal/instance.hpp"

namespace amodal {

/// Annotation schema (shared across the toolkit):
/// {
///   "images": [{"id", "width", "height", "file"}],
///   "annotations": [{
///     "id", "image_id", "category"?,
///     "visible_segmentation": {"size": [h, w], "counts": [...]},
///     "amodal_segmentation":  {"size": [h, w], "counts": [...]},
///     "origin", "pair_key"?
///   }]
/// }
/// Boxes are not stored; they are the tight boxes of the masks and are
/// rebuilt on load. Throws SchemaError with the offending record index.
DatasetManifest load_manifest(const std::string& path);

void save_manifest(const DatasetManifest& manifest, const std::string& path);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text,
                                   const std::string& origin_hint = "<string>");

}  // namespace amodal
