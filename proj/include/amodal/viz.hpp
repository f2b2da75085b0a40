#pragma once

#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/instance.hpp"
#include "amodal/pipeline.hpp"

namespace amodal {

/// Overlay for one instance: visible region in one tint, the occluded
/// remainder in another, boxes outlined.
RgbImage render_instance_overlay(const Image& image,
                                 const AmodalInstance& inst);

/// Writes one PNG per annotation into out_dir
/// (overlay_<image>_<annotation>.png). Image files resolve relative to
/// images_dir. Returns the written file names; missing image files are
/// collected into one error.
std::vector<std::string> render_manifest_overlays(
    const DatasetManifest& manifest, const std::string& images_dir,
    const std::string& out_dir);

/// Same for inference results (predicted amodal mask over the image).
std::vector<std::string> render_result_overlays(
    const DatasetManifest& manifest, const std::string& images_dir,
    const std::vector<AmodalResult>& results, const std::string& out_dir);

}  // namespace amodal
