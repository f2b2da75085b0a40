#include "amodal/viz.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "amodal/errors.hpp"

namespace amodal {

namespace {

constexpr std::array<std::uint8_t, 3> kVisibleTint = {64, 200, 64};
constexpr std::array<std::uint8_t, 3> kHiddenTint = {235, 120, 40};
constexpr std::array<std::uint8_t, 3> kModalBox = {40, 230, 40};
constexpr std::array<std::uint8_t, 3> kAmodalBox = {255, 60, 60};

void blend(RgbImage& canvas, int r, int c,
           const std::array<std::uint8_t, 3>& tint, float alpha) {
  auto* p = &canvas.pixels[(static_cast<std::size_t>(r) * canvas.width + c) * 3];
  for (int k = 0; k < 3; ++k) {
    p[k] = static_cast<std::uint8_t>(
        std::lround((1.0f - alpha) * p[k] + alpha * tint[k]));
  }
}

void draw_box(RgbImage& canvas, const BoundingBox& box,
              const std::array<std::uint8_t, 3>& color) {
  if (box.degenerate()) return;
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(canvas.width - 1,
                          static_cast<int>(std::ceil(box.x2())) - 1);
  const int y1 = std::min(canvas.height - 1,
                          static_cast<int>(std::ceil(box.y2())) - 1);
  for (int c = x0; c <= x1; ++c) {
    canvas.set(y0, c, color);
    canvas.set(y1, c, color);
  }
  for (int r = y0; r <= y1; ++r) {
    canvas.set(r, x0, color);
    canvas.set(r, x1, color);
  }
}

std::map<std::int64_t, const ImageInfo*> index_images(
    const DatasetManifest& manifest) {
  std::map<std::int64_t, const ImageInfo*> out;
  for (const auto& info : manifest.images) out[info.id] = &info;
  return out;
}

Image load_or_collect(const ImageInfo& info, const std::string& images_dir,
                      std::vector<std::string>& missing) {
  const std::filesystem::path path =
      std::filesystem::path(images_dir) / info.file;
  if (!std::filesystem::exists(path)) {
    missing.push_back(path.string());
    return Image(info.height, info.width, 0.0f);
  }
  return read_png(path.string());
}

void throw_if_missing(const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << "missing image files:";
  for (const auto& f : missing) msg << " " << f;
  throw SchemaError(msg.str());
}

}  // namespace

RgbImage render_instance_overlay(const Image& image,
                                 const AmodalInstance& inst) {
  RgbImage canvas = to_rgb(image);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (inst.modal_mask.at(r, c)) {
        blend(canvas, r, c, kVisibleTint, 0.45f);
      } else if (inst.amodal_mask.at(r, c)) {
        blend(canvas, r, c, kHiddenTint, 0.45f);
      }
    }
  }
  draw_box(canvas, inst.modal_box, kModalBox);
  if (inst.is_occluded) draw_box(canvas, inst.amodal_box, kAmodalBox);
  return canvas;
}

std::vector<std::string> render_manifest_overlays(
    const DatasetManifest& manifest, const std::string& images_dir,
    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto images = index_images(manifest);
  std::vector<std::string> missing;
  std::vector<std::string> written;
  for (const auto& ann : manifest.annotations) {
    const auto it = images.find(ann.image_id);
    if (it == images.end()) {
      throw SchemaError("viz: annotation " + std::to_string(ann.id) +
                        " references unknown image " +
                        std::to_string(ann.image_id));
    }
    const Image image = load_or_collect(*it->second, images_dir, missing);
    if (!missing.empty()) continue;  // keep collecting missing files
    const RgbImage overlay = render_instance_overlay(image, ann);
    char name[96];
    std::snprintf(name, sizeof(name), "overlay_%06lld_%06lld.png",
                  static_cast<long long>(ann.image_id),
                  static_cast<long long>(ann.id));
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    write_png(overlay, path);
    written.push_back(path);
  }
  throw_if_missing(missing);
  return written;
}

std::vector<std::string> render_result_overlays(
    const DatasetManifest& manifest, const std::string& images_dir,
    const std::vector<AmodalResult>& results, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto images = index_images(manifest);
  std::vector<std::string> missing;
  std::vector<std::string> written;
  int index = 0;
  for (const auto& result : results) {
    const auto it = images.find(result.detection.image_id);
    if (it == images.end()) {
      throw SchemaError("viz: result references unknown image " +
                        std::to_string(result.detection.image_id));
    }
    const Image image = load_or_collect(*it->second, images_dir, missing);
    if (!missing.empty()) {
      ++index;
      continue;
    }
    RgbImage canvas = to_rgb(image);
    for (int r = 0; r < image.height; ++r) {
      for (int c = 0; c < image.width; ++c) {
        if (result.amodal_mask.at(r, c)) {
          blend(canvas, r, c, kHiddenTint, 0.45f);
        }
      }
    }
    draw_box(canvas, result.detection.box, kAmodalBox);
    char name[96];
    std::snprintf(name, sizeof(name), "result_%06lld_%04d.png",
                  static_cast<long long>(result.detection.image_id), index);
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    write_png(canvas, path);
    written.push_back(path);
    ++index;
  }
  throw_if_missing(missing);
  return written;
}

}  // namespace amodal
