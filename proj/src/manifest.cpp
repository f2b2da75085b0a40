#include "amodal/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace amodal {

using nlohmann::json;

namespace {

json rle_to_json(const BinaryMask& mask) {
  const RunLengthEncoding rle = rle_encode(mask);
  json j;
  j["size"] = {rle.height, rle.width};
  j["counts"] = rle.counts;
  return j;
}

BinaryMask mask_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw SchemaError(where + ": segmentation must have size and counts");
  }
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) {
    throw SchemaError(where + ": segmentation size must be [height, width]");
  }
  RunLengthEncoding rle;
  rle.height = size.at(0).get<int>();
  rle.width = size.at(1).get<int>();
  if (rle.height < 0 || rle.width < 0) {
    throw SchemaError(where + ": negative mask dimensions");
  }
  const auto& counts = j.at("counts");
  if (!counts.is_array()) {
    throw SchemaError(where + ": counts must be an array");
  }
  for (const auto& c : counts) {
    if (!c.is_number_integer() && !c.is_number_unsigned()) {
      throw SchemaError(where + ": counts must be integers");
    }
    rle.counts.push_back(c.get<std::int64_t>());
  }
  try {
    return rle_decode(rle);
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& manifest) {
  json j;
  if (!manifest.name.empty()) j["name"] = manifest.name;
  j["images"] = json::array();
  for (const auto& im : manifest.images) {
    json ji;
    ji["id"] = im.id;
    ji["width"] = im.width;
    ji["height"] = im.height;
    ji["file"] = im.file;
    j["images"].push_back(ji);
  }
  j["annotations"] = json::array();
  for (const auto& a : manifest.annotations) {
    json ja;
    ja["id"] = a.id;
    ja["image_id"] = a.image_id;
    if (a.category) ja["category"] = *a.category;
    ja["visible_segmentation"] = rle_to_json(a.modal_mask);
    ja["amodal_segmentation"] = rle_to_json(a.amodal_mask);
    ja["origin"] = to_string(a.origin);
    if (a.pair_key) ja["pair_key"] = *a.pair_key;
    j["annotations"].push_back(ja);
  }
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text,
                                   const std::string& origin_hint) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(origin_hint + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("images") || !j.contains("annotations")) {
    throw SchemaError(origin_hint +
                      ": manifest must have images and annotations arrays");
  }

  DatasetManifest manifest;
  if (j.contains("name")) manifest.name = j.at("name").get<std::string>();

  std::size_t index = 0;
  for (const auto& ji : j.at("images")) {
    const std::string where =
        origin_hint + ": images[" + std::to_string(index++) + "]";
    if (!ji.is_object() || !ji.contains("id") || !ji.contains("width") ||
        !ji.contains("height")) {
      throw SchemaError(where + ": needs id, width, height");
    }
    ImageInfo info;
    info.id = ji.at("id").get<std::int64_t>();
    info.width = ji.at("width").get<int>();
    info.height = ji.at("height").get<int>();
    if (info.width <= 0 || info.height <= 0) {
      throw SchemaError(where + ": non-positive dimensions");
    }
    if (ji.contains("file")) info.file = ji.at("file").get<std::string>();
    manifest.images.push_back(std::move(info));
  }

  index = 0;
  for (const auto& ja : j.at("annotations")) {
    const std::string where =
        origin_hint + ": annotations[" + std::to_string(index++) + "]";
    if (!ja.is_object() || !ja.contains("id") || !ja.contains("image_id") ||
        !ja.contains("visible_segmentation") ||
        !ja.contains("amodal_segmentation") || !ja.contains("origin")) {
      throw SchemaError(where + ": missing required field");
    }
    BinaryMask modal = mask_from_json(ja.at("visible_segmentation"),
                                      where + ".visible_segmentation");
    BinaryMask amodal = mask_from_json(ja.at("amodal_segmentation"),
                                       where + ".amodal_segmentation");
    std::optional<std::string> category;
    if (ja.contains("category") && !ja.at("category").is_null()) {
      category = ja.at("category").get<std::string>();
    }
    std::optional<std::int64_t> pair_key;
    if (ja.contains("pair_key") && !ja.at("pair_key").is_null()) {
      pair_key = ja.at("pair_key").get<std::int64_t>();
    }
    InstanceOrigin origin;
    try {
      origin = origin_from_string(ja.at("origin").get<std::string>());
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what());
    }
    AmodalInstance inst;
    try {
      inst = make_instance(ja.at("id").get<std::int64_t>(),
                           ja.at("image_id").get<std::int64_t>(),
                           std::move(modal), std::move(amodal),
                           std::move(category), origin, pair_key);
    } catch (const std::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (manifest.find_image(inst.image_id) == nullptr) {
      throw SchemaError(where + ": unknown image_id " +
                        std::to_string(inst.image_id));
    }
    manifest.annotations.push_back(std::move(inst));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str(), path);
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest_to_json(manifest);
}

}  // namespace amodal
