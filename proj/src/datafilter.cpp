#include "amodal/datafilter.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "amodal/errors.hpp"

namespace amodal {

std::string to_string(DropReason reason) {
  switch (reason) {
    case DropReason::low_visibility:
      return "low_visibility";
    case DropReason::high_coverage:
      return "high_coverage";
    case DropReason::stuff_class:
      return "stuff_class";
    case DropReason::excess_occlusion:
      return "excess_occlusion";
  }
  return "unknown";
}

FilterDecision filter_visibility(const AmodalInstance& inst,
                                 double min_ratio) {
  const std::int64_t amodal_area = mask_area(inst.amodal_mask);
  if (amodal_area == 0) {
    throw EmptyMaskError("filter_visibility: empty amodal mask");
  }
  const double ratio = static_cast<double>(mask_area(inst.modal_mask)) /
                       static_cast<double>(amodal_area);
  if (ratio < min_ratio) {
    return {false, DropReason::low_visibility};
  }
  return {true, std::nullopt};
}

FilterDecision filter_coverage(const AmodalInstance& inst, int image_width,
                               int image_height, double max_ratio) {
  if (image_width <= 0 || image_height <= 0) {
    throw std::invalid_argument("filter_coverage: zero-size image");
  }
  const double coverage =
      static_cast<double>(mask_area(inst.amodal_mask)) /
      (static_cast<double>(image_width) * image_height);
  if (coverage > max_ratio) {
    return {false, DropReason::high_coverage};
  }
  return {true, std::nullopt};
}

FilterDecision filter_class(const AmodalInstance& inst,
                            const std::set<std::string>& stuff_categories) {
  if (inst.category && stuff_categories.count(*inst.category) > 0) {
    return {false, DropReason::stuff_class};
  }
  return {true, std::nullopt};
}

FilterDecision filter_walt_occlusion(const AmodalInstance& inst,
                                     double max_occlusion) {
  if (occlusion_rate(inst) > max_occlusion) {
    return {false, DropReason::excess_occlusion};
  }
  return {true, std::nullopt};
}

FilterDecision apply_filters(const AmodalInstance& inst,
                             const ImageInfo& image, const FilterConfig& cfg) {
  if (cfg.visibility_enabled) {
    const auto d = filter_visibility(inst, cfg.min_visible_ratio);
    if (!d.keep) return d;
  }
  if (cfg.coverage_enabled) {
    const auto d =
        filter_coverage(inst, image.width, image.height, cfg.max_image_coverage);
    if (!d.keep) return d;
  }
  if (cfg.class_enabled) {
    const auto d = filter_class(inst, cfg.stuff_categories);
    if (!d.keep) return d;
  }
  if (cfg.occlusion_enabled) {
    const auto d = filter_walt_occlusion(inst, cfg.max_occlusion);
    if (!d.keep) return d;
  }
  return {true, std::nullopt};
}

std::string filter_report_to_json(const FilterReport& report) {
  nlohmann::json j;
  j["kept"] = report.kept;
  j["dropped"] = report.dropped;
  j["dropped_by_reason"] = nlohmann::json::object();
  for (const auto& [reason, count] : report.dropped_by_reason) {
    j["dropped_by_reason"][reason] = count;
  }
  return j.dump(2) + "\n";
}

std::pair<DatasetManifest, FilterReport> filter_manifest(
    const DatasetManifest& manifest, const FilterConfig& cfg) {
  DatasetManifest out;
  out.name = manifest.name;
  out.images = manifest.images;
  FilterReport report;
  for (const auto& inst : manifest.annotations) {
    const ImageInfo* image = manifest.find_image(inst.image_id);
    if (image == nullptr) {
      throw SchemaError("filter: annotation " + std::to_string(inst.id) +
                        " references unknown image " +
                        std::to_string(inst.image_id));
    }
    const FilterDecision d = apply_filters(inst, *image, cfg);
    if (d.keep) {
      out.annotations.push_back(inst);
      ++report.kept;
    } else {
      ++report.dropped;
      ++report.dropped_by_reason[to_string(*d.reason)];
    }
  }
  return {std::move(out), report};
}

CorpusStats compute_stats(const DatasetManifest& manifest) {
  if (manifest.annotations.empty()) {
    throw std::invalid_argument("compute_stats: empty manifest");
  }
  CorpusStats stats;
  stats.n_instances = static_cast<std::int64_t>(manifest.annotations.size());
  stats.n_images = static_cast<std::int64_t>(manifest.images.size());

  std::vector<double> occluded_rors;
  for (const auto& inst : manifest.annotations) {
    if (inst.is_occluded) occluded_rors.push_back(occlusion_rate(inst));
  }
  stats.poi = 100.0 * static_cast<double>(occluded_rors.size()) /
              static_cast<double>(stats.n_instances);
  if (!occluded_rors.empty()) {
    // Summed in sorted order so the result is independent of how the
    // manifest was sharded or permuted.
    std::sort(occluded_rors.begin(), occluded_rors.end());
    double sum = 0.0;
    for (const double r : occluded_rors) sum += r;
    stats.avg_ror = 100.0 * sum / static_cast<double>(occluded_rors.size());
  }
  return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
  nlohmann::json j;
  j["n_instances"] = stats.n_instances;
  j["n_images"] = stats.n_images;
  j["poi"] = stats.poi;
  if (stats.avg_ror) {
    j["avg_ror"] = *stats.avg_ror;
  } else {
    j["avg_ror"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::set<std::string> load_stuff_categories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open stuff list: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  // JSON array form
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      const auto j = nlohmann::json::parse(text);
      std::set<std::string> out;
      for (const auto& item : j) out.insert(item.get<std::string>());
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("bad stuff list " + path + ": " + e.what());
    }
  }

  // plain text: one category per line
  std::set<std::string> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    out.insert(line.substr(begin, end - begin + 1));
  }
  return out;
}

}  // namespace amodal
