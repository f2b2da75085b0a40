#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "amodal/instance.hpp"

namespace amodal {

/// Cleaning thresholds. Boundary semantics are strict: equality keeps
/// (drop only when strictly below min_visible_ratio or strictly above
/// max_image_coverage / max_occlusion).
struct FilterConfig {
  double min_visible_ratio = 0.10;
  double max_image_coverage = 0.90;
  std::set<std::string> stuff_categories;
  double max_occlusion = 0.90;

  bool visibility_enabled = true;
  bool coverage_enabled = true;
  bool class_enabled = true;
  bool occlusion_enabled = true;
};

enum class DropReason {
  low_visibility,
  high_coverage,
  stuff_class,
  excess_occlusion
};

std::string to_string(DropReason reason);

struct FilterDecision {
  bool keep = true;
  std::optional<DropReason> reason;
};

/// Drop iff area(modal)/area(amodal) < min_ratio.
FilterDecision filter_visibility(const AmodalInstance& inst, double min_ratio);

/// Drop iff area(amodal)/(image area) > max_ratio.
FilterDecision filter_coverage(const AmodalInstance& inst, int image_width,
                               int image_height, double max_ratio);

/// Drop iff the category is in the stuff set; uncategorized kept.
FilterDecision filter_class(const AmodalInstance& inst,
                            const std::set<std::string>& stuff_categories);

/// Drop iff occlusion_rate > max_occlusion (unnatural occlusion guard).
FilterDecision filter_walt_occlusion(const AmodalInstance& inst,
                                     double max_occlusion);

/// All enabled filters, evaluated in a fixed canonical order so the
/// recorded drop reason does not depend on caller ordering.
FilterDecision apply_filters(const AmodalInstance& inst,
                             const ImageInfo& image, const FilterConfig& cfg);

struct FilterReport {
  std::int64_t kept = 0;
  std::int64_t dropped = 0;
  std::map<std::string, std::int64_t> dropped_by_reason;
};

std::string filter_report_to_json(const FilterReport& report);

/// Returns the filtered manifest (images untouched) and the report.
std::pair<DatasetManifest, FilterReport> filter_manifest(
    const DatasetManifest& manifest, const FilterConfig& cfg);

struct CorpusStats {
  std::int64_t n_instances = 0;
  std::int64_t n_images = 0;
  double poi = 0.0;                  // percent occluded instances
  std::optional<double> avg_ror;     // percent, over occluded instances only
};

/// Throws std::invalid_argument on an empty manifest. avg_ror is null
/// when no instance is occluded.
CorpusStats compute_stats(const DatasetManifest& manifest);

std::string stats_to_json(const CorpusStats& stats);

/// Stuff category list: a text file with one category per line
/// ('#' comments allowed) or a JSON array of strings.
std::set<std::string> load_stuff_categories(const std::string& path);

}  // namespace amodal
