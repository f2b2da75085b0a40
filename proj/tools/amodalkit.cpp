#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "amodal/config.hpp"
#include "amodal/datafilter.hpp"
#include "amodal/datasynth.hpp"
#include "amodal/errors.hpp"
#include "amodal/experiments.hpp"
#include "amodal/eval.hpp"
#include "amodal/manifest.hpp"
#include "amodal/pipeline.hpp"
#include "amodal/train.hpp"
#include "amodal/viz.hpp"

namespace fs = std::filesystem;
using namespace amodal;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

FlatConfig resolve_config(const CommonArgs& args) {
  FlatConfig cfg;
  if (!args.config_path.empty()) {
    cfg = FlatConfig::from_file(args.config_path);
  }
  for (const auto& kv : args.overrides) cfg.set_override(kv);
  if (args.seed) cfg.set("seed", std::to_string(*args.seed));
  // Environment wins; lets wrapper scripts force reproducible runs.
  if (const char* env = std::getenv("AMODALKIT_SEED")) cfg.set("seed", env);
  return cfg;
}

void write_run_manifest(const std::string& command, const FlatConfig& cfg,
                        const CommonArgs& args,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  fs::create_directories(args.out_dir);
  std::ofstream out(fs::path(args.out_dir) / "run.json", std::ios::binary);
  out << j.dump(2) << "\n";
}

std::set<std::string> with_seed(std::set<std::string> keys) {
  keys.insert("seed");
  return keys;
}

// --- synth ------------------------------------------------------------

SynthesisConfig synthesis_config_from(const FlatConfig& cfg) {
  SynthesisConfig sc;
  sc.seed = cfg.get_uint("seed", sc.seed);
  sc.canvas = static_cast<int>(cfg.get_int("synth.canvas", sc.canvas));
  sc.ror_min = cfg.get_double("synth.ror_min", sc.ror_min);
  sc.ror_max = cfg.get_double("synth.ror_max", sc.ror_max);
  sc.scale_jitter_min =
      cfg.get_double("synth.scale_jitter_min", sc.scale_jitter_min);
  sc.scale_jitter_max =
      cfg.get_double("synth.scale_jitter_max", sc.scale_jitter_max);
  sc.placement_tolerance =
      cfg.get_double("synth.tolerance", sc.placement_tolerance);
  sc.max_attempt_factor = static_cast<int>(
      cfg.get_int("synth.max_attempt_factor", sc.max_attempt_factor));
  sc.include_occluder_annotations =
      cfg.get_bool("synth.include_occluders", sc.include_occluder_annotations);
  sc.background = cfg.get_double("synth.background", sc.background);
  sc.background_noise =
      cfg.get_double("synth.background_noise", sc.background_noise);
  sc.min_long_side = cfg.get_double("synth.min_long_side", sc.min_long_side);
  sc.max_long_side = cfg.get_double("synth.max_long_side", sc.max_long_side);
  sc.min_aspect = cfg.get_double("synth.min_aspect", sc.min_aspect);
  sc.min_intensity = cfg.get_double("synth.min_intensity", sc.min_intensity);
  sc.max_intensity = cfg.get_double("synth.max_intensity", sc.max_intensity);
  sc.min_intensity_gap =
      cfg.get_double("synth.min_intensity_gap", sc.min_intensity_gap);
  return sc;
}

int cmd_synth(const CommonArgs& args) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({
      "synth.pairs", "synth.canvas", "synth.ror_min", "synth.ror_max",
      "synth.scale_jitter_min", "synth.scale_jitter_max", "synth.tolerance",
      "synth.max_attempt_factor", "synth.include_occluders",
      "synth.background", "synth.background_noise", "synth.min_long_side",
      "synth.max_long_side", "synth.min_aspect", "synth.min_intensity",
      "synth.max_intensity", "synth.min_intensity_gap"}));
  const int pairs = static_cast<int>(cfg.get_int("synth.pairs", 10));
  const SynthesisConfig sc = synthesis_config_from(cfg);

  SynthesisResult result = synthesize_pairs(pairs, sc);

  fs::create_directories(fs::path(args.out_dir) / "images");
  for (std::size_t i = 0; i < result.images.size(); ++i) {
    const fs::path path =
        fs::path(args.out_dir) / result.manifest.images[i].file;
    write_png(result.images[i], path.string());
  }
  const std::string manifest_path =
      (fs::path(args.out_dir) / "manifest.json").string();
  save_manifest(result.manifest, manifest_path);
  const std::string report_path =
      (fs::path(args.out_dir) / "synthesis_report.json").string();
  {
    std::ofstream out(report_path, std::ios::binary);
    out << report_to_json(result.report);
  }
  write_run_manifest("synth", cfg, args, {},
                     {manifest_path, report_path});

  std::cout << "produced " << result.report.produced_pairs << "/" << pairs
            << " pairs (" << result.manifest.annotations.size()
            << " annotations), skipped " << result.report.skipped.size()
            << "\n";
  if (result.report.produced_pairs < pairs) {
    std::cerr << "error: could not synthesize the requested number of pairs; "
                 "see "
              << report_path << "\n";
    return 3;
  }
  return 0;
}

// --- filter / stats ----------------------------------------------------

int cmd_filter(const CommonArgs& args, const std::string& input) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({
      "filter.min_visible_ratio", "filter.max_image_coverage",
      "filter.max_occlusion", "filter.stuff_file", "filter.visibility_enabled",
      "filter.coverage_enabled", "filter.class_enabled",
      "filter.occlusion_enabled"}));
  FilterConfig fc;
  fc.min_visible_ratio =
      cfg.get_double("filter.min_visible_ratio", fc.min_visible_ratio);
  fc.max_image_coverage =
      cfg.get_double("filter.max_image_coverage", fc.max_image_coverage);
  fc.max_occlusion = cfg.get_double("filter.max_occlusion", fc.max_occlusion);
  fc.visibility_enabled =
      cfg.get_bool("filter.visibility_enabled", fc.visibility_enabled);
  fc.coverage_enabled =
      cfg.get_bool("filter.coverage_enabled", fc.coverage_enabled);
  fc.class_enabled = cfg.get_bool("filter.class_enabled", fc.class_enabled);
  fc.occlusion_enabled =
      cfg.get_bool("filter.occlusion_enabled", fc.occlusion_enabled);
  if (cfg.has("filter.stuff_file")) {
    fc.stuff_categories =
        load_stuff_categories(cfg.get_string("filter.stuff_file", ""));
  }

  const DatasetManifest manifest = load_manifest(input);
  auto [filtered, report] = filter_manifest(manifest, fc);

  fs::create_directories(args.out_dir);
  const std::string out_manifest =
      (fs::path(args.out_dir) / "filtered_manifest.json").string();
  save_manifest(filtered, out_manifest);
  const std::string out_report =
      (fs::path(args.out_dir) / "filter_report.json").string();
  {
    std::ofstream out(out_report, std::ios::binary);
    out << filter_report_to_json(report);
  }
  write_run_manifest("filter", cfg, args, {input}, {out_manifest, out_report});
  std::cout << "kept " << report.kept << ", dropped " << report.dropped
            << "\n";
  return 0;
}

int cmd_stats(const CommonArgs& args, const std::string& input) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({}));
  const DatasetManifest manifest = load_manifest(input);
  const CorpusStats stats = compute_stats(manifest);
  const std::string text = stats_to_json(stats);
  fs::create_directories(args.out_dir);
  const std::string out_path =
      (fs::path(args.out_dir) / "stats.json").string();
  {
    std::ofstream out(out_path, std::ios::binary);
    out << text;
  }
  write_run_manifest("stats", cfg, args, {input}, {out_path});
  std::cout << text;
  return 0;
}

// --- train --------------------------------------------------------------

Corpus load_corpus(const std::string& manifest_path, int expected_size) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::map<std::int64_t, Image> images;
  for (const auto& info : manifest.images) {
    const fs::path file = base / info.file;
    if (!fs::exists(file)) {
      throw SchemaError("train: missing image file " + file.string());
    }
    Image image = read_png(file.string());
    if (image.height != info.height || image.width != info.width) {
      throw SchemaError("train: image dims disagree with manifest for " +
                        file.string());
    }
    if (expected_size > 0 &&
        (image.height != expected_size || image.width != expected_size)) {
      throw SchemaError("train: image " + file.string() +
                        " does not match model.image_size");
    }
    images[info.id] = std::move(image);
  }
  Corpus corpus;
  corpus.name = manifest.name.empty() ? manifest_path : manifest.name;
  for (const auto& ann : manifest.annotations) {
    corpus.samples.push_back(Sample{images.at(ann.image_id), ann});
  }
  return corpus;
}

int cmd_train(const CommonArgs& args, const std::vector<std::string>& inputs) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({
      "model.image_size", "model.patch_size", "model.embed_dim", "model.heads",
      "model.encoder_depth", "model.decoder_depth", "model.trainable_parts",
      "prompt.mode", "prompt.random_modal_probability", "loss.lambda_iou",
      "loss.gamma", "loss.probability_floor", "train.iterations",
      "train.batch_size", "train.learning_rate", "train.workers",
      "train.log_every", "train.resume"}));

  PredictorConfig mc;
  mc.image_size = static_cast<int>(cfg.get_int("model.image_size", 64));
  mc.patch_size = static_cast<int>(cfg.get_int("model.patch_size", 8));
  mc.embed_dim = static_cast<int>(cfg.get_int("model.embed_dim", 64));
  mc.heads = static_cast<int>(cfg.get_int("model.heads", 4));
  mc.encoder_depth = static_cast<int>(cfg.get_int("model.encoder_depth", 1));
  mc.decoder_depth = static_cast<int>(cfg.get_int("model.decoder_depth", 2));
  mc.seed = cfg.get_uint("seed", 0);
  if (cfg.has("model.trainable_parts")) {
    mc.trainable_parts.clear();
    std::istringstream parts(cfg.get_string("model.trainable_parts", ""));
    std::string part;
    while (std::getline(parts, part, ',')) {
      if (!part.empty()) mc.trainable_parts.insert(model_part_from_string(part));
    }
  }

  PromptPolicy policy;
  policy.mode =
      prompt_mode_from_string(cfg.get_string("prompt.mode", "random"));
  policy.random_modal_probability = cfg.get_double(
      "prompt.random_modal_probability", policy.random_modal_probability);

  LossConfig loss;
  loss.lambda_iou = cfg.get_double("loss.lambda_iou", loss.lambda_iou);
  loss.gamma = cfg.get_double("loss.gamma", loss.gamma);
  loss.probability_floor =
      cfg.get_double("loss.probability_floor", loss.probability_floor);

  TrainOptions topts;
  topts.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 32));
  topts.learning_rate = cfg.get_double("train.learning_rate", 1e-4);
  topts.workers = static_cast<int>(cfg.get_int("train.workers", 0));
  topts.log_every = static_cast<int>(cfg.get_int("train.log_every", 100));
  const std::int64_t iterations = cfg.get_int("train.iterations", 1000);

  std::vector<Corpus> corpora;
  for (const auto& input : inputs) {
    corpora.push_back(load_corpus(input, mc.image_size));
  }

  std::optional<Checkpoint> resume;
  if (cfg.has("train.resume")) {
    resume = load_checkpoint(cfg.get_string("train.resume", ""));
  }

  fs::create_directories(args.out_dir);
  const std::string log_path =
      (fs::path(args.out_dir) / "train_log.txt").string();
  std::ofstream log(log_path, std::ios::binary);
  const Checkpoint ck =
      train(corpora, policy, mc, loss, topts, iterations,
            resume ? &*resume : nullptr, &log);

  const std::string ck_path =
      (fs::path(args.out_dir) / "checkpoint.ckpt").string();
  save_checkpoint(ck, ck_path);
  write_run_manifest("train", cfg, args, inputs, {ck_path, log_path});
  std::cout << "trained " << ck.iteration << " iterations -> " << ck_path
            << "\n";
  return 0;
}

// --- infer ---------------------------------------------------------------

int cmd_infer(const CommonArgs& args, const std::string& checkpoint_path,
              const std::string& manifest_path,
              const std::string& detections_path) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({}));
  if (!fs::exists(checkpoint_path)) {
    throw SchemaError("checkpoint not found: " + checkpoint_path);
  }
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const Model model = model_from_checkpoint(ck);
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<DetectionRecord> dets = ingest_detections(detections_path);
  const int clamped = clamp_detections(dets, manifest);
  if (clamped > 0) {
    std::cerr << "warning: clamped " << clamped
              << " boxes to image bounds\n";
  }
  const fs::path base = fs::path(manifest_path).parent_path();

  // Per-image batches; outputs keep the detection-file order.
  std::map<std::int64_t, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (manifest.find_image(dets[i].image_id) == nullptr) {
      throw SchemaError("infer: detection " + std::to_string(i) +
                        " references unknown image " +
                        std::to_string(dets[i].image_id));
    }
    by_image[dets[i].image_id].push_back(i);
  }
  std::vector<AmodalResult> results(dets.size());
  for (const auto& [image_id, indices] : by_image) {
    const ImageInfo* info = manifest.find_image(image_id);
    const fs::path file = base / info->file;
    if (!fs::exists(file)) {
      throw SchemaError("infer: missing image file " + file.string());
    }
    const Image image = read_png(file.string());
    std::vector<DetectionRecord> group;
    for (const auto i : indices) group.push_back(dets[i]);
    std::vector<AmodalResult> group_results =
        run_inference(image, group, model);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      results[indices[k]] = std::move(group_results[k]);
    }
  }

  fs::create_directories(args.out_dir);
  const std::string out_path =
      (fs::path(args.out_dir) / "results.json").string();
  write_results(results, out_path);
  write_run_manifest("infer", cfg, args,
                     {checkpoint_path, manifest_path, detections_path},
                     {out_path});
  std::cout << "wrote " << results.size() << " results -> " << out_path
            << "\n";
  return 0;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const CommonArgs& args, const std::string& gt_path,
             const std::string& results_path) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed(
      {"eval.max_detections", "eval.class_agnostic", "eval.trace",
       "eval.pr_csv"}));
  EvalConfig ec;
  ec.max_detections =
      static_cast<int>(cfg.get_int("eval.max_detections", ec.max_detections));
  ec.class_agnostic = cfg.get_bool("eval.class_agnostic", ec.class_agnostic);

  const DatasetManifest gt = load_manifest(gt_path);
  const std::vector<EvalDetection> dets =
      load_results_as_detections(results_path);
  const ClassEvalReport report = evaluate_run(gt, dets, ec);

  fs::create_directories(args.out_dir);
  const std::string out_path =
      (fs::path(args.out_dir) / "eval_report.json").string();
  {
    std::ofstream out(out_path, std::ios::binary);
    out << eval_report_to_json(report, cfg.get_bool("eval.trace", false));
  }
  std::vector<std::string> outputs = {out_path};
  if (cfg.get_bool("eval.pr_csv", false)) {
    const std::string csv_path =
        (fs::path(args.out_dir) / "pr_curves.csv").string();
    std::ofstream csv(csv_path, std::ios::binary);
    csv << pr_curves_csv(dets, ground_truth_from_manifest(gt), ec);
    outputs.push_back(csv_path);
  }
  write_run_manifest("eval", cfg, args, {gt_path, results_path}, outputs);

  auto fmt = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("null");
  };
  std::cout << "AP " << fmt(report.overall.ap) << " AP50 "
            << fmt(report.overall.ap50) << " AP75 " << fmt(report.overall.ap75)
            << " AR " << fmt(report.overall.ar) << "\n";
  return 0;
}

// --- ablate -----------------------------------------------------------------

int cmd_ablate(const CommonArgs& args, const std::string& which) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed(
      {"ablate.train_pairs", "ablate.eval_pairs", "ablate.iterations",
       "ablate.learning_rate", "ablate.batch_size", "model.image_size",
       "model.patch_size", "model.embed_dim", "model.heads",
       "model.encoder_depth", "model.decoder_depth"}));

  ExperimentOptions opts;
  opts.seed = cfg.get_uint("seed", opts.seed);
  opts.train_pairs =
      static_cast<int>(cfg.get_int("ablate.train_pairs", opts.train_pairs));
  opts.eval_pairs =
      static_cast<int>(cfg.get_int("ablate.eval_pairs", opts.eval_pairs));
  opts.iterations = cfg.get_int("ablate.iterations", opts.iterations);
  opts.learning_rate =
      cfg.get_double("ablate.learning_rate", opts.learning_rate);
  opts.batch_size =
      static_cast<int>(cfg.get_int("ablate.batch_size", opts.batch_size));
  opts.model.image_size =
      static_cast<int>(cfg.get_int("model.image_size", opts.model.image_size));
  opts.model.patch_size =
      static_cast<int>(cfg.get_int("model.patch_size", opts.model.patch_size));
  opts.model.embed_dim =
      static_cast<int>(cfg.get_int("model.embed_dim", opts.model.embed_dim));
  opts.model.heads =
      static_cast<int>(cfg.get_int("model.heads", opts.model.heads));
  opts.model.encoder_depth = static_cast<int>(
      cfg.get_int("model.encoder_depth", opts.model.encoder_depth));
  opts.model.decoder_depth = static_cast<int>(
      cfg.get_int("model.decoder_depth", opts.model.decoder_depth));

  std::string table;
  nlohmann::json j;
  if (which == "iou-refine") {
    const IouRefineResult r = ablate_iou_refine();
    table = iou_refine_table(r);
    j = {{"ap_raw", r.ap_raw},
         {"ap_refined", r.ap_refined},
         {"ap75_raw", r.ap75_raw},
         {"ap75_refined", r.ap75_refined},
         {"never_worse", r.never_worse},
         {"improved", r.improved}};
  } else if (which == "prompt-type") {
    const PromptAblation r = ablate_prompt_type(opts, &std::cerr);
    table = prompt_table(r);
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
      j["rows"].push_back({{"policy", row.policy},
                           {"modal_prompt_iou", row.modal_prompt_iou},
                           {"amodal_prompt_iou", row.amodal_prompt_iou},
                           {"average", row.average}});
    }
  } else if (which == "composition") {
    const CompositionResult r = ablate_composition(opts, &std::cerr);
    table = composition_table(r);
    j = {{"leakage_occluded_only", r.leakage_occluded_only},
         {"leakage_mixed", r.leakage_mixed},
         {"foreground_iou_occluded_only", r.foreground_iou_occluded_only},
         {"foreground_iou_mixed", r.foreground_iou_mixed},
         {"probes", r.probes}};
  } else {
    throw SchemaError("unknown ablation: " + which +
                      " (expected iou-refine, prompt-type or composition)");
  }

  fs::create_directories(args.out_dir);
  const std::string txt_path =
      (fs::path(args.out_dir) / ("ablation_" + which + ".txt")).string();
  const std::string json_path =
      (fs::path(args.out_dir) / ("ablation_" + which + ".json")).string();
  {
    std::ofstream out(txt_path, std::ios::binary);
    out << table;
  }
  {
    std::ofstream out(json_path, std::ios::binary);
    out << j.dump(2) << "\n";
  }
  write_run_manifest("ablate", cfg, args, {}, {txt_path, json_path});
  std::cout << table;
  return 0;
}

// --- viz ----------------------------------------------------------------------

int cmd_viz(const CommonArgs& args, const std::string& manifest_path,
            const std::string& results_path) {
  FlatConfig cfg = resolve_config(args);
  cfg.require_known(with_seed({}));
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::string images_dir = fs::path(manifest_path).parent_path().string();
  std::vector<std::string> written;
  if (results_path.empty()) {
    written = render_manifest_overlays(manifest, images_dir, args.out_dir);
  } else {
    const std::vector<EvalDetection> dets =
        load_results_as_detections(results_path);
    std::vector<AmodalResult> results;
    for (const auto& d : dets) {
      AmodalResult r;
      r.detection.image_id = d.image_id;
      r.detection.score_front = 0.0;
      r.amodal_mask = d.mask;
      r.score_refined = d.score;
      results.push_back(std::move(r));
    }
    written = render_result_overlays(manifest, images_dir, results,
                                     args.out_dir);
  }
  write_run_manifest("viz", cfg, args, {manifest_path}, written);
  std::cout << "wrote " << written.size() << " overlays\n";
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "override: key=value")
      ->take_all();
  cmd->add_option("--seed", args.seed, "seed override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amodal segmentation toolkit"};
  app.require_subcommand(1);

  CommonArgs synth_args, filter_args, stats_args, train_args, infer_args,
      eval_args, ablate_args, viz_args;
  std::string filter_in, stats_in;
  std::vector<std::string> train_in;
  std::string infer_checkpoint, infer_manifest, infer_detections;
  std::string eval_gt, eval_results;
  std::string ablate_which;
  std::string viz_manifest, viz_results;

  auto* synth = app.add_subcommand("synth", "forge a dual-annotated corpus");
  add_common(synth, synth_args);

  auto* filter = app.add_subcommand("filter", "apply the cleaning rules");
  add_common(filter, filter_args);
  filter->add_option("--in", filter_in, "input manifest")->required();

  auto* stats = app.add_subcommand("stats", "corpus occlusion statistics");
  add_common(stats, stats_args);
  stats->add_option("--in", stats_in, "input manifest")->required();

  auto* train_cmd = app.add_subcommand("train", "fine-tune the mask decoder");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--in", train_in, "training manifest(s)")
      ->required()
      ->take_all();

  auto* infer = app.add_subcommand("infer", "amodal masks from detections");
  add_common(infer, infer_args);
  infer->add_option("--checkpoint", infer_checkpoint, "model checkpoint")
      ->required();
  infer->add_option("--manifest", infer_manifest, "manifest with the images")
      ->required();
  infer->add_option("--detections", infer_detections, "detection file")
      ->required();

  auto* eval_cmd = app.add_subcommand("eval", "class-agnostic AP/AR");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--gt", eval_gt, "ground-truth manifest")->required();
  eval_cmd->add_option("--results", eval_results, "result file")->required();

  auto* ablate = app.add_subcommand("ablate", "paired-config experiments");
  add_common(ablate, ablate_args);
  ablate
      ->add_option("which", ablate_which,
                   "iou-refine | prompt-type | composition")
      ->required();

  auto* viz = app.add_subcommand("viz", "static overlay images");
  add_common(viz, viz_args);
  viz->add_option("--in", viz_manifest, "manifest with images")->required();
  viz->add_option("--results", viz_results, "optional result file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (filter->parsed()) return cmd_filter(filter_args, filter_in);
    if (stats->parsed()) return cmd_stats(stats_args, stats_in);
    if (train_cmd->parsed()) return cmd_train(train_args, train_in);
    if (infer->parsed()) {
      return cmd_infer(infer_args, infer_checkpoint, infer_manifest,
                       infer_detections);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args, eval_gt, eval_results);
    if (ablate->parsed()) return cmd_ablate(ablate_args, ablate_which);
    if (viz->parsed()) return cmd_viz(viz_args, viz_manifest, viz_results);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
