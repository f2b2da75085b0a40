#include "amodal/experiments.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "amodal/eval.hpp"

namespace amodal {

std::vector<Sample> samples_from_synthesis(const SynthesisResult& synth) {
  std::map<std::int64_t, std::size_t> image_index;
  for (std::size_t i = 0; i < synth.manifest.images.size(); ++i) {
    image_index[synth.manifest.images[i].id] = i;
  }
  std::vector<Sample> samples;
  samples.reserve(synth.manifest.annotations.size());
  for (const auto& ann : synth.manifest.annotations) {
    Sample s;
    s.image = synth.images[image_index.at(ann.image_id)];
    s.instance = ann;
    samples.push_back(std::move(s));
  }
  return samples;
}

double mean_amodal_iou(const Model& model, const std::vector<Sample>& samples,
                       BoxKind prompt_kind) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const BoundingBox box = prompt_kind == BoxKind::modal &&
                                    !s.instance.modal_box.degenerate()
                                ? s.instance.modal_box
                                : s.instance.amodal_box;
    const PromptedPrediction pred = model.predict(s.image, box);
    sum += mask_iou(threshold_logits(pred.mask_logits), s.instance.amodal_mask);
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

SynthesisConfig corpus_config(const ExperimentOptions& opts,
                              std::uint64_t seed_salt,
                              bool include_occluders) {
  SynthesisConfig cfg;
  cfg.canvas = opts.model.image_size;
  cfg.seed = derive_seed(opts.seed, seed_salt);
  cfg.include_occluder_annotations = include_occluders;
  return cfg;
}

std::vector<Sample> occluded_only(const std::vector<Sample>& samples) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.instance.origin == InstanceOrigin::synthetic_occluded) {
      out.push_back(s);
    }
  }
  return out;
}

Checkpoint train_on(const std::vector<Sample>& samples,
                    const ExperimentOptions& opts, const PromptPolicy& policy,
                    std::uint64_t seed_salt, std::ostream* log) {
  PredictorConfig cfg = opts.model;
  cfg.seed = derive_seed(opts.seed, seed_salt);
  TrainOptions topts;
  topts.batch_size = opts.batch_size;
  topts.learning_rate = opts.learning_rate;
  topts.workers = opts.workers;
  topts.log_every = log != nullptr ? 200 : 0;
  std::vector<Corpus> corpora(1);
  corpora[0].name = "shapes";
  corpora[0].samples = samples;
  return train(corpora, policy, cfg, LossConfig{}, topts, opts.iterations,
               nullptr, log);
}

}  // namespace

LearningResult run_learning_experiment(const ExperimentOptions& opts,
                                       std::ostream* log) {
  const SynthesisResult train_set =
      synthesize_pairs(opts.train_pairs, corpus_config(opts, 101, false));
  const SynthesisResult eval_set =
      synthesize_pairs(opts.eval_pairs, corpus_config(opts, 202, false));

  const std::vector<Sample> train_samples = samples_from_synthesis(train_set);
  if (log != nullptr) {
    (*log) << "train entries: " << train_samples.size() << "\n";
  }

  LearningResult result;
  result.checkpoint = train_on(train_samples, opts, PromptPolicy{}, 303, log);
  const Model model = model_from_checkpoint(result.checkpoint);

  const std::vector<Sample> held_out =
      occluded_only(samples_from_synthesis(eval_set));
  result.evaluated = static_cast<int>(held_out.size());
  result.model_iou = mean_amodal_iou(model, held_out, BoxKind::modal);
  double baseline = 0.0;
  for (const auto& s : held_out) {
    baseline += mask_iou(s.instance.modal_mask, s.instance.amodal_mask);
  }
  result.baseline_iou =
      held_out.empty() ? 0.0 : baseline / static_cast<double>(held_out.size());
  return result;
}

IouRefineResult ablate_iou_refine() {
  // One 64x64 scene, two ground-truth squares. The sloppy detection of
  // G1 carries the highest front score; the exact detection of G1 sits
  // below it until IoU refinement reorders them.
  const int side = 64;
  auto square = [&](int r0, int c0, int size) {
    BinaryMask m(side, side);
    for (int r = r0; r < r0 + size; ++r) {
      for (int c = c0; c < c0 + size; ++c) m.set(r, c, true);
    }
    return m;
  };
  const BinaryMask g1 = square(8, 8, 12);
  const BinaryMask g2 = square(40, 40, 12);
  const BinaryMask sloppy = square(8, 11, 12);  // IoU 0.6 with g1

  std::vector<EvalGroundTruth> gts;
  gts.push_back(EvalGroundTruth{1, 1, g1, std::nullopt});
  gts.push_back(EvalGroundTruth{2, 1, g2, std::nullopt});

  std::vector<EvalDetection> raw;
  raw.push_back(EvalDetection{1, sloppy, 0.95, std::nullopt});
  raw.push_back(EvalDetection{1, g1, 0.90, std::nullopt});
  raw.push_back(EvalDetection{1, g2, 0.50, std::nullopt});

  // Oracle IoU head: the refined score multiplies in the true mask IoU.
  std::vector<EvalDetection> refined = raw;
  for (auto& det : refined) {
    double best = 0.0;
    for (const auto& gt : gts) best = std::max(best, mask_iou(det.mask, gt.mask));
    det.score = det.score * best;
  }

  const EvalConfig cfg;
  const EvalReport raw_report = average_precision(raw, gts, cfg);
  const EvalReport ref_report = average_precision(refined, gts, cfg);

  IouRefineResult result;
  result.ap_raw = raw_report.ap.value_or(0.0);
  result.ap_refined = ref_report.ap.value_or(0.0);
  result.ap75_raw = raw_report.ap75.value_or(0.0);
  result.ap75_refined = ref_report.ap75.value_or(0.0);
  result.never_worse = result.ap_refined >= result.ap_raw - 1e-12;
  result.improved = result.ap_refined > result.ap_raw + 1e-9;
  return result;
}

PromptAblation ablate_prompt_type(const ExperimentOptions& opts,
                                  std::ostream* log) {
  const SynthesisResult train_set =
      synthesize_pairs(opts.train_pairs, corpus_config(opts, 111, false));
  const SynthesisResult eval_set =
      synthesize_pairs(opts.eval_pairs, corpus_config(opts, 222, false));
  const std::vector<Sample> train_samples = samples_from_synthesis(train_set);
  const std::vector<Sample> held_out =
      occluded_only(samples_from_synthesis(eval_set));

  PromptAblation table;
  const PromptMode modes[] = {PromptMode::amodal, PromptMode::modal,
                              PromptMode::random};
  for (const PromptMode mode : modes) {
    PromptPolicy policy;
    policy.mode = mode;
    if (log != nullptr) (*log) << "training policy " << to_string(mode) << "\n";
    // Same init/data seed for every variant: the policy is the only
    // difference between the rows.
    const Checkpoint ck = train_on(train_samples, opts, policy, 404, log);
    const Model model = model_from_checkpoint(ck);
    PromptRow row;
    row.policy = to_string(mode);
    row.modal_prompt_iou = mean_amodal_iou(model, held_out, BoxKind::modal);
    row.amodal_prompt_iou = mean_amodal_iou(model, held_out, BoxKind::amodal);
    row.average = 0.5 * (row.modal_prompt_iou + row.amodal_prompt_iou);
    table.rows.push_back(row);
  }
  return table;
}

CompositionResult ablate_composition(const ExperimentOptions& opts,
                                     std::ostream* log) {
  // The mixed regime trains on every instance the forge knows about:
  // the dual pairs plus the occluders themselves (unoccluded foreground
  // objects in two-object scenes). The occluded-only regime keeps just
  // the synthetic-occluded entries, the way a corpus built purely from
  // occlusion examples would.
  const SynthesisResult train_set =
      synthesize_pairs(opts.train_pairs, corpus_config(opts, 333, true));
  // Probe set prompts target the unoccluded foreground object pasted on
  // top of a fresh scene.
  const SynthesisResult probe_set =
      synthesize_pairs(opts.eval_pairs, corpus_config(opts, 444, true));

  const std::vector<Sample> mixed = samples_from_synthesis(train_set);
  const std::vector<Sample> occluded = occluded_only(mixed);

  if (log != nullptr) (*log) << "training occluded-only model\n";
  const Checkpoint ck_occ = train_on(occluded, opts, PromptPolicy{}, 505, log);
  if (log != nullptr) (*log) << "training mixed model\n";
  const Checkpoint ck_mix = train_on(mixed, opts, PromptPolicy{}, 505, log);
  const Model model_occ = model_from_checkpoint(ck_occ);
  const Model model_mix = model_from_checkpoint(ck_mix);

  std::vector<Sample> probes;
  for (const auto& s : samples_from_synthesis(probe_set)) {
    // Occluder entries: unoccluded foreground objects without a pair key.
    if (s.instance.origin == InstanceOrigin::synthetic_unoccluded &&
        !s.instance.pair_key.has_value()) {
      probes.push_back(s);
    }
  }

  CompositionResult result;
  result.probes = static_cast<int>(probes.size());
  auto evaluate = [&](const Model& model, double& leakage, double& fg_iou) {
    double leak_sum = 0.0;
    double iou_sum = 0.0;
    for (const auto& s : probes) {
      const PromptedPrediction pred =
          model.predict(s.image, s.instance.amodal_box);
      const BinaryMask mask = threshold_logits(pred.mask_logits);
      const std::int64_t area = mask_area(mask);
      const std::int64_t outside = mask_area(subtract(mask, s.instance.amodal_mask));
      leak_sum += area > 0
                      ? static_cast<double>(outside) / static_cast<double>(area)
                      : 0.0;
      iou_sum += mask_iou(mask, s.instance.amodal_mask);
    }
    leakage = probes.empty() ? 0.0 : leak_sum / probes.size();
    fg_iou = probes.empty() ? 0.0 : iou_sum / probes.size();
  };
  evaluate(model_occ, result.leakage_occluded_only,
           result.foreground_iou_occluded_only);
  evaluate(model_mix, result.leakage_mixed, result.foreground_iou_mixed);
  return result;
}

std::string iou_refine_table(const IouRefineResult& r) {
  std::ostringstream out;
  out << "iou-refinement ablation (constructed ranking case)\n";
  out << "  variant        AP       AP75\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "  raw          %6.2f   %6.2f\n", r.ap_raw,
                r.ap75_raw);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  refined      %6.2f   %6.2f\n",
                r.ap_refined, r.ap75_refined);
  out << buf;
  out << "  refined >= raw: " << (r.never_worse ? "yes" : "no")
      << ", strictly improved: " << (r.improved ? "yes" : "no") << "\n";
  return out.str();
}

std::string prompt_table(const PromptAblation& r) {
  std::ostringstream out;
  out << "prompt-type ablation (held-out amodal mask IoU)\n";
  out << "  policy    modal-prompt  amodal-prompt  average\n";
  for (const auto& row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-8s  %12.4f  %13.4f  %7.4f\n",
                  row.policy.c_str(), row.modal_prompt_iou,
                  row.amodal_prompt_iou, row.average);
    out << buf;
  }
  return out.str();
}

std::string composition_table(const CompositionResult& r) {
  std::ostringstream out;
  out << "dataset composition ablation (" << r.probes
      << " foreground probes)\n";
  out << "  training        leakage   foreground IoU\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "  occluded-only  %8.4f   %14.4f\n",
                r.leakage_occluded_only, r.foreground_iou_occluded_only);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  mixed          %8.4f   %14.4f\n",
                r.leakage_mixed, r.foreground_iou_mixed);
  out << buf;
  return out.str();
}

}  // namespace amodal
