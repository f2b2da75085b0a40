#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "amodal/datasynth.hpp"
#include "amodal/train.hpp"

namespace amodal {

/// Knobs for the toy-scale experiment runs (learning signal and the
/// ablation reproductions).
struct ExperimentOptions {
  std::uint64_t seed = 7;
  int train_pairs = 1000;  // dual annotation doubles the entry count
  int eval_pairs = 100;
  std::int64_t iterations = 4000;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int workers = 0;
  PredictorConfig model;
};

/// Samples for every annotation in a synthesis result (image resolved
/// through the manifest).
std::vector<Sample> samples_from_synthesis(const SynthesisResult& synth);

/// Mean IoU between predicted and ground-truth amodal masks over the
/// given instances, prompting with the requested box kind.
double mean_amodal_iou(const Model& model, const std::vector<Sample>& samples,
                       BoxKind prompt_kind);

struct LearningResult {
  double model_iou = 0.0;     // occluded held-out, modal box prompts
  double baseline_iou = 0.0;  // copy-the-visible-region baseline
  int evaluated = 0;
  Checkpoint checkpoint;
};

/// Trains on a fresh dual-annotated shape corpus and scores occluded
/// held-out instances against the visible-copy baseline.
LearningResult run_learning_experiment(const ExperimentOptions& opts,
                                       std::ostream* log = nullptr);

struct IouRefineResult {
  double ap_raw = 0.0;
  double ap_refined = 0.0;
  double ap75_raw = 0.0;
  double ap75_refined = 0.0;
  bool improved = false;      // refined strictly above raw
  bool never_worse = false;   // refined >= raw
};

/// Constructed ranking case with an oracle IoU head: a low-quality
/// high-score detection outranks a high-quality one until refinement
/// reorders them. Deterministic, no training involved.
IouRefineResult ablate_iou_refine();

struct PromptRow {
  std::string policy;
  double modal_prompt_iou = 0.0;
  double amodal_prompt_iou = 0.0;
  double average = 0.0;
};

struct PromptAblation {
  std::vector<PromptRow> rows;  // amodal, modal, random
};

/// Trains one model per prompt policy and evaluates each with both
/// front-end box kinds.
PromptAblation ablate_prompt_type(const ExperimentOptions& opts,
                                  std::ostream* log = nullptr);

struct CompositionResult {
  double leakage_occluded_only = 0.0;
  double leakage_mixed = 0.0;
  double foreground_iou_occluded_only = 0.0;
  double foreground_iou_mixed = 0.0;
  int probes = 0;
};

/// Occluded-only vs dual-annotated training, probed with prompts on
/// unoccluded foreground objects. Leakage is the fraction of predicted
/// mask outside the prompted instance's amodal ground truth.
CompositionResult ablate_composition(const ExperimentOptions& opts,
                                     std::ostream* log = nullptr);

std::string iou_refine_table(const IouRefineResult& r);
std::string prompt_table(const PromptAblation& r);
std::string composition_table(const CompositionResult& r);

}  // namespace amodal
