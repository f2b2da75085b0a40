#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "amodal/model.hpp"
#include "amodal/rng.hpp"

namespace amodal {

struct TrainOptions {
  int batch_size = 32;
  double learning_rate = 1e-4;  // Adam, no schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int workers = 0;  // 0: hardware concurrency
  int log_every = 0;
};

struct Sample {
  Image image;
  AmodalInstance instance;
};

struct Corpus {
  std::string name;
  std::vector<Sample> samples;
};

struct StepReport {
  double dice = 0.0;
  double focal = 0.0;
  double iou = 0.0;
  double total = 0.0;
  std::int64_t iteration = 0;
};

/// One training example with its sampled prompt.
struct PromptedExample {
  const Sample* sample = nullptr;
  BoundingBox prompt;
};

/// Owns the model and optimizer state. Parameters outside
/// config.trainable_parts are never updated.
class Trainer {
 public:
  Trainer(const PredictorConfig& cfg, const LossConfig& loss,
          const PromptPolicy& policy, const TrainOptions& opts);
  explicit Trainer(const Checkpoint& ck, const TrainOptions& opts);
  ~Trainer();

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Forward/backward over the batch, then one Adam update.
  /// Throws TrainingError when the loss is not finite.
  StepReport step(const std::vector<PromptedExample>& batch);

  /// Samples prompts via the policy using `rng`, then steps.
  StepReport step(const std::vector<const Sample*>& batch, Rng& rng);

  const Model& model() const;
  Model& model();
  std::int64_t iteration() const;
  const PromptPolicy& policy() const { return policy_; }
  const LossConfig& loss_config() const { return loss_; }

  Checkpoint checkpoint() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  LossConfig loss_;
  PromptPolicy policy_;
  TrainOptions opts_;
};

/// Full training driver: samples a dataset per batch with log-size
/// mixture weights, draws the batch uniformly from it, and applies
/// `iterations` optimizer steps. Per-iteration randomness is derived
/// from (seed, iteration), so a run resumed from a checkpoint matches
/// the uninterrupted run exactly.
Checkpoint train(const std::vector<Corpus>& corpora,
                 const PromptPolicy& policy, const PredictorConfig& cfg,
                 const LossConfig& loss, const TrainOptions& opts,
                 std::int64_t iterations, const Checkpoint* resume = nullptr,
                 std::ostream* log = nullptr);

}  // namespace amodal
