#include "amodal/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "amodal/errors.hpp"

namespace amodal {

namespace {

struct SampleLoss {
  double dice = 0.0;
  double focal = 0.0;
  double iou = 0.0;
};

/// Fused forward + loss + backward for one example. Gradients are
/// scaled by `grad_scale` (1/batch) and accumulated into `grad`.
SampleLoss accumulate_example(const Model& model, const PromptedExample& ex,
                              const LossConfig& loss_cfg, float grad_scale,
                              Model& grad, bool encoder_grad) {
  const auto& cfg = model.config();
  Model::ForwardCache cache;
  const BoundingBox box =
      ex.prompt.clamped(cfg.image_size, cfg.image_size);
  const nn::Mat<float> patches = model.image_to_patches(ex.sample->image);
  const Model::Output out =
      model.forward(patches, model.normalized_corners(box), cache);

  const nn::Mat<float> gt = model.mask_to_patches(ex.sample->instance.amodal_mask);
  const auto n_px = static_cast<float>(out.logits.size());
  const float lo = static_cast<float>(loss_cfg.probability_floor);
  const float hi = 1.0f - lo;
  const float gamma = static_cast<float>(loss_cfg.gamma);

  // Probabilities and per-pixel focal terms.
  nn::Mat<float> prob(out.logits.rows(), out.logits.cols());
  nn::Mat<float> d_logits(out.logits.rows(), out.logits.cols());
  double pred_sum = 0.0;
  double gt_sum = 0.0;
  double inter = 0.0;
  double focal_sum = 0.0;
  std::int64_t bin_inter = 0;
  std::int64_t bin_union = 0;
  for (Eigen::Index i = 0; i < out.logits.size(); ++i) {
    const float p = nn::sigmoid(out.logits.data()[i]);
    prob.data()[i] = p;
    const bool g = gt.data()[i] > 0.5f;
    pred_sum += p;
    if (g) {
      inter += p;
      gt_sum += 1.0;
    }
    const bool bin = out.logits.data()[i] > 0.0f;
    bin_inter += (bin && g) ? 1 : 0;
    bin_union += (bin || g) ? 1 : 0;
    const float pc = std::clamp(p, lo, hi);
    const float pt = g ? pc : 1.0f - pc;
    focal_sum += std::pow(1.0f - pt, gamma) * (-std::log(pt));
  }

  SampleLoss out_loss;
  const double denom = pred_sum + gt_sum;
  out_loss.dice = denom > 0.0 ? 1.0 - 2.0 * inter / denom : 0.0;
  out_loss.focal = focal_sum / n_px;
  const double bin_iou =
      bin_union > 0 ? static_cast<double>(bin_inter) / bin_union : 1.0;
  out_loss.iou = std::abs(static_cast<double>(out.rho) - bin_iou);

  // Gradient wrt logits: dice + focal terms, chained through the sigmoid.
  const float inv_d2 =
      denom > 0.0 ? static_cast<float>(1.0 / (denom * denom)) : 0.0f;
  const float inter_f = static_cast<float>(inter);
  const float denom_f = static_cast<float>(denom);
  for (Eigen::Index i = 0; i < out.logits.size(); ++i) {
    const float p = prob.data()[i];
    const bool g = gt.data()[i] > 0.5f;
    float dp = 0.0f;
    if (denom > 0.0) {
      dp += -2.0f * ((g ? denom_f : 0.0f) - inter_f) * inv_d2;
    }
    if (p >= lo && p <= hi) {
      const float pt = g ? p : 1.0f - p;
      const float one_m = 1.0f - pt;
      float d_focal = -std::pow(one_m, gamma) / pt;
      if (gamma > 0.0f) {
        d_focal += gamma * std::pow(one_m, gamma - 1.0f) * std::log(pt);
      }
      dp += (g ? d_focal : -d_focal) / n_px;
    }
    d_logits.data()[i] = dp * p * (1.0f - p) * grad_scale;
  }

  // IoU head: d|rho - c|/drho, c constant almost everywhere.
  const double diff = static_cast<double>(out.rho) - bin_iou;
  const float d_rho = static_cast<float>(loss_cfg.lambda_iou) * grad_scale *
                      (diff > 0.0 ? 1.0f : (diff < 0.0 ? -1.0f : 0.0f));

  model.backward(d_logits, d_rho, cache, grad, encoder_grad);
  return out_loss;
}

}  // namespace

struct Trainer::Impl {
  Model model;
  Model adam_m;
  Model adam_v;
  std::vector<Model> worker_grads;
  std::int64_t iteration = 0;
  std::int64_t adam_step = 0;

  explicit Impl(const PredictorConfig& cfg)
      : model(cfg), adam_m(cfg), adam_v(cfg) {
    adam_m.set_zero();
    adam_v.set_zero();
  }

  std::vector<Model>& grad_buffers(int workers) {
    while (static_cast<int>(worker_grads.size()) < workers) {
      worker_grads.emplace_back(model.config());
    }
    for (int w = 0; w < workers; ++w) worker_grads[w].set_zero();
    return worker_grads;
  }
};

Trainer::Trainer(const PredictorConfig& cfg, const LossConfig& loss,
                 const PromptPolicy& policy, const TrainOptions& opts)
    : impl_(std::make_unique<Impl>(cfg)),
      loss_(loss),
      policy_(policy),
      opts_(opts) {}

Trainer::Trainer(const Checkpoint& ck, const TrainOptions& opts)
    : impl_(std::make_unique<Impl>(ck.config)),
      loss_(ck.loss),
      policy_(ck.policy),
      opts_(opts) {
  impl_->model = model_from_checkpoint(ck);
  impl_->iteration = ck.iteration;
  impl_->adam_step = ck.iteration;
  if (!ck.optimizer.empty()) {
    std::size_t index = 0;
    auto load_into = [&](Model& target) {
      target.visit([&](const std::string& name, ModelPart,
                       nn::Mat<float>& m) {
        if (index >= ck.optimizer.size()) {
          throw SchemaError("checkpoint optimizer state incomplete");
        }
        const TensorBlob& t = ck.optimizer[index++];
        if (t.rows != m.rows() || t.cols != m.cols()) {
          throw SchemaError("checkpoint optimizer shape mismatch at " + name);
        }
        std::copy(t.data.begin(), t.data.end(), m.data());
      });
    };
    load_into(impl_->adam_m);
    load_into(impl_->adam_v);
  }
}

Trainer::~Trainer() = default;

const Model& Trainer::model() const { return impl_->model; }
Model& Trainer::model() { return impl_->model; }
std::int64_t Trainer::iteration() const { return impl_->iteration; }

StepReport Trainer::step(const std::vector<const Sample*>& batch, Rng& rng) {
  std::vector<PromptedExample> examples;
  examples.reserve(batch.size());
  for (const Sample* s : batch) {
    examples.push_back(PromptedExample{s, sample_prompt(s->instance, policy_, rng)});
  }
  return step(examples);
}

StepReport Trainer::step(const std::vector<PromptedExample>& batch) {
  if (batch.empty()) throw std::invalid_argument("train step: empty batch");
  const auto& cfg = impl_->model.config();
  for (const auto& ex : batch) {
    if (ex.sample->image.height != cfg.image_size ||
        ex.sample->image.width != cfg.image_size) {
      throw std::invalid_argument(
          "train step: sample image does not match configured size");
    }
  }

  const bool encoder_grad =
      cfg.trainable_parts.count(ModelPart::encoder) > 0;
  const float grad_scale = 1.0f / static_cast<float>(batch.size());

  int workers = opts_.workers > 0
                    ? opts_.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp<int>(workers, 1, static_cast<int>(batch.size()));

  // Each worker accumulates over a contiguous slice; slices are merged
  // in slice order so the reduction is independent of scheduling.
  std::vector<Model>& grads = impl_->grad_buffers(workers);
  std::vector<std::vector<SampleLoss>> losses(workers);

  const auto n = batch.size();
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end]() {
      for (std::size_t i = begin; i < end; ++i) {
        losses[w].push_back(accumulate_example(impl_->model, batch[i], loss_,
                                               grad_scale, grads[w],
                                               encoder_grad));
      }
    });
  }
  for (auto& t : threads) t.join();

  StepReport report;
  for (const auto& chunk : losses) {
    for (const auto& l : chunk) {
      report.dice += l.dice;
      report.focal += l.focal;
      report.iou += l.iou;
    }
  }
  report.dice /= static_cast<double>(n);
  report.focal /= static_cast<double>(n);
  report.iou /= static_cast<double>(n);
  report.total = report.dice + report.focal + loss_.lambda_iou * report.iou;
  report.iteration = impl_->iteration;

  if (!std::isfinite(report.total)) {
    throw TrainingError(
        "non-finite loss at iteration " + std::to_string(impl_->iteration) +
        " (dice=" + std::to_string(report.dice) +
        ", focal=" + std::to_string(report.focal) +
        ", iou=" + std::to_string(report.iou) + ")");
  }

  // Merge worker gradients in fixed order.
  std::vector<nn::Mat<float>*> total_refs;
  grads[0].visit([&](const std::string&, ModelPart, nn::Mat<float>& m) {
    total_refs.push_back(&m);
  });
  for (int w = 1; w < workers; ++w) {
    std::size_t idx = 0;
    grads[w].visit([&](const std::string&, ModelPart, nn::Mat<float>& m) {
      *total_refs[idx++] += m;
    });
  }

  // Adam on the trainable parts.
  ++impl_->adam_step;
  const double t = static_cast<double>(impl_->adam_step);
  const float lr = static_cast<float>(opts_.learning_rate);
  const float b1 = static_cast<float>(opts_.beta1);
  const float b2 = static_cast<float>(opts_.beta2);
  const float eps = static_cast<float>(opts_.epsilon);
  const float corr1 = static_cast<float>(1.0 - std::pow(opts_.beta1, t));
  const float corr2 = static_cast<float>(1.0 - std::pow(opts_.beta2, t));

  std::vector<nn::Mat<float>*> m_refs, v_refs;
  impl_->adam_m.visit([&](const std::string&, ModelPart, nn::Mat<float>& m) {
    m_refs.push_back(&m);
  });
  impl_->adam_v.visit([&](const std::string&, ModelPart, nn::Mat<float>& m) {
    v_refs.push_back(&m);
  });
  std::size_t idx = 0;
  impl_->model.visit([&](const std::string&, ModelPart part,
                         nn::Mat<float>& param) {
    const std::size_t i = idx++;
    if (cfg.trainable_parts.count(part) == 0) return;
    nn::Mat<float>& g = *total_refs[i];
    nn::Mat<float>& m = *m_refs[i];
    nn::Mat<float>& v = *v_refs[i];
    m = b1 * m + (1.0f - b1) * g;
    v = (b2 * v.array() + (1.0f - b2) * g.array().square()).matrix();
    param.array() -=
        lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  });

  ++impl_->iteration;
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck = model_to_checkpoint(impl_->model);
  ck.loss = loss_;
  ck.policy = policy_;
  ck.iteration = impl_->iteration;
  ck.seed = impl_->model.config().seed;
  auto dump = [&](Model& m) {
    m.visit([&](const std::string& name, ModelPart, nn::Mat<float>& mat) {
      TensorBlob t;
      t.name = "adam." + name;
      t.rows = static_cast<int>(mat.rows());
      t.cols = static_cast<int>(mat.cols());
      t.data.assign(mat.data(), mat.data() + mat.size());
      ck.optimizer.push_back(std::move(t));
    });
  };
  dump(impl_->adam_m);
  dump(impl_->adam_v);
  return ck;
}

Checkpoint train(const std::vector<Corpus>& corpora,
                 const PromptPolicy& policy, const PredictorConfig& cfg,
                 const LossConfig& loss, const TrainOptions& opts,
                 std::int64_t iterations, const Checkpoint* resume,
                 std::ostream* log) {
  if (corpora.empty()) {
    throw std::invalid_argument("train: no corpora given");
  }
  for (const auto& corpus : corpora) {
    if (corpus.samples.empty()) {
      throw std::invalid_argument("train: corpus '" + corpus.name +
                                  "' is empty");
    }
    for (const auto& s : corpus.samples) validate_instance(s.instance);
  }

  std::unique_ptr<Trainer> trainer;
  if (resume != nullptr) {
    trainer = std::make_unique<Trainer>(*resume, opts);
  } else {
    trainer = std::make_unique<Trainer>(cfg, loss, policy, opts);
  }

  std::vector<std::int64_t> sizes;
  for (const auto& c : corpora) {
    sizes.push_back(static_cast<std::int64_t>(c.samples.size()));
  }
  const bool use_mixture = corpora.size() > 1;
  MixtureSpec mix;
  if (use_mixture) mix = MixtureSpec::from_sizes(sizes);

  const std::uint64_t seed = trainer->model().config().seed;
  while (trainer->iteration() < iterations) {
    // Per-iteration stream keyed by (seed, iteration): resumable and
    // independent of how the run was split.
    Rng rng(derive_seed(seed, 1 + static_cast<std::uint64_t>(
                                    trainer->iteration())));
    const int di = use_mixture ? sample_dataset(mix, rng) : 0;
    const auto& samples = corpora[di].samples;
    std::vector<const Sample*> batch;
    batch.reserve(opts.batch_size);
    for (int b = 0; b < opts.batch_size; ++b) {
      const auto idx = rng.uniform_int(
          0, static_cast<std::int64_t>(samples.size()) - 1);
      batch.push_back(&samples[idx]);
    }
    const StepReport report = trainer->step(batch, rng);
    if (log != nullptr && opts.log_every > 0 &&
        (report.iteration % opts.log_every == 0 ||
         report.iteration + 1 == iterations)) {
      (*log) << "iter " << report.iteration << " total " << report.total
             << " dice " << report.dice << " focal " << report.focal
             << " iou " << report.iou << "\n";
    }
  }
  return trainer->checkpoint();
}

}  // namespace amodal
