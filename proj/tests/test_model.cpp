#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "amodal/datasynth.hpp"
#include "amodal/experiments.hpp"
#include "amodal/model.hpp"
#include "amodal/train.hpp"

using namespace amodal;

namespace {

PredictorConfig tiny_config(std::uint64_t seed = 0) {
  PredictorConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.embed_dim = 32;
  cfg.heads = 2;
  cfg.encoder_depth = 1;
  cfg.decoder_depth = 2;
  cfg.seed = seed;
  return cfg;
}

SynthesisConfig tiny_synth(std::uint64_t seed, int canvas = 32) {
  SynthesisConfig sc;
  sc.canvas = canvas;
  sc.seed = seed;
  sc.min_long_side = 10.0;
  sc.max_long_side = canvas == 32 ? 18.0 : 38.0;
  return sc;
}

std::vector<Sample> tiny_corpus(int pairs, std::uint64_t seed,
                                int canvas = 32) {
  const SynthesisResult synth = synthesize_pairs(pairs, tiny_synth(seed, canvas));
  REQUIRE(synth.report.produced_pairs == pairs);
  return samples_from_synthesis(synth);
}

}  // namespace

TEST_CASE("config validation") {
  PredictorConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.image_size = 33;  // not divisible by patch
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.embed_dim = 30;
  CHECK_THROWS(cfg.validate());
  cfg = tiny_config();
  cfg.decoder_depth = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("predict shape, range and determinism") {
  const Model model(tiny_config(3));
  Image image(32, 32, 0.1f);
  for (int r = 10; r < 20; ++r) {
    for (int c = 8; c < 24; ++c) image.at(r, c) = 0.8f;
  }
  const BoundingBox box{8, 10, 16, 10, BoxKind::modal};

  const PromptedPrediction a = model.predict(image, box);
  CHECK(a.mask_logits.height == 32);
  CHECK(a.mask_logits.width == 32);
  CHECK(a.iou_estimate > 0.0);
  CHECK(a.iou_estimate < 1.0);

  const PromptedPrediction b = model.predict(image, box);
  CHECK(a.iou_estimate == b.iou_estimate);
  CHECK(std::memcmp(a.mask_logits.values.data(), b.mask_logits.values.data(),
                    a.mask_logits.values.size() * sizeof(float)) == 0);

  // out-of-bounds box that clamps to zero area
  CHECK_THROWS(model.predict(image, BoundingBox{40, 40, 5, 5, BoxKind::modal}));
  // wrong image size
  CHECK_THROWS(model.predict(Image(16, 16, 0.0f), box));
}

TEST_CASE("full-model gradients match central finite differences") {
  PredictorConfig cfg;
  cfg.image_size = 16;
  cfg.patch_size = 4;
  cfg.embed_dim = 16;
  cfg.heads = 2;
  cfg.encoder_depth = 1;
  cfg.decoder_depth = 1;
  cfg.seed = 42;
  // every part trainable so the check covers all parameter paths
  cfg.trainable_parts = {ModelPart::encoder, ModelPart::prompt_encoder,
                         ModelPart::decoder};

  ModelT<double> model(cfg);
  Rng rng(99);
  Image image(16, 16);
  for (auto& px : image.pixels) px = static_cast<float>(rng.uniform());
  BinaryMask gt(16, 16);
  for (int r = 4; r < 12; ++r) {
    for (int c = 4; c < 12; ++c) gt.set(r, c, true);
  }
  const std::array<double, 4> corners = {0.25, 0.25, 0.75, 0.75};
  const LossConfig loss_cfg;
  const int pp = cfg.patch_size * cfg.patch_size;

  // Ground truth in patch layout (the losses are permutation
  // invariant, so evaluating them in this layout is equivalent).
  const ModelT<double> layout_helper(cfg);
  const nn::Mat<double> gt_patches = layout_helper.mask_to_patches(gt);
  BinaryMask gt_p(cfg.tokens(), pp);
  for (int t = 0; t < cfg.tokens(); ++t) {
    for (int j = 0; j < pp; ++j) gt_p.set(t, j, gt_patches(t, j) > 0.5);
  }

  // Smooth surrogate objective: dice + focal + lambda * rho. (The
  // training IoU term contributes sign(rho - c) * lambda through the
  // same rho path; using rho directly keeps the loss differentiable for
  // the finite-difference probe.) Works on the double logits directly;
  // the float LogitGrid used by predict would quantize away the
  // perturbations.
  const auto loss_at = [&](ModelT<double>& m) {
    ModelT<double>::ForwardCache cache;
    const auto out = m.forward(m.image_to_patches(image), corners, cache);
    MaskProbabilities prob(cfg.tokens(), pp);
    for (int t = 0; t < cfg.tokens(); ++t) {
      for (int j = 0; j < pp; ++j) {
        prob.values[static_cast<std::size_t>(t) * pp + j] =
            1.0 / (1.0 + std::exp(-out.logits(t, j)));
      }
    }
    return dice_loss(prob, gt_p) + focal_loss(prob, gt_p, loss_cfg.gamma) +
           loss_cfg.lambda_iou * out.rho;
  };

  // Analytic gradient via backward.
  ModelT<double> grad(cfg);
  grad.set_zero();
  {
    ModelT<double>::ForwardCache cache;
    const auto out = model.forward(model.image_to_patches(image), corners, cache);
    MaskProbabilities prob(cfg.tokens(), pp);
    for (int t = 0; t < cfg.tokens(); ++t) {
      for (int j = 0; j < pp; ++j) {
        prob.values[static_cast<std::size_t>(t) * pp + j] =
            1.0 / (1.0 + std::exp(-out.logits(t, j)));
      }
    }
    const auto dgrad = dice_loss_grad(prob, gt_p);
    const auto fgrad = focal_loss_grad(prob, gt_p, loss_cfg.gamma);
    nn::Mat<double> d_logits(cfg.tokens(), pp);
    for (int t = 0; t < cfg.tokens(); ++t) {
      for (int j = 0; j < pp; ++j) {
        const std::size_t i = static_cast<std::size_t>(t) * pp + j;
        d_logits(t, j) =
            (dgrad[i] + fgrad[i]) * prob.values[i] * (1.0 - prob.values[i]);
      }
    }
    model.backward(d_logits, loss_cfg.lambda_iou, cache, grad, true);
  }

  // Probe a spread of parameter coordinates.
  struct Probe {
    nn::Mat<double>* param;
    nn::Mat<double>* grad;
    Eigen::Index index;
  };
  std::vector<nn::Mat<double>*> params, grads;
  model.visit([&](const std::string&, ModelPart, nn::Mat<double>& m) {
    params.push_back(&m);
  });
  grad.visit([&](const std::string&, ModelPart, nn::Mat<double>& m) {
    grads.push_back(&m);
  });
  REQUIRE(params.size() == grads.size());

  Rng probe_rng(7);
  const double h = 1e-5;
  int probes = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t]->size() == 0) continue;
    const int reps = params[t]->size() > 64 ? 2 : 1;
    for (int rep = 0; rep < reps; ++rep) {
      const auto i = static_cast<Eigen::Index>(
          probe_rng.uniform_int(0, params[t]->size() - 1));
      const double saved = params[t]->data()[i];
      params[t]->data()[i] = saved + h;
      const double hi = loss_at(model);
      params[t]->data()[i] = saved - h;
      const double lo = loss_at(model);
      params[t]->data()[i] = saved;
      const double fd = (hi - lo) / (2.0 * h);
      const double an = grads[t]->data()[i];
      CHECK(std::abs(an - fd) <=
            1e-4 * std::max({std::abs(an), std::abs(fd), 1e-6}));
      ++probes;
    }
  }
  CHECK(probes >= 60);
}

TEST_CASE("trainer loss report agrees with the double-precision reference") {
  const PredictorConfig cfg = tiny_config(21);
  const std::vector<Sample> corpus = tiny_corpus(4, 77);
  REQUIRE(!corpus.empty());

  Trainer trainer(cfg, LossConfig{}, PromptPolicy{PromptMode::amodal, 0.5},
                  TrainOptions{});
  const Sample& s = corpus.front();

  // reference from the frozen initial model
  const PromptedPrediction pred =
      trainer.model().predict(s.image, s.instance.amodal_box);
  const LossBreakdown expected =
      total_loss(logit_probabilities(pred.mask_logits),
                 s.instance.amodal_mask, pred.iou_estimate, LossConfig{});

  const StepReport report =
      trainer.step({PromptedExample{&s, s.instance.amodal_box}});
  CHECK(report.dice == doctest::Approx(expected.dice).epsilon(2e-4));
  CHECK(report.focal == doctest::Approx(expected.focal).epsilon(2e-4));
  CHECK(report.iou == doctest::Approx(expected.iou).epsilon(2e-4));
  CHECK(report.total == doctest::Approx(expected.total).epsilon(2e-4));
}

TEST_CASE("freezing keeps non-trainable parts bit-identical") {
  const PredictorConfig cfg = tiny_config(5);  // trainable: decoder only
  const std::vector<Sample> corpus = tiny_corpus(4, 55);

  TrainOptions opts;
  opts.batch_size = 8;
  opts.learning_rate = 1e-3;
  Trainer trainer(cfg, LossConfig{}, PromptPolicy{}, opts);

  const std::uint64_t enc0 = trainer.model().checksum(ModelPart::encoder);
  const std::uint64_t prm0 =
      trainer.model().checksum(ModelPart::prompt_encoder);
  const std::uint64_t dec0 = trainer.model().checksum(ModelPart::decoder);

  Rng rng(1);
  for (int step = 0; step < 5; ++step) {
    std::vector<const Sample*> batch;
    for (int b = 0; b < opts.batch_size; ++b) {
      batch.push_back(&corpus[rng.uniform_int(0, corpus.size() - 1)]);
    }
    trainer.step(batch, rng);
  }
  CHECK(trainer.model().checksum(ModelPart::encoder) == enc0);
  CHECK(trainer.model().checksum(ModelPart::prompt_encoder) == prm0);
  CHECK(trainer.model().checksum(ModelPart::decoder) != dec0);
}

TEST_CASE("zero learning rate leaves every parameter unchanged") {
  const PredictorConfig cfg = tiny_config(6);
  const std::vector<Sample> corpus = tiny_corpus(2, 66);
  TrainOptions opts;
  opts.batch_size = 4;
  opts.learning_rate = 0.0;
  Trainer trainer(cfg, LossConfig{}, PromptPolicy{}, opts);
  const std::uint64_t dec0 = trainer.model().checksum(ModelPart::decoder);

  Rng rng(2);
  std::vector<const Sample*> batch;
  for (int b = 0; b < opts.batch_size; ++b) {
    batch.push_back(&corpus[rng.uniform_int(0, corpus.size() - 1)]);
  }
  const StepReport report = trainer.step(batch, rng);
  CHECK(std::isfinite(report.total));
  CHECK(report.total > 0.0);
  CHECK(trainer.model().checksum(ModelPart::decoder) == dec0);
}

TEST_CASE("sample_prompt policies") {
  const SynthesisResult synth = synthesize_pairs(3, tiny_synth(9));
  REQUIRE(synth.report.produced_pairs == 3);
  const std::vector<Sample> samples = samples_from_synthesis(synth);

  const Sample* occluded = nullptr;
  const Sample* unoccluded = nullptr;
  for (const auto& s : samples) {
    if (s.instance.is_occluded && occluded == nullptr) occluded = &s;
    if (!s.instance.is_occluded && unoccluded == nullptr) unoccluded = &s;
  }
  REQUIRE(occluded != nullptr);
  REQUIRE(unoccluded != nullptr);

  Rng rng(3);
  // amodal mode always returns the amodal box
  for (int i = 0; i < 20; ++i) {
    const BoundingBox box = sample_prompt(
        occluded->instance, PromptPolicy{PromptMode::amodal, 0.5}, rng);
    CHECK(box.x == occluded->instance.amodal_box.x);
    CHECK(box.w == occluded->instance.amodal_box.w);
  }
  // unoccluded instance: both boxes coincide
  const BoundingBox m = sample_prompt(
      unoccluded->instance, PromptPolicy{PromptMode::modal, 0.5}, rng);
  const BoundingBox a = sample_prompt(
      unoccluded->instance, PromptPolicy{PromptMode::amodal, 0.5}, rng);
  CHECK(m.x == a.x);
  CHECK(m.y == a.y);
  CHECK(m.w == a.w);
  CHECK(m.h == a.h);

  // random mode frequency: 10k draws within 0.5 +/- 0.02
  int modal_count = 0;
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox box = sample_prompt(
        occluded->instance, PromptPolicy{PromptMode::random, 0.5}, rng);
    if (box.kind == BoxKind::modal) ++modal_count;
  }
  const double fraction = modal_count / 10000.0;
  CHECK(fraction > 0.48);
  CHECK(fraction < 0.52);
}

TEST_CASE("mixture weights and sampling") {
  const MixtureSpec mix = MixtureSpec::from_sizes({10, 100});
  const auto w = mix.weights();
  CHECK(std::abs(w[0] - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(w[1] - 2.0 / 3.0) < 1e-12);

  const auto equal = MixtureSpec::from_sizes({50, 50, 50}).weights();
  for (const double x : equal) CHECK(std::abs(x - 1.0 / 3.0) < 1e-12);

  Rng rng(4);
  const MixtureSpec single = MixtureSpec::from_sizes({42});
  for (int i = 0; i < 10; ++i) CHECK(sample_dataset(single, rng) == 0);

  CHECK_THROWS(MixtureSpec::from_sizes({1, 10}));
  CHECK_THROWS(MixtureSpec::from_sizes({}));

  // closed form vs empirical frequency
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    if (sample_dataset(mix, rng) == 0) ++first;
  }
  CHECK(std::abs(first / static_cast<double>(draws) - 1.0 / 3.0) < 0.01);
}

TEST_CASE("checkpoint round trip and config mismatch") {
  const PredictorConfig cfg = tiny_config(8);
  Model model(cfg);
  Checkpoint ck = model_to_checkpoint(model);
  ck.iteration = 123;
  const std::string path = "test_model_ckpt.bin";
  save_checkpoint(ck, path);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.iteration == 123);
  CHECK(loaded.config == cfg);
  REQUIRE(loaded.tensors.size() == ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    CHECK(loaded.tensors[i].name == ck.tensors[i].name);
    CHECK(loaded.tensors[i].data == ck.tensors[i].data);
  }

  Model restored = model_from_checkpoint(loaded);
  CHECK(restored.checksum(ModelPart::decoder) ==
        model.checksum(ModelPart::decoder));

  // a checkpoint whose tensors disagree with its config must be rejected
  Checkpoint broken = ck;
  broken.tensors[0].cols += 1;
  CHECK_THROWS_AS(model_from_checkpoint(broken), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("train is deterministic, resumable, and honors iterations=0") {
  const PredictorConfig cfg = tiny_config(10);
  std::vector<Corpus> corpora(1);
  corpora[0].name = "tiny";
  corpora[0].samples = tiny_corpus(6, 88);

  TrainOptions opts;
  opts.batch_size = 8;
  opts.learning_rate = 1e-3;

  // iterations = 0: checkpoint equals initialization
  const Checkpoint init =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 0);
  Model fresh(cfg);
  const Checkpoint fresh_ck = model_to_checkpoint(fresh);
  REQUIRE(init.tensors.size() == fresh_ck.tensors.size());
  for (std::size_t i = 0; i < init.tensors.size(); ++i) {
    CHECK(init.tensors[i].data == fresh_ck.tensors[i].data);
  }

  const Checkpoint a =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 12);
  const Checkpoint b =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 12);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].data == b.tensors[i].data);
  }

  // split run equals straight run
  const Checkpoint half =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 6);
  const Checkpoint resumed =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 12, &half);
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].data == resumed.tensors[i].data);
  }
}

TEST_CASE("multi-dataset training mixes corpora deterministically") {
  const PredictorConfig cfg = tiny_config(14);
  std::vector<Corpus> corpora(2);
  corpora[0].name = "a";
  corpora[0].samples = tiny_corpus(4, 111);
  corpora[1].name = "b";
  corpora[1].samples = tiny_corpus(8, 222);

  TrainOptions opts;
  opts.batch_size = 4;
  opts.learning_rate = 1e-3;
  const Checkpoint a =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 6);
  const Checkpoint b =
      train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 6);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    CHECK(a.tensors[i].data == b.tensors[i].data);
  }

  // mixture sampling requires every corpus size >= 2
  corpora[1].samples.resize(1);
  CHECK_THROWS(train(corpora, PromptPolicy{}, cfg, LossConfig{}, opts, 2));
}

TEST_CASE("descent on a 32-sample shape set over 500 steps") {
  const PredictorConfig cfg = tiny_config(12);
  std::vector<Corpus> corpora(1);
  corpora[0].name = "descent";
  corpora[0].samples = tiny_corpus(16, 99);  // 32 entries
  REQUIRE(corpora[0].samples.size() == 32);

  TrainOptions opts;
  opts.batch_size = 16;
  opts.learning_rate = 1e-3;

  Trainer trainer(cfg, LossConfig{}, PromptPolicy{}, opts);
  double first = 0.0;
  double last = 0.0;
  for (int step = 0; step < 500; ++step) {
    Rng rng(derive_seed(cfg.seed, 1 + step));
    std::vector<const Sample*> batch;
    for (int b = 0; b < opts.batch_size; ++b) {
      batch.push_back(&corpora[0].samples[rng.uniform_int(
          0, corpora[0].samples.size() - 1)]);
    }
    const StepReport report = trainer.step(batch, rng);
    if (step == 0) first = report.total;
    last = report.total;
  }
  CHECK(last < first);
  CHECK(last < 0.5 * first);  // should descend decisively, not marginally
}

TEST_CASE("single-sample overfit reaches IoU >= 0.95 in 500 steps") {
  PredictorConfig cfg;  // desk default: 64x64
  cfg.seed = 17;
  const std::vector<Sample> corpus = tiny_corpus(1, 1234, 64);
  const Sample* occluded = nullptr;
  for (const auto& s : corpus) {
    if (s.instance.is_occluded) occluded = &s;
  }
  REQUIRE(occluded != nullptr);

  TrainOptions opts;
  opts.batch_size = 1;
  opts.learning_rate = 3e-3;
  Trainer trainer(cfg, LossConfig{}, PromptPolicy{PromptMode::amodal, 0.5},
                  opts);
  const PromptedExample ex{occluded, occluded->instance.amodal_box};
  for (int step = 0; step < 500; ++step) trainer.step({ex});

  const PromptedPrediction pred =
      trainer.model().predict(occluded->image, occluded->instance.amodal_box);
  const double iou = mask_iou(threshold_logits(pred.mask_logits),
                              occluded->instance.amodal_mask);
  CHECK(iou >= 0.95);
}
