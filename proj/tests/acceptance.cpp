// Acceptance suite: runs every release criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exits nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "amodal/datafilter.hpp"
#include "amodal/datasynth.hpp"
#include "amodal/eval.hpp"
#include "amodal/experiments.hpp"
#include "amodal/losses.hpp"
#include "amodal/pipeline.hpp"
#include "amodal/train.hpp"

using namespace amodal;

namespace {

struct Criterion {
  int number;
  std::string name;
  std::function<bool(std::string&)> body;
};

BinaryMask rect_mask(int h, int w, int r0, int c0, int rh, int rw) {
  BinaryMask m(h, w);
  for (int r = std::max(0, r0); r < std::min(h, r0 + rh); ++r) {
    for (int c = std::max(0, c0); c < std::min(w, c0 + rw); ++c) {
      m.set(r, c, true);
    }
  }
  return m;
}

BinaryMask random_mask(int h, int w, Rng& rng, double density = 0.5) {
  BinaryMask m(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) m.set(r, c, rng.bernoulli(density));
  }
  return m;
}

MaskProbabilities random_probs(int h, int w, Rng& rng) {
  MaskProbabilities p(h, w);
  for (auto& v : p.values) v = rng.uniform(0.05, 0.95);
  return p;
}

// --- criterion 1: loss golden values + gradients ---------------------------

bool criterion_losses(std::string& detail) {
  bool ok = true;
  std::ostringstream why;

  // analytic golden values, |error| < 1e-9
  {
    const BinaryMask gt = rect_mask(4, 4, 0, 0, 2, 2);
    MaskProbabilities hard(4, 4);
    for (std::size_t i = 0; i < hard.values.size(); ++i) {
      hard.values[i] = gt.pixels()[i] ? 1.0 : 0.0;
    }
    ok &= std::abs(dice_loss(hard, gt) - 0.0) < 1e-9;

    const BinaryMask gt_small = rect_mask(4, 4, 0, 0, 1, 4);
    MaskProbabilities big(4, 4);
    const BinaryMask pred_big = rect_mask(4, 4, 0, 0, 2, 4);
    for (std::size_t i = 0; i < big.values.size(); ++i) {
      big.values[i] = pred_big.pixels()[i] ? 1.0 : 0.0;
    }
    ok &= std::abs(dice_loss(big, gt_small) - 1.0 / 3.0) < 1e-9;

    BinaryMask one(1, 1);
    one.set(0, 0, true);
    MaskProbabilities half(1, 1, 0.5);
    ok &= std::abs(focal_loss(half, one, 2.0) - 0.25 * std::log(2.0)) < 1e-9;
    ok &= std::abs(focal_loss(half, one, 0.0) - std::log(2.0)) < 1e-9;

    // epsilon-perturbed perfect prediction, < 1e-6
    MaskProbabilities near(4, 4);
    for (std::size_t i = 0; i < near.values.size(); ++i) {
      near.values[i] = gt.pixels()[i] ? 1.0 - 1e-7 : 1e-7;
    }
    ok &= focal_loss(near, gt, 2.0) < 1e-6;

    ok &= std::abs(iou_loss(0.7, rect_mask(4, 4, 0, 0, 2, 4),
                            rect_mask(4, 4, 1, 0, 2, 4)) -
                   (0.7 - 1.0 / 3.0)) < 1e-9;
    if (!ok) why << "golden value mismatch; ";
  }

  // gradients vs central differences, >=100 random 8x8 cases, rel 1e-4
  {
    Rng rng(1001);
    const double h = 1e-6;
    int cases = 0;
    bool grad_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
      MaskProbabilities pred = random_probs(8, 8, rng);
      const BinaryMask gt = random_mask(8, 8, rng);
      const auto dgrad = dice_loss_grad(pred, gt);
      const auto fgrad = focal_loss_grad(pred, gt, 2.0);
      for (int probe = 0; probe < 8; ++probe) {
        const auto i = static_cast<std::size_t>(rng.uniform_int(0, 63));
        const double saved = pred.values[i];
        pred.values[i] = saved + h;
        const double dh = dice_loss(pred, gt);
        const double fh = focal_loss(pred, gt, 2.0);
        pred.values[i] = saved - h;
        const double dl = dice_loss(pred, gt);
        const double fl = focal_loss(pred, gt, 2.0);
        pred.values[i] = saved;
        const double fd_d = (dh - dl) / (2.0 * h);
        const double fd_f = (fh - fl) / (2.0 * h);
        grad_ok &= std::abs(dgrad[i] - fd_d) <=
                   1e-4 * std::max({std::abs(dgrad[i]), std::abs(fd_d), 1e-8});
        grad_ok &= std::abs(fgrad[i] - fd_f) <=
                   1e-4 * std::max({std::abs(fgrad[i]), std::abs(fd_f), 1e-8});
      }
      ++cases;
    }
    ok &= grad_ok && cases >= 100;
    if (!grad_ok) why << "gradient check failed; ";
  }
  detail = why.str();
  return ok;
}

// --- criterion 2: loss composition -------------------------------------------

bool criterion_composition(std::string& detail) {
  Rng rng(1002);
  for (int trial = 0; trial < 200; ++trial) {
    const MaskProbabilities pred = random_probs(8, 8, rng);
    const BinaryMask gt = random_mask(8, 8, rng);
    const double rho = rng.uniform();
    LossConfig cfg;  // lambda 0.05
    const LossBreakdown out = total_loss(pred, gt, rho, cfg);
    const double recomposed =
        out.dice + out.focal + 0.05 * out.iou;
    if (std::abs(out.total - recomposed) >= 1e-12) {
      detail = "composition deviates at trial " + std::to_string(trial);
      return false;
    }
  }
  return true;
}

// --- criterion 3: oracle equivalence ----------------------------------------

bool criterion_oracle(std::string& detail) {
  Rng rng(1003);
  const EvalConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<EvalGroundTruth> gts;
    std::vector<EvalDetection> dets;
    const int images = 1 + static_cast<int>(rng.uniform_int(0, 4));
    std::int64_t gt_id = 1;
    for (int img = 1; img <= images; ++img) {
      const int n_gt = static_cast<int>(rng.uniform_int(0, 5));
      std::vector<BinaryMask> masks;
      for (int g = 0; g < n_gt; ++g) {
        const BinaryMask m = rect_mask(
            16, 16, static_cast<int>(rng.uniform_int(0, 10)),
            static_cast<int>(rng.uniform_int(0, 10)),
            2 + static_cast<int>(rng.uniform_int(0, 5)),
            2 + static_cast<int>(rng.uniform_int(0, 5)));
        if (mask_area(m) == 0) continue;
        masks.push_back(m);
        gts.push_back(EvalGroundTruth{gt_id++, img, m, {}});
      }
      const int n_det = static_cast<int>(rng.uniform_int(0, 5));
      for (int d = 0; d < n_det; ++d) {
        BinaryMask m;
        if (!masks.empty() && rng.bernoulli(0.6)) {
          const BinaryMask& base = masks[rng.uniform_int(0, masks.size() - 1)];
          m = BinaryMask(16, 16);
          const int dr = static_cast<int>(rng.uniform_int(-2, 2));
          const int dc = static_cast<int>(rng.uniform_int(-2, 2));
          for (int r = 0; r < 16; ++r) {
            for (int c = 0; c < 16; ++c) {
              const int sr = r - dr, sc = c - dc;
              if (sr >= 0 && sr < 16 && sc >= 0 && sc < 16 && base.at(sr, sc)) {
                m.set(r, c, true);
              }
            }
          }
        } else {
          m = rect_mask(16, 16, static_cast<int>(rng.uniform_int(0, 10)),
                        static_cast<int>(rng.uniform_int(0, 10)),
                        2 + static_cast<int>(rng.uniform_int(0, 5)),
                        2 + static_cast<int>(rng.uniform_int(0, 5)));
        }
        if (mask_area(m) == 0) continue;
        dets.push_back(EvalDetection{img, m, rng.uniform(), {}});
      }
    }
    const EvalReport a = average_precision(dets, gts, cfg);
    const EvalReport b = oracle_ap(dets, gts, cfg);
    if (a.ap.has_value() != b.ap.has_value()) {
      detail = "null-ness disagrees at trial " + std::to_string(trial);
      return false;
    }
    if (a.ap) {
      const bool equal = std::abs(*a.ap - *b.ap) < 1e-9 &&
                         std::abs(*a.ap50 - *b.ap50) < 1e-9 &&
                         std::abs(*a.ap75 - *b.ap75) < 1e-9 &&
                         std::abs(*a.ar - *b.ar) < 1e-9;
      if (!equal) {
        detail = "mismatch at trial " + std::to_string(trial);
        return false;
      }
    }
  }

  // hand-computable case: exact AP50/AP75
  const BinaryMask gt = rect_mask(16, 16, 0, 0, 2, 5);
  const BinaryMask det = rect_mask(16, 16, 0, 0, 2, 3);  // IoU 0.6
  const std::vector<EvalGroundTruth> gts = {{1, 1, gt, {}}};
  const std::vector<EvalDetection> dets = {{1, det, 0.9, {}}};
  const EvalReport r = average_precision(dets, gts, cfg);
  if (!(r.ap50 && *r.ap50 == 100.0 && r.ap75 && *r.ap75 == 0.0)) {
    detail = "hand case: AP50/AP75 not exact";
    return false;
  }
  return true;
}

// --- criterion 4: confidence refinement --------------------------------------

bool criterion_refinement(std::string& detail) {
  Rng rng(1004);
  for (int trial = 0; trial < 200; ++trial) {
    const double f = rng.uniform();
    const double e = rng.uniform();
    if (refine_confidence(f, e) != f * e) {
      detail = "refined score is not the exact product";
      return false;
    }
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 30));
    std::vector<double> front(n), est(n);
    for (auto& x : front) x = rng.uniform();
    for (auto& x : est) x = rng.uniform();
    const double c = rng.uniform(0.01, 2.0);
    auto order_of = [&](double scale) {
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return front[a] * scale * est[a] > front[b] * scale * est[b];
      });
      return idx;
    };
    if (order_of(1.0) != order_of(c)) {
      detail = "argsort changed under rescale at trial " +
               std::to_string(trial);
      return false;
    }
  }
  return true;
}

// --- criterion 5: synthesis invariants ---------------------------------------

bool criterion_synthesis(std::string& detail) {
  SynthesisConfig cfg;
  cfg.seed = 1005;
  const int pairs = 1000;
  const SynthesisResult result = synthesize_pairs(pairs, cfg);
  std::ostringstream why;
  bool ok = true;

  if (result.report.produced_pairs != pairs) {
    why << "produced " << result.report.produced_pairs << "/" << pairs << "; ";
    ok = false;
  }

  // POI exactly 50
  const CorpusStats stats = compute_stats(result.manifest);
  if (stats.poi != 50.0) {
    why << "POI " << stats.poi << " != 50; ";
    ok = false;
  }

  // modal subset of amodal, everywhere
  for (const auto& ann : result.manifest.annotations) {
    if (!mask_contains(ann.amodal_mask, ann.modal_mask)) {
      why << "modal not within amodal at annotation " << ann.id << "; ";
      ok = false;
      break;
    }
  }

  // achieved ROR within +-0.02 of requested for all emitted samples
  double ror_sum = 0.0;
  double worst = 0.0;
  for (const auto& rec : result.report.samples) {
    const double err = std::abs(rec.achieved_ror - rec.requested_ror);
    worst = std::max(worst, err);
    ror_sum += rec.achieved_ror;
  }
  if (worst > cfg.placement_tolerance + 1e-12) {
    why << "worst ROR error " << worst << "; ";
    ok = false;
  }

  // batch mean ROR in [0.30, 0.40]
  const double mean_ror = ror_sum / result.report.samples.size();
  if (!(mean_ror >= 0.30 && mean_ror <= 0.40)) {
    why << "mean ROR " << mean_ror << " outside [0.30,0.40]; ";
    ok = false;
  }

  // aspect-ratio preservation: the rescaled shape's rasterized box may
  // deviate from the exactly-scaled continuous box by at most one pixel
  // per side
  Rng rng(1006);
  for (int i = 0; i < 200; ++i) {
    const CompleteObject occ = make_shape_object(cfg, rng, i);
    const CompleteObject target = make_shape_object(cfg, rng, 5000 + i);
    CompleteObject scaled;
    try {
      scaled = normalize_size(occ, target, cfg.scale_jitter_min,
                              cfg.scale_jitter_max, rng);
    } catch (const std::invalid_argument&) {
      continue;
    }
    const auto [cw, ch] = scaled.shape->continuous_box_dims();
    const BoundingBox after = tight_bbox(scaled.mask);
    if (std::abs(after.w - cw) / 2.0 > 1.0 + 1e-9 ||
        std::abs(after.h - ch) / 2.0 > 1.0 + 1e-9) {
      why << "aspect deviation beyond 1px per side at case " << i << "; ";
      ok = false;
      break;
    }
  }

  detail = why.str();
  if (ok) {
    std::ostringstream extra;
    extra << "mean ROR " << mean_ror << ", worst error " << worst;
    detail = extra.str();
  }
  return ok;
}

// --- criterion 6: filter thresholds -----------------------------------------

bool criterion_filters(std::string& detail) {
  auto with_area = [](int area, int side) {
    BinaryMask m(side, side);
    int placed = 0;
    for (int r = 0; r < side && placed < area; ++r) {
      for (int c = 0; c < side && placed < area; ++c) {
        m.set(r, c, true);
        ++placed;
      }
    }
    return m;
  };
  auto inst = [&](int modal_area, int amodal_area, int side) {
    return make_instance(1, 1, with_area(modal_area, side),
                         with_area(amodal_area, side));
  };

  bool ok = true;
  std::ostringstream why;
  // visible ratio 0.05 -> drop; exactly 0.10 -> keep
  if (filter_visibility(inst(5, 100, 20), 0.10).keep) {
    why << "0.05 visibility kept; ";
    ok = false;
  }
  if (!filter_visibility(inst(10, 100, 20), 0.10).keep) {
    why << "0.10 visibility dropped; ";
    ok = false;
  }
  // coverage 0.95 -> drop; exactly 0.90 -> keep (10x10 image)
  if (filter_coverage(inst(95, 95, 10), 10, 10, 0.90).keep) {
    why << "0.95 coverage kept; ";
    ok = false;
  }
  if (!filter_coverage(inst(90, 90, 10), 10, 10, 0.90).keep) {
    why << "0.90 coverage dropped; ";
    ok = false;
  }

  // order independence of the kept set under random permutations
  Rng rng(1007);
  DatasetManifest manifest;
  manifest.images.push_back(ImageInfo{1, 20, 20, ""});
  const std::vector<std::string> cats = {"dog", "wall", "cat"};
  for (int i = 0; i < 150; ++i) {
    const int amodal = 20 + static_cast<int>(rng.uniform_int(0, 330));
    const int modal = 1 + static_cast<int>(rng.uniform_int(0, amodal - 1));
    AmodalInstance in = make_instance(
        i, 1, with_area(modal, 20), with_area(amodal, 20),
        cats[rng.uniform_int(0, cats.size() - 1)]);
    manifest.annotations.push_back(std::move(in));
  }
  FilterConfig fc;
  fc.stuff_categories = {"wall"};
  const auto [canonical, report] = filter_manifest(manifest, fc);
  std::vector<std::int64_t> canonical_ids;
  for (const auto& a : canonical.annotations) canonical_ids.push_back(a.id);
  if (report.kept + report.dropped !=
      static_cast<std::int64_t>(manifest.annotations.size())) {
    why << "kept+dropped != input; ";
    ok = false;
  }

  const ImageInfo& info = manifest.images[0];
  for (int perm = 0; perm < 20; ++perm) {
    std::vector<int> order = {0, 1, 2, 3};
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    }
    std::vector<std::int64_t> ids;
    for (const auto& a : manifest.annotations) {
      bool keep = true;
      for (const int which : order) {
        FilterDecision d;
        switch (which) {
          case 0: d = filter_visibility(a, fc.min_visible_ratio); break;
          case 1:
            d = filter_coverage(a, info.width, info.height,
                                fc.max_image_coverage);
            break;
          case 2: d = filter_class(a, fc.stuff_categories); break;
          default: d = filter_walt_occlusion(a, fc.max_occlusion); break;
        }
        if (!d.keep) {
          keep = false;
          break;
        }
      }
      if (keep) ids.push_back(a.id);
    }
    if (ids != canonical_ids) {
      why << "kept set depends on filter order; ";
      ok = false;
      break;
    }
  }
  detail = why.str();
  return ok;
}

// --- criterion 7: samplers -----------------------------------------------------

bool criterion_samplers(std::string& detail) {
  Rng rng(1008);
  const MixtureSpec mix = MixtureSpec::from_sizes({10, 100});
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    if (sample_dataset(mix, rng) == 0) ++first;
  }
  const double freq = first / static_cast<double>(draws);
  std::ostringstream why;
  bool ok = true;
  if (std::abs(freq - 1.0 / 3.0) > 0.01) {
    why << "mixture frequency " << freq << "; ";
    ok = false;
  }

  // prompt sampler: 10k draws, modal fraction 0.5 +- 0.02
  const BinaryMask amodal = rect_mask(16, 16, 2, 2, 10, 10);
  const BinaryMask modal = rect_mask(16, 16, 2, 2, 5, 10);
  const AmodalInstance inst = make_instance(1, 1, modal, amodal);
  int modal_count = 0;
  for (int i = 0; i < 10000; ++i) {
    if (sample_prompt(inst, PromptPolicy{}, rng).kind == BoxKind::modal) {
      ++modal_count;
    }
  }
  const double fraction = modal_count / 10000.0;
  if (std::abs(fraction - 0.5) > 0.02) {
    why << "modal fraction " << fraction << "; ";
    ok = false;
  }
  detail = why.str().empty()
               ? "mixture " + std::to_string(freq) + ", prompts " +
                     std::to_string(fraction)
               : why.str();
  return ok;
}

// --- criterion 8: freeze contract ----------------------------------------------

bool criterion_freeze(std::string& detail) {
  PredictorConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.embed_dim = 32;
  cfg.heads = 2;
  cfg.encoder_depth = 1;
  cfg.decoder_depth = 1;
  cfg.seed = 1009;  // trainable_parts defaults to {decoder}

  SynthesisConfig sc;
  sc.canvas = 32;
  sc.seed = 1010;
  sc.min_long_side = 10;
  sc.max_long_side = 18;
  const SynthesisResult synth = synthesize_pairs(8, sc);
  const std::vector<Sample> samples = samples_from_synthesis(synth);

  TrainOptions opts;
  opts.batch_size = 8;
  opts.learning_rate = 1e-3;
  Trainer trainer(cfg, LossConfig{}, PromptPolicy{}, opts);
  const std::uint64_t enc0 = trainer.model().checksum(ModelPart::encoder);
  const std::uint64_t prm0 =
      trainer.model().checksum(ModelPart::prompt_encoder);

  Rng rng(4);
  for (int step = 0; step < 100; ++step) {
    std::vector<const Sample*> batch;
    for (int b = 0; b < opts.batch_size; ++b) {
      batch.push_back(&samples[rng.uniform_int(0, samples.size() - 1)]);
    }
    trainer.step(batch, rng);
  }
  const bool ok = trainer.model().checksum(ModelPart::encoder) == enc0 &&
                  trainer.model().checksum(ModelPart::prompt_encoder) == prm0;
  if (!ok) detail = "frozen parameters changed";
  return ok;
}

// --- criterion 9: toy learning signal --------------------------------------------

bool criterion_learning(std::string& detail) {
  ExperimentOptions opts;  // 1000 train pairs, 100 eval pairs
  const LearningResult r = run_learning_experiment(opts, &std::cerr);
  std::ostringstream why;
  why << "model IoU " << r.model_iou << ", baseline " << r.baseline_iou
      << " over " << r.evaluated << " occluded held-out instances";
  detail = why.str();
  return r.model_iou >= 0.80 && r.model_iou >= r.baseline_iou + 0.10;
}

// --- criterion 10: ablation directions --------------------------------------------

bool criterion_ablations(std::string& detail) {
  std::ostringstream why;
  bool ok = true;

  // (a) constructed IoU-refinement case
  const IouRefineResult refine = ablate_iou_refine();
  if (!refine.never_worse || !refine.improved) {
    why << "(a) refinement AP " << refine.ap_raw << " -> "
        << refine.ap_refined << " not improved; ";
    ok = false;
  }

  // (b) prompt-type: random within 0.02 of the best single policy
  ExperimentOptions opts;
  opts.seed = 1011;
  opts.train_pairs = 384;
  opts.eval_pairs = 64;
  opts.iterations = 1200;
  const PromptAblation prompts = ablate_prompt_type(opts, &std::cerr);
  if (prompts.rows.size() != 3 || prompts.rows[0].policy != "amodal" ||
      prompts.rows[1].policy != "modal" || prompts.rows[2].policy != "random") {
    why << "(b) prompt table shape wrong; ";
    ok = false;
  }
  double random_avg = 0.0;
  double best_single = 0.0;
  for (const auto& row : prompts.rows) {
    if (row.policy == "random") {
      random_avg = row.average;
    } else {
      best_single = std::max(best_single, row.average);
    }
  }
  if (random_avg < best_single - 0.02) {
    why << "(b) random " << random_avg << " vs best single " << best_single
        << "; ";
    ok = false;
  }

  // (c) occluded-only training leaks more onto the background
  ExperimentOptions copts;
  copts.seed = 1012;
  copts.train_pairs = 384;
  copts.eval_pairs = 64;
  copts.iterations = 1200;
  const CompositionResult comp = ablate_composition(copts, &std::cerr);
  if (!(comp.leakage_occluded_only > comp.leakage_mixed)) {
    why << "(c) leakage occluded-only " << comp.leakage_occluded_only
        << " vs mixed " << comp.leakage_mixed << "; ";
    ok = false;
  }

  if (ok) {
    why << "refine " << refine.ap_raw << "->" << refine.ap_refined
        << "; random prompt avg " << random_avg << " vs " << best_single
        << "; leakage " << comp.leakage_occluded_only << " vs "
        << comp.leakage_mixed;
  }
  detail = why.str();
  return ok;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "loss golden values and finite-difference gradients",
       criterion_losses},
      {2, "total loss composition (dice + focal + 0.05 * iou)",
       criterion_composition},
      {3, "evaluator matches the brute-force oracle", criterion_oracle},
      {4, "confidence refinement product and ranking invariance",
       criterion_refinement},
      {5, "synthesis invariants over 1000 pairs", criterion_synthesis},
      {6, "filter threshold boundaries and order independence",
       criterion_filters},
      {7, "mixture and prompt sampler frequencies", criterion_samplers},
      {8, "decoder-only training freezes encoder and prompt encoder",
       criterion_freeze},
      {9, "toy amodal learning beats the visible-copy baseline",
       criterion_learning},
      {10, "ablation directions: refinement, prompts, composition",
       criterion_ablations},
  };

  int failures = 0;
  for (auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = criterion.body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const auto seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(
            std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s criterion %2d: %s (%.1fs)%s%s\n", pass ? "PASS" : "FAIL",
                criterion.number, criterion.name.c_str(), seconds,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
