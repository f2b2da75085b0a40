#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "amodal/pipeline.hpp"
#include "amodal/rng.hpp"

using namespace amodal;

namespace {

PredictorConfig tiny_config() {
  PredictorConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 8;
  cfg.embed_dim = 32;
  cfg.heads = 2;
  cfg.encoder_depth = 1;
  cfg.decoder_depth = 1;
  cfg.seed = 9;
  return cfg;
}

Image scene_image() {
  Image image(32, 32, 0.1f);
  for (int r = 8; r < 20; ++r) {
    for (int c = 10; c < 26; ++c) image.at(r, c) = 0.75f;
  }
  return image;
}

}  // namespace

TEST_CASE("refine_confidence arithmetic") {
  CHECK(refine_confidence(0.8, 0.9) == doctest::Approx(0.72).epsilon(1e-15));
  CHECK(refine_confidence(1.0, 0.37) == 0.37);
  CHECK(refine_confidence(0.0, 0.9) == 0.0);
  CHECK(refine_confidence(0.9, 0.0) == 0.0);
  CHECK_THROWS(refine_confidence(1.2, 0.5));
  CHECK_THROWS(refine_confidence(0.5, -0.1));
}

TEST_CASE("refined score is monotone and rescale-invariant in ranking") {
  Rng rng(2);
  // monotone in front score for fixed estimate
  for (int trial = 0; trial < 100; ++trial) {
    const double iou = rng.uniform();
    double a = rng.uniform();
    double b = rng.uniform();
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    CHECK(refine_confidence(a, iou) <= refine_confidence(b, iou));
    if (iou > 0.0) CHECK(refine_confidence(a, iou) < refine_confidence(b, iou));
  }

  // argsort of refined scores unchanged under positive rescaling
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> front(20), est(20);
    for (auto& x : front) x = rng.uniform();
    for (auto& x : est) x = rng.uniform();
    const double c = rng.uniform(0.05, 1.0);

    auto order_of = [&](double scale) {
      std::vector<int> idx(front.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
        return refine_confidence(front[x] * scale, est[x]) >
               refine_confidence(front[y] * scale, est[y]);
      });
      return idx;
    };
    CHECK(order_of(1.0) == order_of(c));
  }

  // refined never exceeds min(front, 1)
  for (int trial = 0; trial < 100; ++trial) {
    const double f = rng.uniform();
    const double e = rng.uniform();
    CHECK(refine_confidence(f, e) <= std::min(f, 1.0) + 1e-15);
  }
}

TEST_CASE("detection ingest validates records") {
  const std::string good = R"([
    {"image_id": 1, "bbox": [1, 2, 5, 6], "score": 0.5},
    {"image_id": 1, "bbox": [0, 0, 3, 3], "score": 0.9, "category": "dog",
     "box_kind": "amodal"},
    {"image_id": 2, "bbox": [4, 4, 2, 2], "score": 1.0}
  ])";
  const auto records = detections_from_json(good, "test");
  REQUIRE(records.size() == 3);
  CHECK(records[0].box.kind == BoxKind::modal);
  CHECK(records[1].box.kind == BoxKind::amodal);
  CHECK(records[1].category == "dog");

  // line-delimited form
  const std::string jsonl =
      "{\"image_id\": 1, \"bbox\": [0,0,2,2], \"score\": 0.25}\n"
      "{\"image_id\": 1, \"bbox\": [1,1,2,2], \"score\": 0.75}\n";
  CHECK(detections_from_json(jsonl, "test").size() == 2);

  // score out of range carries the record index
  const std::string bad = R"([
    {"image_id": 1, "bbox": [0, 0, 2, 2], "score": 0.5},
    {"image_id": 1, "bbox": [0, 0, 2, 2], "score": 1.2}
  ])";
  try {
    detections_from_json(bad, "test");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("record 1") != std::string::npos);
  }

  CHECK_THROWS_AS(detections_from_json("[{\"image_id\": 1}]", "t"),
                  SchemaError);
}

TEST_CASE("clamp_detections clamps against manifest dims and counts") {
  DatasetManifest manifest;
  manifest.images.push_back(ImageInfo{1, 32, 32, ""});
  std::vector<DetectionRecord> dets(2);
  dets[0].image_id = 1;
  dets[0].box = BoundingBox{-4.0, 0.0, 40.0, 10.0, BoxKind::modal};
  dets[1].image_id = 1;
  dets[1].box = BoundingBox{2.0, 2.0, 5.0, 5.0, BoxKind::modal};
  CHECK(clamp_detections(dets, manifest) == 1);
  CHECK(dets[0].box.x == 0.0);
  CHECK(dets[0].box.w == 32.0);
  CHECK(dets[1].box.w == 5.0);

  dets[1].image_id = 7;
  CHECK_THROWS_AS(clamp_detections(dets, manifest), SchemaError);
}

TEST_CASE("run_inference contracts") {
  const Model model(tiny_config());
  const Image image = scene_image();

  SUBCASE("empty detections give empty results") {
    CHECK(run_inference(image, {}, model).empty());
  }

  SUBCASE("count, order, refinement identity, determinism") {
    std::vector<DetectionRecord> dets(3);
    dets[0].image_id = 1;
    dets[0].box = BoundingBox{10, 8, 16, 12, BoxKind::modal};
    dets[0].score_front = 1.0;
    dets[1].image_id = 1;
    dets[1].box = BoundingBox{2, 2, 10, 10, BoxKind::modal};
    dets[1].score_front = 0.5;
    dets[2].image_id = 1;
    dets[2].box = BoundingBox{12, 10, 10, 8, BoxKind::amodal};
    dets[2].score_front = 0.5;

    const auto results = run_inference(image, dets, model);
    REQUIRE(results.size() == dets.size());
    // front score 1.0: refined equals the IoU estimate
    CHECK(results[0].score_refined == results[0].iou_estimate);
    // order preserved
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].detection.score_front == dets[i].score_front);
    }
    // deterministic
    const auto again = run_inference(image, dets, model);
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(results[i].score_refined == again[i].score_refined);
      CHECK(results[i].amodal_mask == again[i].amodal_mask);
    }
    // sorted view is stable for ties
    std::vector<AmodalResult> tied(2);
    tied[0].score_refined = 0.5;
    tied[1].score_refined = 0.5;
    const auto order = score_descending_order(tied);
    CHECK(order == std::vector<std::size_t>{0, 1});
  }

  SUBCASE("degenerate boxes are flagged, not fatal") {
    std::vector<DetectionRecord> dets(2);
    dets[0].image_id = 1;
    dets[0].box = BoundingBox{100, 100, 5, 5, BoxKind::modal};  // outside
    dets[0].score_front = 0.9;
    dets[1].image_id = 1;
    dets[1].box = BoundingBox{10, 8, 16, 12, BoxKind::modal};
    dets[1].score_front = 0.9;

    const auto results = run_inference(image, dets, model);
    REQUIRE(results.size() == 2);
    CHECK(results[0].degenerate);
    CHECK(mask_area(results[0].amodal_mask) == 0);
    CHECK(results[0].score_refined == 0.0);
    CHECK_FALSE(results[1].degenerate);
  }

  SUBCASE("images larger than the model grid are resized through") {
    const Image big = resize_nearest(image, 64, 64);
    std::vector<DetectionRecord> dets(1);
    dets[0].image_id = 1;
    dets[0].box = BoundingBox{20, 16, 32, 24, BoxKind::modal};
    dets[0].score_front = 0.8;
    const auto results = run_inference(big, dets, model);
    REQUIRE(results.size() == 1);
    CHECK(results[0].amodal_mask.height() == 64);
    CHECK(results[0].amodal_mask.width() == 64);
  }
}

TEST_CASE("result files round-trip into evaluator detections") {
  const Model model(tiny_config());
  const Image image = scene_image();
  std::vector<DetectionRecord> dets(2);
  dets[0].image_id = 5;
  dets[0].box = BoundingBox{10, 8, 16, 12, BoxKind::modal};
  dets[0].score_front = 0.7;
  dets[0].category = "rectangle";
  dets[1].image_id = 5;
  dets[1].box = BoundingBox{2, 2, 12, 12, BoxKind::amodal};
  dets[1].score_front = 0.4;

  const auto results = run_inference(image, dets, model);
  const std::string path = "test_pipeline_results.json";
  write_results(results, path);
  const auto loaded = load_results_as_detections(path);
  REQUIRE(loaded.size() == results.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].image_id == 5);
    CHECK(loaded[i].mask == results[i].amodal_mask);
    CHECK(loaded[i].score == results[i].score_refined);
  }
  CHECK(loaded[0].category == "rectangle");
  std::remove(path.c_str());
}
