#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/instance.hpp"
#include "amodal/losses.hpp"
#include "amodal/nn.hpp"

namespace amodal {

enum class ModelPart { encoder, prompt_encoder, decoder };

std::string to_string(ModelPart part);
ModelPart model_part_from_string(const std::string& s);

struct PredictorConfig {
  int image_size = 64;
  int patch_size = 8;
  int embed_dim = 64;
  int heads = 4;
  int encoder_depth = 1;
  int decoder_depth = 2;  // dual cross-attention blocks
  std::set<ModelPart> trainable_parts = {ModelPart::decoder};
  std::uint64_t seed = 0;

  int grid() const { return image_size / patch_size; }
  int tokens() const { return grid() * grid(); }

  /// Throws std::invalid_argument when the configuration is unusable
  /// (image size not divisible by patch size, odd embed dim, ...).
  void validate() const;

  bool operator==(const PredictorConfig&) const = default;
};

enum class PromptMode { modal, amodal, random };

std::string to_string(PromptMode mode);
PromptMode prompt_mode_from_string(const std::string& s);

struct PromptPolicy {
  PromptMode mode = PromptMode::random;
  double random_modal_probability = 0.5;
};

class Rng;

/// Box prompt selection: modal/amodal return that box; random draws the
/// modal box with the configured probability.
BoundingBox sample_prompt(const AmodalInstance& inst,
                          const PromptPolicy& policy, Rng& rng);

/// Multi-dataset sampling weights, proportional to log dataset size.
struct MixtureSpec {
  std::vector<std::int64_t> sizes;

  static MixtureSpec from_sizes(std::vector<std::int64_t> sizes);

  /// w_i = log(size_i) / sum_j log(size_j).
  std::vector<double> weights() const;
};

int sample_dataset(const MixtureSpec& mix, Rng& rng);

/// Raw mask logits at image resolution.
struct LogitGrid {
  int height = 0;
  int width = 0;
  std::vector<float> values;
};

struct PromptedPrediction {
  LogitGrid mask_logits;
  double iou_estimate = 0.0;  // in (0, 1), sigmoid output
};

/// Logits > threshold (0 corresponds to probability 0.5).
BinaryMask threshold_logits(const LogitGrid& logits, float threshold = 0.0f);

MaskProbabilities logit_probabilities(const LogitGrid& logits);

// ---------------------------------------------------------------------------
// Predictor: frozen-by-default image encoder and box-prompt encoder plus a
// fine-tunable mask decoder with mask and IoU heads.
// ---------------------------------------------------------------------------

template <class S>
class ModelT {
 public:
  explicit ModelT(const PredictorConfig& cfg);

  const PredictorConfig& config() const { return cfg_; }

  struct ForwardCache;

  struct Output {
    nn::Mat<S> logits;  // tokens x patch_size^2, patch layout
    S iou_pre = S(0);   // pre-sigmoid IoU head output
    S rho = S(0);       // sigmoid(iou_pre)
  };

  /// patches: tokens x patch_size^2 (see image_to_patches);
  /// corners: normalized [x1, y1, x2, y2] in [0, 1].
  Output forward(const nn::Mat<S>& patches,
                 const std::array<double, 4>& corners,
                 ForwardCache& cache) const;

  /// Accumulates parameter gradients into `grad`. When `encoder_grad`
  /// is false the backward pass stops at the encoder output.
  void backward(const nn::Mat<S>& d_logits, S d_rho, const ForwardCache& cache,
                ModelT& grad, bool encoder_grad) const;

  /// Full-resolution prediction for one image and box prompt.
  /// Requires image dimensions == config image_size (resize upstream)
  /// and a box with positive area after clamping.
  PromptedPrediction predict(const Image& image, const BoundingBox& box) const;

  nn::Mat<S> image_to_patches(const Image& image) const;
  LogitGrid patch_logits_to_grid(const nn::Mat<S>& logits) const;
  nn::Mat<S> mask_to_patches(const BinaryMask& mask) const;
  std::array<double, 4> normalized_corners(const BoundingBox& box) const;

  /// Visits every parameter tensor in a fixed order:
  /// f(name, part, matrix&).
  template <class F>
  void visit(F&& f);

  void set_zero();

  /// FNV-1a over the raw bytes of every tensor of the part.
  std::uint64_t checksum(ModelPart part);

  std::int64_t parameter_count();

 private:
  PredictorConfig cfg_;

  nn::Linear<S> patch_embed_;                      // encoder
  nn::Mat<S> pos_embed_;                           // encoder
  std::vector<nn::EncoderBlock<S>> encoder_;       // encoder
  nn::Mat<S> prompt_freq_;                         // prompt encoder, (d/2) x 2
  nn::Mat<S> corner_embed_;                        // prompt encoder, 2 x d
  nn::Mat<S> query_embed_;                         // decoder, 2 x d (iou, mask)
  std::vector<nn::DecoderBlock<S>> decoder_;       // decoder
  nn::LayerNorm<S> final_ln_img_;                  // decoder
  nn::LayerNorm<S> final_ln_q_;                    // decoder
  nn::Mlp<S> mask_gate_;                           // decoder
  nn::Linear<S> mask_head_;                        // decoder
  nn::Mlp<S> iou_head_;                            // decoder
};

template <class S>
struct ModelT<S>::ForwardCache {
  nn::Mat<S> patches;
  typename nn::Linear<S>::Cache patch_c;
  std::vector<typename nn::EncoderBlock<S>::Cache> enc_c;
  std::vector<nn::Mat<S>> enc_in;  // inputs kept only for shape bookkeeping
  nn::Mat<S> img_enc;

  std::array<double, 4> corners{};
  nn::Mat<S> angles;  // 2 x d/2
  nn::Mat<S> prompt_tokens;

  nn::Mat<S> queries0;
  std::vector<typename nn::DecoderBlock<S>::Cache> dec_c;
  nn::Mat<S> q_final, img_final;

  typename nn::LayerNorm<S>::Cache ln_img_c, ln_q_c;
  nn::Mat<S> img_ln, q_ln;
  typename nn::Mlp<S>::Cache gate_c;
  nn::Mat<S> gate;  // 1 x d
  typename nn::Linear<S>::Cache mask_head_c;
  typename nn::Mlp<S>::Cache iou_c;
  S iou_pre = S(0);
  S rho = S(0);
};

template <class S>
template <class F>
void ModelT<S>::visit(F&& f) {
  auto enc = [&](const std::string& n, nn::Mat<S>& m) {
    f(n, ModelPart::encoder, m);
  };
  auto prm = [&](const std::string& n, nn::Mat<S>& m) {
    f(n, ModelPart::prompt_encoder, m);
  };
  auto dec = [&](const std::string& n, nn::Mat<S>& m) {
    f(n, ModelPart::decoder, m);
  };
  patch_embed_.visit("encoder.patch_embed", enc);
  enc("encoder.pos_embed", pos_embed_);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    encoder_[i].visit("encoder.block" + std::to_string(i), enc);
  }
  prm("prompt.freq", prompt_freq_);
  prm("prompt.corner_embed", corner_embed_);
  dec("decoder.query_embed", query_embed_);
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    decoder_[i].visit("decoder.block" + std::to_string(i), dec);
  }
  final_ln_img_.visit("decoder.final_ln_img", dec);
  final_ln_q_.visit("decoder.final_ln_q", dec);
  mask_gate_.visit("decoder.mask_gate", dec);
  mask_head_.visit("decoder.mask_head", dec);
  iou_head_.visit("decoder.iou_head", dec);
}

using Model = ModelT<float>;

extern template class ModelT<float>;
extern template class ModelT<double>;

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct TensorBlob {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;
};

/// Self-describing training snapshot: configuration, seed, iteration
/// count, named parameter blobs and (when present) optimizer state.
struct Checkpoint {
  PredictorConfig config;
  LossConfig loss;
  PromptPolicy policy;
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;
  std::vector<TensorBlob> tensors;
  std::vector<TensorBlob> optimizer;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint model_to_checkpoint(Model& model);
/// Throws SchemaError when tensor names or shapes disagree with the
/// checkpoint's own config.
Model model_from_checkpoint(const Checkpoint& ck);

}  // namespace amodal
