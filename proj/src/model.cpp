#include "amodal/model.hpp"

#include <cmath>
#include <stdexcept>

#include "amodal/rng.hpp"

namespace amodal {

std::string to_string(ModelPart part) {
  switch (part) {
    case ModelPart::encoder:
      return "encoder";
    case ModelPart::prompt_encoder:
      return "prompt_encoder";
    case ModelPart::decoder:
      return "decoder";
  }
  return "decoder";
}

ModelPart model_part_from_string(const std::string& s) {
  if (s == "encoder") return ModelPart::encoder;
  if (s == "prompt_encoder") return ModelPart::prompt_encoder;
  if (s == "decoder") return ModelPart::decoder;
  throw std::invalid_argument("unknown model part: " + s);
}

std::string to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::modal:
      return "modal";
    case PromptMode::amodal:
      return "amodal";
    case PromptMode::random:
      return "random";
  }
  return "random";
}

PromptMode prompt_mode_from_string(const std::string& s) {
  if (s == "modal") return PromptMode::modal;
  if (s == "amodal") return PromptMode::amodal;
  if (s == "random") return PromptMode::random;
  throw std::invalid_argument("unknown prompt mode: " + s);
}

void PredictorConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0) {
    throw std::invalid_argument("image_size and patch_size must be positive");
  }
  if (image_size % patch_size != 0) {
    throw std::invalid_argument("image_size must be divisible by patch_size");
  }
  if (embed_dim < 4 || embed_dim % 4 != 0) {
    throw std::invalid_argument("embed_dim must be a positive multiple of 4");
  }
  if (heads <= 0 || embed_dim % heads != 0) {
    throw std::invalid_argument("embed_dim must be divisible by heads");
  }
  if (encoder_depth < 0) {
    throw std::invalid_argument("encoder_depth must be >= 0");
  }
  if (decoder_depth < 1) {
    throw std::invalid_argument("decoder_depth must be >= 1");
  }
}

BoundingBox sample_prompt(const AmodalInstance& inst,
                          const PromptPolicy& policy, Rng& rng) {
  bool modal = false;
  switch (policy.mode) {
    case PromptMode::modal:
      modal = true;
      break;
    case PromptMode::amodal:
      modal = false;
      break;
    case PromptMode::random:
      modal = rng.bernoulli(policy.random_modal_probability);
      break;
  }
  // A fully hidden instance has a degenerate modal box; the amodal box
  // is the only usable prompt then.
  if (modal && !inst.modal_box.degenerate()) return inst.modal_box;
  return inst.amodal_box;
}

MixtureSpec MixtureSpec::from_sizes(std::vector<std::int64_t> sizes) {
  if (sizes.empty()) {
    throw std::invalid_argument("mixture needs at least one dataset");
  }
  for (const auto s : sizes) {
    if (s <= 1) {
      throw std::invalid_argument(
          "mixture dataset sizes must be >= 2 (log must be positive)");
    }
  }
  return MixtureSpec{std::move(sizes)};
}

std::vector<double> MixtureSpec::weights() const {
  std::vector<double> w(sizes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    w[i] = std::log(static_cast<double>(sizes[i]));
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

int sample_dataset(const MixtureSpec& mix, Rng& rng) {
  const auto w = mix.weights();
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cum += w[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(w.size()) - 1;
}

BinaryMask threshold_logits(const LogitGrid& logits, float threshold) {
  BinaryMask mask(logits.height, logits.width);
  for (std::size_t i = 0; i < logits.values.size(); ++i) {
    mask.pixels()[i] = logits.values[i] > threshold ? 1 : 0;
  }
  return mask;
}

MaskProbabilities logit_probabilities(const LogitGrid& logits) {
  MaskProbabilities p(logits.height, logits.width);
  for (std::size_t i = 0; i < logits.values.size(); ++i) {
    p.values[i] = nn::sigmoid(static_cast<double>(logits.values[i]));
  }
  return p;
}

// ---------------------------------------------------------------------------
// ModelT
// ---------------------------------------------------------------------------

namespace {

template <class S>
void gaussian_fill(nn::Mat<S>& m, int rows, int cols, double std, Rng& rng) {
  m.resize(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<S>(rng.normal(0.0, std));
  }
}

}  // namespace

template <class S>
ModelT<S>::ModelT(const PredictorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, 0));
  const int d = cfg_.embed_dim;
  const int pp = cfg_.patch_size * cfg_.patch_size;
  const int g = cfg_.grid();

  patch_embed_.init(pp, d, rng);

  // Fixed sinusoidal table at init; trained only when the encoder is
  // unfrozen.
  pos_embed_.resize(cfg_.tokens(), d);
  const int quarter = d / 4;
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const int t = gy * g + gx;
      for (int i = 0; i < quarter; ++i) {
        const double freq =
            std::pow(100.0, -static_cast<double>(i) / quarter);
        pos_embed_(t, i) = static_cast<S>(std::sin(gx * freq));
        pos_embed_(t, quarter + i) = static_cast<S>(std::cos(gx * freq));
        pos_embed_(t, 2 * quarter + i) = static_cast<S>(std::sin(gy * freq));
        pos_embed_(t, 3 * quarter + i) = static_cast<S>(std::cos(gy * freq));
      }
    }
  }

  encoder_.resize(cfg_.encoder_depth);
  for (auto& block : encoder_) block.init(d, cfg_.heads, 4, rng);

  gaussian_fill(prompt_freq_, d / 2, 2, 1.0, rng);
  gaussian_fill(corner_embed_, 2, d, 1.0 / std::sqrt(static_cast<double>(d)),
                rng);
  gaussian_fill(query_embed_, 2, d, 1.0 / std::sqrt(static_cast<double>(d)),
                rng);

  decoder_.resize(cfg_.decoder_depth);
  for (auto& block : decoder_) block.init(d, cfg_.heads, 4, rng);
  final_ln_img_.init(d);
  final_ln_q_.init(d);
  mask_gate_.init(d, d, d, rng);
  mask_head_.init(d, pp, rng);
  iou_head_.init(d, d, 1, rng);
}

template <class S>
nn::Mat<S> ModelT<S>::image_to_patches(const Image& image) const {
  const int p = cfg_.patch_size;
  const int g = cfg_.grid();
  nn::Mat<S> patches(cfg_.tokens(), p * p);
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const int t = gy * g + gx;
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
          const float v = image.at(gy * p + r, gx * p + c);
          patches(t, r * p + c) = static_cast<S>((v - 0.5f) * 2.0f);
        }
      }
    }
  }
  return patches;
}

template <class S>
nn::Mat<S> ModelT<S>::mask_to_patches(const BinaryMask& mask) const {
  const int p = cfg_.patch_size;
  const int g = cfg_.grid();
  nn::Mat<S> patches(cfg_.tokens(), p * p);
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const int t = gy * g + gx;
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
          patches(t, r * p + c) =
              mask.at(gy * p + r, gx * p + c) ? S(1) : S(0);
        }
      }
    }
  }
  return patches;
}

template <class S>
LogitGrid ModelT<S>::patch_logits_to_grid(const nn::Mat<S>& logits) const {
  const int p = cfg_.patch_size;
  const int g = cfg_.grid();
  LogitGrid grid;
  grid.height = cfg_.image_size;
  grid.width = cfg_.image_size;
  grid.values.resize(static_cast<std::size_t>(cfg_.image_size) *
                     cfg_.image_size);
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < g; ++gx) {
      const int t = gy * g + gx;
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) {
          grid.values[static_cast<std::size_t>(gy * p + r) * cfg_.image_size +
                      gx * p + c] = static_cast<float>(logits(t, r * p + c));
        }
      }
    }
  }
  return grid;
}

template <class S>
std::array<double, 4> ModelT<S>::normalized_corners(
    const BoundingBox& box) const {
  const double size = static_cast<double>(cfg_.image_size);
  return {box.x / size, box.y / size, box.x2() / size, box.y2() / size};
}

template <class S>
typename ModelT<S>::Output ModelT<S>::forward(
    const nn::Mat<S>& patches, const std::array<double, 4>& corners,
    ForwardCache& cache) const {
  const int d = cfg_.embed_dim;
  const int half = d / 2;

  cache.patches = patches;
  nn::Mat<S> x = patch_embed_.forward(patches, cache.patch_c);
  x += pos_embed_;
  cache.enc_c.resize(encoder_.size());
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    x = encoder_[i].forward(x, cache.enc_c[i]);
  }
  cache.img_enc = x;

  cache.corners = corners;
  cache.angles.resize(2, half);
  cache.prompt_tokens.resize(2, d);
  for (int j = 0; j < 2; ++j) {
    const double cx = 2.0 * corners[2 * j] - 1.0;
    const double cy = 2.0 * corners[2 * j + 1] - 1.0;
    for (int k = 0; k < half; ++k) {
      const double angle =
          2.0 * M_PI *
          (static_cast<double>(prompt_freq_(k, 0)) * cx +
           static_cast<double>(prompt_freq_(k, 1)) * cy);
      cache.angles(j, k) = static_cast<S>(angle);
      cache.prompt_tokens(j, k) =
          std::sin(static_cast<S>(angle)) + corner_embed_(j, k);
      cache.prompt_tokens(j, half + k) =
          std::cos(static_cast<S>(angle)) + corner_embed_(j, half + k);
    }
  }

  nn::Mat<S> q(4, d);
  q.topRows(2) = query_embed_;
  q.bottomRows(2) = cache.prompt_tokens;
  cache.queries0 = q;

  nn::Mat<S> img = cache.img_enc;
  cache.dec_c.resize(decoder_.size());
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    decoder_[i].forward(q, img, cache.dec_c[i]);
  }
  cache.q_final = q;
  cache.img_final = img;

  cache.img_ln = final_ln_img_.forward(img, cache.ln_img_c);
  cache.q_ln = final_ln_q_.forward(q, cache.ln_q_c);
  cache.gate = mask_gate_.forward(cache.q_ln.row(1), cache.gate_c);

  nn::Mat<S> gated = cache.img_ln;
  for (Eigen::Index r = 0; r < gated.rows(); ++r) {
    gated.row(r).array() *= cache.gate.row(0).array();
  }

  Output out;
  out.logits = mask_head_.forward(gated, cache.mask_head_c);
  const nn::Mat<S> iou_out = iou_head_.forward(cache.q_ln.row(0), cache.iou_c);
  out.iou_pre = iou_out(0, 0);
  out.rho = nn::sigmoid(out.iou_pre);
  cache.iou_pre = out.iou_pre;
  cache.rho = out.rho;
  return out;
}

template <class S>
void ModelT<S>::backward(const nn::Mat<S>& d_logits, S d_rho,
                         const ForwardCache& cache, ModelT& grad,
                         bool encoder_grad) const {
  const int d = cfg_.embed_dim;
  const int half = d / 2;

  nn::Mat<S> d_q_ln = nn::Mat<S>::Zero(4, d);

  // IoU head (through its sigmoid)
  nn::Mat<S> d_iou_out(1, 1);
  d_iou_out(0, 0) = d_rho * cache.rho * (S(1) - cache.rho);
  d_q_ln.row(0) += iou_head_.backward(d_iou_out, cache.iou_c, grad.iou_head_);

  // Mask head and gate
  const nn::Mat<S> d_gated =
      mask_head_.backward(d_logits, cache.mask_head_c, grad.mask_head_);
  nn::Mat<S> d_img_ln = d_gated;
  for (Eigen::Index r = 0; r < d_img_ln.rows(); ++r) {
    d_img_ln.row(r).array() *= cache.gate.row(0).array();
  }
  nn::Mat<S> d_gate = (d_gated.array() * cache.img_ln.array())
                          .colwise()
                          .sum()
                          .matrix();
  d_q_ln.row(1) += mask_gate_.backward(d_gate, cache.gate_c, grad.mask_gate_);

  nn::Mat<S> dq = final_ln_q_.backward(d_q_ln, cache.ln_q_c, grad.final_ln_q_);
  nn::Mat<S> dimg =
      final_ln_img_.backward(d_img_ln, cache.ln_img_c, grad.final_ln_img_);

  for (int i = static_cast<int>(decoder_.size()) - 1; i >= 0; --i) {
    decoder_[i].backward(dq, dimg, cache.dec_c[i], grad.decoder_[i]);
  }

  grad.query_embed_ += dq.topRows(2);

  // Prompt encoder
  grad.corner_embed_ += dq.bottomRows(2);
  for (int j = 0; j < 2; ++j) {
    const double cx = 2.0 * cache.corners[2 * j] - 1.0;
    const double cy = 2.0 * cache.corners[2 * j + 1] - 1.0;
    for (int k = 0; k < half; ++k) {
      const S angle = cache.angles(j, k);
      const S d_sin = dq(2 + j, k);
      const S d_cos = dq(2 + j, half + k);
      const S d_angle =
          d_sin * std::cos(angle) - d_cos * std::sin(angle);
      grad.prompt_freq_(k, 0) += S(2.0 * M_PI) * d_angle * static_cast<S>(cx);
      grad.prompt_freq_(k, 1) += S(2.0 * M_PI) * d_angle * static_cast<S>(cy);
    }
  }

  if (!encoder_grad) return;
  for (int i = static_cast<int>(encoder_.size()) - 1; i >= 0; --i) {
    dimg = encoder_[i].backward(dimg, cache.enc_c[i], grad.encoder_[i]);
  }
  grad.pos_embed_ += dimg;
  patch_embed_.backward(dimg, cache.patch_c, grad.patch_embed_);
}

template <class S>
PromptedPrediction ModelT<S>::predict(const Image& image,
                                      const BoundingBox& box) const {
  if (image.height != cfg_.image_size || image.width != cfg_.image_size) {
    throw std::invalid_argument(
        "predict: image does not match configured size " +
        std::to_string(cfg_.image_size));
  }
  const BoundingBox cb = box.clamped(image.width, image.height);
  if (cb.degenerate()) {
    throw std::invalid_argument(
        "predict: box has zero area after clamping to the image");
  }
  ForwardCache cache;
  const Output out = forward(image_to_patches(image),
                             normalized_corners(cb), cache);
  PromptedPrediction pred;
  pred.mask_logits = patch_logits_to_grid(out.logits);
  pred.iou_estimate = static_cast<double>(out.rho);
  return pred;
}

template <class S>
void ModelT<S>::set_zero() {
  visit([](const std::string&, ModelPart, nn::Mat<S>& m) { m.setZero(); });
}

template <class S>
std::uint64_t ModelT<S>::checksum(ModelPart part) {
  std::uint64_t h = 1469598103934665603ULL;
  visit([&](const std::string&, ModelPart p, nn::Mat<S>& m) {
    if (p != part) return;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t n = m.size() * sizeof(S);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  });
  return h;
}

template <class S>
std::int64_t ModelT<S>::parameter_count() {
  std::int64_t n = 0;
  visit([&](const std::string&, ModelPart, nn::Mat<S>& m) { n += m.size(); });
  return n;
}

template class ModelT<float>;
template class ModelT<double>;

}  // namespace amodal
