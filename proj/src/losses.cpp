#include "amodal/losses.hpp"

#include <algorithm>
#include <cmath>

namespace amodal {

namespace {

void check_shapes(const MaskProbabilities& pred, const BinaryMask& gt,
                  const char* what) {
  if (pred.height != gt.height() || pred.width != gt.width()) {
    throw DimensionError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

double dice_loss(const MaskProbabilities& pred, const BinaryMask& gt) {
  check_shapes(pred, gt, "dice_loss");
  double inter = 0.0;
  double pred_sum = 0.0;
  double gt_sum = 0.0;
  const auto& g = gt.pixels();
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    pred_sum += pred.values[i];
    if (g[i]) {
      inter += pred.values[i];
      gt_sum += 1.0;
    }
  }
  const double denom = pred_sum + gt_sum;
  if (denom == 0.0) return 0.0;
  return 1.0 - 2.0 * inter / denom;
}

std::vector<double> dice_loss_grad(const MaskProbabilities& pred,
                                   const BinaryMask& gt) {
  check_shapes(pred, gt, "dice_loss_grad");
  double inter = 0.0;
  double pred_sum = 0.0;
  double gt_sum = 0.0;
  const auto& g = gt.pixels();
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    pred_sum += pred.values[i];
    if (g[i]) {
      inter += pred.values[i];
      gt_sum += 1.0;
    }
  }
  const double denom = pred_sum + gt_sum;
  std::vector<double> grad(pred.values.size(), 0.0);
  if (denom == 0.0) return grad;
  const double inv2 = 1.0 / (denom * denom);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double gi = g[i] ? 1.0 : 0.0;
    // d/dp_i [ -2*I/U ] with I = sum(p*g), U = sum(p) + sum(g)
    grad[i] = -2.0 * (gi * denom - inter) * inv2;
  }
  return grad;
}

double focal_loss(const MaskProbabilities& pred, const BinaryMask& gt,
                  double gamma, double probability_floor) {
  check_shapes(pred, gt, "focal_loss");
  if (pred.values.empty()) return 0.0;
  const double lo = probability_floor;
  const double hi = 1.0 - probability_floor;
  const auto& g = gt.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double p = std::clamp(pred.values[i], lo, hi);
    const double pt = g[i] ? p : 1.0 - p;
    sum += std::pow(1.0 - pt, gamma) * (-std::log(pt));
  }
  return sum / static_cast<double>(pred.values.size());
}

std::vector<double> focal_loss_grad(const MaskProbabilities& pred,
                                    const BinaryMask& gt, double gamma,
                                    double probability_floor) {
  check_shapes(pred, gt, "focal_loss_grad");
  const double lo = probability_floor;
  const double hi = 1.0 - probability_floor;
  const auto& g = gt.pixels();
  std::vector<double> grad(pred.values.size(), 0.0);
  if (grad.empty()) return grad;
  const double inv_n = 1.0 / static_cast<double>(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double raw = pred.values[i];
    if (raw < lo || raw > hi) continue;  // clamped: locally constant
    const double pt = g[i] ? raw : 1.0 - raw;
    const double one_m = 1.0 - pt;
    // d/dpt [ (1-pt)^gamma * (-log pt) ]
    double d = -std::pow(one_m, gamma) / pt;
    if (gamma > 0.0) {
      d += gamma * std::pow(one_m, gamma - 1.0) * std::log(pt);
    }
    grad[i] = (g[i] ? d : -d) * inv_n;
  }
  return grad;
}

double iou_loss(double rho_hat, const BinaryMask& pred_binary,
                const BinaryMask& gt) {
  return std::abs(rho_hat - mask_iou(pred_binary, gt));
}

BinaryMask threshold_mask(const MaskProbabilities& pred, double threshold) {
  BinaryMask mask(pred.height, pred.width);
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    mask.pixels()[i] = pred.values[i] > threshold ? 1 : 0;
  }
  return mask;
}

LossBreakdown total_loss(const MaskProbabilities& pred, const BinaryMask& gt,
                         double rho_hat, const LossConfig& cfg) {
  LossBreakdown out;
  out.dice = dice_loss(pred, gt);
  out.focal = focal_loss(pred, gt, cfg.gamma, cfg.probability_floor);
  out.iou = iou_loss(rho_hat, threshold_mask(pred), gt);
  out.total = out.dice + out.focal + cfg.lambda_iou * out.iou;
  return out;
}

}  // namespace amodal
