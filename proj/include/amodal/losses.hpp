#pragma once

#include <vector>

#include "amodal/mask.hpp"

namespace amodal {

/// Weights of the composite training objective:
/// total = dice + focal + lambda_iou * iou.
struct LossConfig {
  double lambda_iou = 0.05;
  double gamma = 2.0;
  double probability_floor = 1e-7;
};

/// Per-pixel probabilities in (0, 1) (post-sigmoid mask predictions).
struct MaskProbabilities {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  MaskProbabilities() = default;
  MaskProbabilities(int h, int w, double fill = 0.5)
      : height(h), width(w),
        values(static_cast<std::size_t>(h) * w, fill) {}
};

/// Soft Dice: 1 - 2*sum(p*g) / (sum(p) + sum(g)). Zero iff the
/// prediction matches the target exactly as 0/1 values; defined as 0
/// when both prediction and target are all-zero.
double dice_loss(const MaskProbabilities& pred, const BinaryMask& gt);

/// d(dice_loss)/d(pred), one value per pixel.
std::vector<double> dice_loss_grad(const MaskProbabilities& pred,
                                   const BinaryMask& gt);

/// Mean over pixels of -(1-p_t)^gamma * log(p_t), with
/// p_t = p where gt is set and 1-p elsewhere. Probabilities are clamped
/// to [floor, 1-floor] before the log.
double focal_loss(const MaskProbabilities& pred, const BinaryMask& gt,
                  double gamma, double probability_floor = 1e-7);

std::vector<double> focal_loss_grad(const MaskProbabilities& pred,
                                    const BinaryMask& gt, double gamma,
                                    double probability_floor = 1e-7);

/// |rho_hat - IoU(pred_binary, gt)|. pred_binary is the thresholded
/// prediction; rho_hat stays continuous.
double iou_loss(double rho_hat, const BinaryMask& pred_binary,
                const BinaryMask& gt);

/// Prediction thresholded at `threshold` (strictly greater).
BinaryMask threshold_mask(const MaskProbabilities& pred,
                          double threshold = 0.5);

struct LossBreakdown {
  double dice = 0.0;
  double focal = 0.0;
  double iou = 0.0;
  double total = 0.0;
};

LossBreakdown total_loss(const MaskProbabilities& pred, const BinaryMask& gt,
                         double rho_hat, const LossConfig& cfg);

}  // namespace amodal
