#pragma once

#include <array>
#include <span>
#include <vector>

#include "erpdepth/raster.hpp"

namespace erpdepth {

// Weights of L_all = L_rec + l_pose L_pose + l_sm L_sm + l_exp L_exp and the
// SSIM/L1 mix of the photometric term.
struct LossWeights {
  double lambda_pose = 0.0;
  double lambda_sm = 1e-3;
  double lambda_exp = 0.0;
  double alpha = 0.85;

  // Throws ConfigError for negative weights or alpha outside [0, 1].
  void validate() const;
};

// D = 1 / (a sigma + b) with 1/b = max_depth and 1/(a + b) = min_depth.
struct DepthMapping {
  double a = 9.99;
  double b = 0.01;
  double min_depth = 0.1;
  double max_depth = 100.0;

  static DepthMapping from_range(double min_depth, double max_depth);
  void validate() const;
};

// Throws DomainError for sigma outside [0, 1].
double sigmoid_to_depth(double sigma, const DepthMapping& mapping);
// Inverse of sigmoid_to_depth; throws DomainError outside [min, max].
double depth_to_sigmoid(double depth, const DepthMapping& mapping);

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Per-pixel, per-channel SSIM over 3x3 windows. Rows are reflected at the
// poles and columns wrap around the seam. Returns one H x W map per
// channel. Throws ConfigError on shape mismatch or H < 2.
std::vector<ScalarMap> ssim(const ErpImage& x, const ErpImage& y);

// Channel-averaged (alpha/2)(1 - SSIM) + (1 - alpha)|pred - target|.
ScalarMap photometric_error(const ErpImage& pred, const ErpImage& target, double alpha);

// Gradient of sum(upstream * photometric_error(pred, target, alpha)) with
// respect to pred, in the interleaved layout of ErpImage::values().
std::vector<double> photometric_error_gradient(const ErpImage& pred, const ErpImage& target,
                                               double alpha, const ScalarMap& upstream);

// photometric_error against a fixed target. The target's window statistics
// are computed once, so repeated evaluations against new predictions skip
// that work.
class PhotometricKernel {
 public:
  PhotometricKernel(const ErpImage& target, double alpha);

  const ErpImage& target() const { return target_; }
  double alpha() const { return alpha_; }

  ScalarMap error(const ErpImage& pred) const;
  std::vector<double> gradient(const ErpImage& pred, const ScalarMap& upstream) const;

 private:
  void check(const ErpImage& pred) const;

  ErpImage target_;
  double alpha_ = 0.85;
  std::vector<double> target_mean_;     // interleaved like target_
  std::vector<double> target_sq_mean_;  // interleaved like target_
  std::vector<std::array<int, 3>> row_taps_;
  std::vector<std::vector<int>> row_adjoint_;
};

struct MinReprojection {
  ScalarMap combined;
  // Index of the source that attained the minimum.
  Plane<int> source_index;
  // True where the best reprojection beats the best identity error.
  Mask automask;
};

// Per-pixel minimum over sources; automask keeps pixels whose minimum
// reprojection error is strictly below the minimum identity error. Throws
// ConfigError for an empty source list or mismatched shapes.
MinReprojection min_reprojection_with_automask(std::span<const ScalarMap> errors_per_source,
                                               std::span<const ScalarMap> identity_errors);

// Edge-aware first-order smoothness of the mean-normalized disparity:
//   mean(|dx d*| exp(-|dx I|)) + mean(|dv d*| exp(-|dv I|)),
// with dx wrapping across the seam and dv taken between adjacent rows only.
// Image gradients are channel-averaged absolute differences. Throws
// DegenerateInputError when mean(disparity) <= 0.
double smoothness_loss(const ScalarMap& disparity, const ErpImage& image);
ScalarMap smoothness_gradient(const ScalarMap& disparity, const ErpImage& image);

double combine_losses(double l_rec, double l_pose, double l_sm, double l_exp,
                      const LossWeights& weights);

// 3x3 box mean with vertical reflection and horizontal wrap, and its
// adjoint. Exposed for the SSIM gradient and tests.
ScalarMap box_mean3(const ScalarMap& plane);
ScalarMap box_mean3_adjoint(const ScalarMap& plane);

}  // namespace erpdepth
