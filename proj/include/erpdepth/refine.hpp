#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "erpdepth/errors.hpp"
#include "erpdepth/losses.hpp"
#include "erpdepth/metrics.hpp"
#include "erpdepth/pose.hpp"
#include "erpdepth/raster.hpp"

namespace erpdepth {

// Axis-angle rotation (first three) followed by translation (last three).
using PoseParams = Eigen::Matrix<double, 6, 1>;

PoseParams pose_to_params(const Pose& pose);
Pose params_to_pose(const PoseParams& params);

enum class GradientMode { kAnalytic, kFiniteDifference };

struct RefineConfig {
  std::size_t iterations = 300;
  // Step for the depth logits, applied to the gradient of the per-pixel
  // summed loss (the mean-loss gradient times H*W) so the value does not
  // depend on resolution.
  double step_size = 2.0;
  double pose_step_size = 1e-3;
  bool optimize_pose = false;
  // Smoothness is weighted more heavily than in LossWeights alone; with a
  // single source pair the photometric term leaves textureless regions
  // unconstrained.
  LossWeights loss{.lambda_sm = 0.1};
  DepthMapping mapping{};
  // Pyramid levels. Level l block-averages the disparity over 2^l x 2^l
  // pixels, upsamples it bilinearly back to full resolution and evaluates
  // the photometric term there; its smoothness term uses the coarse
  // disparity and the block-averaged target. The objective is the mean
  // over levels.
  std::vector<int> scales{0, 1, 2, 3};
  GradientMode gradient_mode = GradientMode::kAnalytic;
  double finite_difference_step = 1e-6;
  // Halvings tried per iteration before the iteration is recorded as a
  // stall.
  int max_halvings = 30;
  // Minimum channel-mean absolute difference to a neighbor for a pixel to
  // count as textured when the final metrics are computed.
  double texture_threshold = 1e-3;
  EvalConfig eval{};

  // Throws ConfigError for nonpositive steps, empty, negative or repeated
  // scales, or invalid loss weights / mapping. Zero iterations is accepted
  // and yields a report of the initial state.
  void validate() const;
};

// Depth logits x with D = 1 / (a * sigmoid(x) + b).
ScalarMap depth_to_params(const DepthMap& depth, const DepthMapping& mapping);
DepthMap params_to_depth(const ScalarMap& params, const DepthMapping& mapping);

struct ObjectiveValue {
  double loss = 0.0;
  double photometric = 0.0;  // mean over levels
  double smoothness = 0.0;   // mean over levels, before lambda_sm
  // Fraction of valid pixels whose reprojection beats the identity error,
  // over the whole finest level and over the rows within 10% of either
  // pole.
  double automask_kept_fraction = 0.0;
  double automask_kept_fraction_poles = 0.0;
  bool automask_applied = false;
};

struct ObjectiveGradient {
  ObjectiveValue value;
  ScalarMap depth;                 // d loss / d depth logits
  std::vector<PoseParams> poses;   // d loss / d pose params, one per source
};

// Self-supervised loss of a depth hypothesis for `target` against one or
// more `sources`, each reached through its own target->source pose. The
// automask is applied only with two or more sources; with one it is still
// evaluated and reported.
class RefineObjective {
 public:
  RefineObjective(const ErpImage& target, std::vector<ErpImage> sources,
                  const RefineConfig& config);

  const ErpGrid& grid() const;
  std::size_t source_count() const;

  ObjectiveValue value(const ScalarMap& depth_params, std::span<const PoseParams> poses) const;
  ObjectiveGradient analytic_gradient(const ScalarMap& depth_params,
                                      std::span<const PoseParams> poses) const;
  ObjectiveGradient finite_difference_gradient(const ScalarMap& depth_params,
                                               std::span<const PoseParams> poses) const;
  ObjectiveGradient gradient(const ScalarMap& depth_params,
                             std::span<const PoseParams> poses) const;

 private:
  // Bilinear tap from a full-resolution row or column into a coarse level.
  struct Tap {
    int i0 = 0;
    int i1 = 0;
    double w1 = 0.0;
  };
  struct Level {
    int factor = 1;
    ErpImage target;  // block-averaged, for the smoothness edge weights
    std::vector<Tap> row_taps;
    std::vector<Tap> col_taps;
  };
  struct PhotometricTerm {
    double value = 0.0;
    double kept_fraction = 0.0;
    double kept_fraction_poles = 0.0;
  };

  ScalarMap upsample(const ScalarMap& coarse, const Level& level) const;
  void upsample_adjoint(const ScalarMap& fine, const Level& level, ScalarMap& coarse) const;
  PhotometricTerm photometric(const ScalarMap& disparity, std::span<const Pose> poses,
                              double weight, ScalarMap* disparity_grad,
                              std::vector<Eigen::Vector3d>* rotation_grad,
                              std::vector<Eigen::Vector3d>* translation_grad) const;
  ObjectiveGradient evaluate(const ScalarMap& depth_params, std::span<const PoseParams> poses,
                             bool want_gradient) const;

  RefineConfig config_;
  ErpGrid grid_{};
  PhotometricKernel kernel_;
  std::vector<ErpImage> sources_;
  std::vector<ScalarMap> identity_errors_;
  std::vector<Eigen::Vector3d> rays_;  // unit ray per full-resolution pixel
  std::vector<Level> levels_;
};

double objective(const ScalarMap& depth_params, const PoseParams& pose_params,
                 const ErpImage& target, const ErpImage& source, const RefineConfig& config);

ObjectiveGradient objective_gradient(const ScalarMap& depth_params, const PoseParams& pose_params,
                                     const ErpImage& target, const ErpImage& source,
                                     const RefineConfig& config);

// Pixels with a neighbor differing by at least `threshold` (channel-mean
// absolute difference, horizontal neighbors across the seam).
Mask texture_mask(const ErpImage& image, double threshold);

struct RefineReport {
  std::vector<double> loss_trajectory;  // iterations + 1 entries once complete
  std::vector<double> step_sizes;       // accepted depth step per iteration
  std::size_t halvings = 0;
  std::size_t stalled_iterations = 0;
  DepthMetrics initial_metrics;
  DepthMetrics final_metrics;
  double rotation_error_deg = 0.0;
  double translation_error_m = 0.0;
  ObjectiveValue final_objective;
  DepthMap final_depth;
  Pose final_pose;
  std::size_t evaluation_pixels = 0;
};

class RefineDivergedError : public DivergenceError {
 public:
  RefineDivergedError(std::size_t iteration, RefineReport partial);
  const RefineReport& partial_report() const { return partial_; }

 private:
  RefineReport partial_;
};

// Fixed-iteration gradient descent on the depth logits (and the pose when
// config.optimize_pose), halving the step whenever a trial step would
// increase the loss. Final metrics use the ground-truth depth restricted
// to texture_mask(target). Throws RefineDivergedError carrying the partial
// report when the loss, gradient or parameters become non-finite.
RefineReport refine(const DepthMap& initial_depth, const Pose& initial_pose,
                    const ErpImage& target, const ErpImage& source, const DepthMap& gt_depth,
                    const Pose& gt_pose, const RefineConfig& config);

}  // namespace erpdepth
