#pragma once

#include <cstddef>
#include <string>

#include "erpdepth/raster.hpp"

namespace erpdepth {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_valid = 0;
  // Predictions moved by the [min_depth, max_depth] clamp (non-positive or
  // invalid predictions included).
  std::size_t n_clamped = 0;
  double scale_factor = 1.0;
};

enum class DepthScaling { kNone, kMedianRatio };

struct EvalConfig {
  double max_depth = 80.0;
  double min_depth = 0.1;
  DepthScaling scaling = DepthScaling::kNone;

  void validate() const;
};

// Evaluation set: mask && gt.valid && gt in [min_depth, max_depth]. With
// median-ratio scaling the prediction is multiplied by
// median(gt) / median(pred) over that set. Predictions are then clamped to
// [min_depth, max_depth]; invalid or non-finite predictions count as 0 and
// end up at min_depth. Throws EvaluationError when the set is empty and
// ConfigError on shape mismatch.
DepthMetrics compute_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& mask,
                             const EvalConfig& cfg);
// Same rules on bare planes of any shape; non-finite ground truth is
// excluded like an invalid pixel.
DepthMetrics compute_metrics(const ScalarMap& pred, const ScalarMap& gt, const Mask& mask,
                             const EvalConfig& cfg);

// Mask PNG: nonzero pixel = included. Throws InputError for unreadable
// files or (second overload) a size other than the grid.
Mask load_mask(const std::string& path);
Mask load_mask(const std::string& path, const ErpGrid& grid);

std::string metrics_to_json(const DepthMetrics& m);
// Column order abs_rel, sq_rel, rmse, rmse_log, d<1.25, d<1.25^2, d<1.25^3.
std::string metrics_table(const DepthMetrics& m);

}  // namespace erpdepth
