#include "erpdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "json.hpp"

#include "erpdepth/errors.hpp"
#include "erpdepth/image_io.hpp"

namespace erpdepth {
namespace {

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

DepthMetrics evaluate(const ScalarMap& pred, const Mask* pred_valid, const ScalarMap& gt,
                      const Mask* gt_valid, const Mask& mask, const EvalConfig& cfg) {
  std::vector<double> g;
  std::vector<double> p;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double depth = gt[i];
    if (!mask[i] || (gt_valid && !(*gt_valid)[i]) ||
        !(depth >= cfg.min_depth && depth <= cfg.max_depth)) {
      continue;
    }
    g.push_back(depth);
    const double raw = pred[i];
    p.push_back((!pred_valid || (*pred_valid)[i]) && std::isfinite(raw) ? raw : 0.0);
  }
  if (g.empty()) throw EvaluationError("evaluation set is empty after masking and capping");

  DepthMetrics m;
  m.n_valid = g.size();
  if (cfg.scaling == DepthScaling::kMedianRatio) {
    const double pred_median = median_of(p);
    if (!(pred_median > 0.0)) {
      throw EvaluationError("median prediction is not positive; cannot align scale");
    }
    m.scale_factor = median_of(g) / pred_median;
    for (double& value : p) value *= m.scale_factor;
  }

  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  double sq_log = 0.0;
  std::size_t below1 = 0;
  std::size_t below2 = 0;
  std::size_t below3 = 0;
  const double t1 = 1.25;
  const double t2 = 1.25 * 1.25;
  const double t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double pi = p[i];
    if (!(pi >= cfg.min_depth)) {
      pi = cfg.min_depth;
      ++m.n_clamped;
    } else if (pi > cfg.max_depth) {
      pi = cfg.max_depth;
      ++m.n_clamped;
    }
    const double gi = g[i];
    const double diff = pi - gi;
    abs_rel += std::abs(diff) / gi;
    sq_rel += diff * diff / gi;
    sq += diff * diff;
    const double log_diff = std::log(pi) - std::log(gi);
    sq_log += log_diff * log_diff;
    const double ratio = std::max(pi / gi, gi / pi);
    if (ratio < t1) ++below1;
    if (ratio < t2) ++below2;
    if (ratio < t3) ++below3;
  }
  const auto n = static_cast<double>(g.size());
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.delta1 = static_cast<double>(below1) / n;
  m.delta2 = static_cast<double>(below2) / n;
  m.delta3 = static_cast<double>(below3) / n;
  return m;
}

}  // namespace

void EvalConfig::validate() const {
  if (!(min_depth > 0.0 && max_depth > min_depth)) {
    throw ConfigError("evaluation needs 0 < min_depth < max_depth");
  }
}

DepthMetrics compute_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& mask,
                             const EvalConfig& cfg) {
  cfg.validate();
  if (!(pred.grid == gt.grid) || !mask.same_shape(gt.grid.height, gt.grid.width) ||
      !pred.values.same_shape(gt.values) || !gt.values.same_shape(gt.valid) ||
      !pred.values.same_shape(pred.valid)) {
    throw ConfigError("prediction, ground truth and mask differ in shape");
  }
  return evaluate(pred.values, &pred.valid, gt.values, &gt.valid, mask, cfg);
}

DepthMetrics compute_metrics(const ScalarMap& pred, const ScalarMap& gt, const Mask& mask,
                             const EvalConfig& cfg) {
  cfg.validate();
  if (!pred.same_shape(gt) || !mask.same_shape(gt.height(), gt.width())) {
    throw ConfigError("prediction, ground truth and mask differ in shape");
  }
  return evaluate(pred, nullptr, gt, nullptr, mask, cfg);
}

Mask load_mask(const std::string& path) {
  const GrayImage image = read_png_gray(path);
  Mask mask(image.height, image.width, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = image.values[i] != 0 ? 1 : 0;
  return mask;
}

Mask load_mask(const std::string& path, const ErpGrid& grid) {
  Mask mask = load_mask(path);
  if (!mask.same_shape(grid.height, grid.width)) {
    throw InputError("mask '" + path + "' is " + std::to_string(mask.height()) + "x" +
                     std::to_string(mask.width()) + ", expected " +
                     std::to_string(grid.height) + "x" + std::to_string(grid.width));
  }
  return mask;
}

std::string metrics_to_json(const DepthMetrics& m) {
  nlohmann::ordered_json j;
  j["abs_rel"] = m.abs_rel;
  j["sq_rel"] = m.sq_rel;
  j["rmse"] = m.rmse;
  j["rmse_log"] = m.rmse_log;
  j["delta1"] = m.delta1;
  j["delta2"] = m.delta2;
  j["delta3"] = m.delta3;
  j["n_valid"] = m.n_valid;
  j["n_clamped"] = m.n_clamped;
  j["scale_factor"] = m.scale_factor;
  return j.dump(2);
}

std::string metrics_table(const DepthMetrics& m) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer),
                "%10s %10s %10s %10s %10s %10s %10s\n"
                "%10.4f %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n",
                "abs_rel", "sq_rel", "rmse", "rmse_log", "d<1.25", "d<1.25^2", "d<1.25^3",
                m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3);
  return buffer;
}

}  // namespace erpdepth
