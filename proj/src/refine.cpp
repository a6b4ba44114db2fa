#include "erpdepth/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "erpdepth/parallel.hpp"
#include "erpdepth/reprojection.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {
namespace {

constexpr double kDegenerateRange = 1e-12;
// Logits are kept finite by clamping sigma away from 0 and 1.
constexpr double kSigmaMargin = 1e-9;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ErpImage pool_image(const ErpImage& image, int factor) {
  if (factor == 1) return image;
  const ErpGrid grid{image.height() / factor, image.width() / factor};
  const int channels = image.channels();
  ErpImage out(grid, channels, 0.0);
  const double scale = 1.0 / (static_cast<double>(factor) * factor);
  for_each_row(grid.height, [&](int v) {
    for (int u = 0; u < grid.width; ++u) {
      double* dst = out.pixel(v, u);
      for (int dv = 0; dv < factor; ++dv) {
        for (int du = 0; du < factor; ++du) {
          const double* src = image.pixel(v * factor + dv, u * factor + du);
          for (int c = 0; c < channels; ++c) dst[c] += src[c];
        }
      }
      for (int c = 0; c < channels; ++c) dst[c] *= scale;
    }
  });
  return out;
}

ScalarMap pool_plane(const ScalarMap& plane, int factor) {
  if (factor == 1) return plane;
  const int height = plane.height() / factor;
  const int width = plane.width() / factor;
  ScalarMap out(height, width);
  const double scale = 1.0 / (static_cast<double>(factor) * factor);
  for_each_row(height, [&](int v) {
    for (int u = 0; u < width; ++u) {
      double sum = 0.0;
      for (int dv = 0; dv < factor; ++dv) {
        for (int du = 0; du < factor; ++du) sum += plane(v * factor + dv, u * factor + du);
      }
      out(v, u) = sum * scale;
    }
  });
  return out;
}

bool all_finite(const ScalarMap& plane) {
  return std::all_of(plane.values().begin(), plane.values().end(),
                     [](double x) { return std::isfinite(x); });
}

bool all_finite(const PoseParams& p) { return p.allFinite(); }

int pole_band_rows(int height) { return std::max(1, height / 10); }

}  // namespace

PoseParams pose_to_params(const Pose& pose) {
  PoseParams p;
  p.head<3>() = pose.axis_angle();
  p.tail<3>() = pose.translation;
  return p;
}

Pose params_to_pose(const PoseParams& params) {
  return Pose::from_axis_angle(params.head<3>(), params.tail<3>());
}

void RefineConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ConfigError("step_size must be positive and finite");
  }
  if (!(pose_step_size > 0.0) || !std::isfinite(pose_step_size)) {
    throw ConfigError("pose_step_size must be positive and finite");
  }
  if (scales.empty()) throw ConfigError("scales must not be empty");
  std::set<int> seen;
  for (int s : scales) {
    if (s < 0 || s > 16) throw ConfigError("scales must lie in [0, 16]");
    if (!seen.insert(s).second) throw ConfigError("scales must not repeat");
  }
  if (!(finite_difference_step > 0.0)) {
    throw ConfigError("finite_difference_step must be positive");
  }
  if (max_halvings < 0) throw ConfigError("max_halvings must be nonnegative");
  if (!(texture_threshold >= 0.0)) throw ConfigError("texture_threshold must be nonnegative");
  loss.validate();
  mapping.validate();
  eval.validate();
}

ScalarMap depth_to_params(const DepthMap& depth, const DepthMapping& mapping) {
  ScalarMap params(depth.grid.height, depth.grid.width);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double sigma = 0.5;
    const double d = depth.values[i];
    if (depth.valid[i] && std::isfinite(d) && d > 0.0) {
      sigma = (1.0 / d - mapping.b) / mapping.a;
    }
    sigma = std::clamp(sigma, kSigmaMargin, 1.0 - kSigmaMargin);
    params[i] = std::log(sigma / (1.0 - sigma));
  }
  return params;
}

DepthMap params_to_depth(const ScalarMap& params, const DepthMapping& mapping) {
  const ErpGrid grid{params.height(), params.width()};
  DepthMap depth(grid, 1.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    depth.values[i] = 1.0 / (mapping.a * sigmoid(params[i]) + mapping.b);
  }
  return depth;
}

RefineObjective::RefineObjective(const ErpImage& target, std::vector<ErpImage> sources,
                                 const RefineConfig& config)
    : config_(config),
      grid_(target.grid()),
      kernel_(target, config.loss.alpha),
      sources_(std::move(sources)) {
  config_.validate();
  grid_.validate();
  if (sources_.empty()) throw ConfigError("at least one source image is required");
  for (const ErpImage& s : sources_) {
    if (!s.same_shape(target)) throw ConfigError("source and target images differ in shape");
  }
  for (const ErpImage& s : sources_) identity_errors_.push_back(kernel_.error(s));
  rays_.resize(grid_.pixel_count());
  for (int v = 0; v < grid_.height; ++v) {
    for (int u = 0; u < grid_.width; ++u) {
      rays_[static_cast<std::size_t>(v) * grid_.width + u] =
          angles_to_unit_vector(pixel_to_angles(u, v, grid_));
    }
  }
  for (int scale : config_.scales) {
    const int factor = 1 << scale;
    if (grid_.height % factor != 0 || grid_.width % factor != 0 ||
        grid_.height / factor < 2) {
      throw ConfigError("pyramid level " + std::to_string(scale) +
                        " does not divide the grid into at least 2 rows");
    }
    Level level;
    level.factor = factor;
    level.target = pool_image(target, factor);
    const int height = grid_.height / factor;
    const int width = grid_.width / factor;
    for (int v = 0; v < grid_.height; ++v) {
      const double y = std::clamp((v + 0.5) / factor - 0.5, 0.0, height - 1.0);
      Tap t;
      t.i0 = static_cast<int>(std::floor(y));
      t.i1 = std::min(t.i0 + 1, height - 1);
      t.w1 = y - t.i0;
      level.row_taps.push_back(t);
    }
    for (int u = 0; u < grid_.width; ++u) {
      const double x = (u + 0.5) / factor - 0.5;
      const double x0 = std::floor(x);
      Tap t;
      t.i0 = (static_cast<int>(x0) % width + width) % width;
      t.i1 = (t.i0 + 1) % width;
      t.w1 = x - x0;
      level.col_taps.push_back(t);
    }
    levels_.push_back(std::move(level));
  }
}

const ErpGrid& RefineObjective::grid() const { return grid_; }

std::size_t RefineObjective::source_count() const { return sources_.size(); }

ScalarMap RefineObjective::upsample(const ScalarMap& coarse, const Level& level) const {
  if (level.factor == 1) return coarse;
  ScalarMap out(grid_.height, grid_.width);
  for_each_row(grid_.height, [&](int v) {
    const Tap& r = level.row_taps[v];
    for (int u = 0; u < grid_.width; ++u) {
      const Tap& c = level.col_taps[u];
      const double top = (1.0 - c.w1) * coarse(r.i0, c.i0) + c.w1 * coarse(r.i0, c.i1);
      const double bottom = (1.0 - c.w1) * coarse(r.i1, c.i0) + c.w1 * coarse(r.i1, c.i1);
      out(v, u) = (1.0 - r.w1) * top + r.w1 * bottom;
    }
  });
  return out;
}

void RefineObjective::upsample_adjoint(const ScalarMap& fine, const Level& level,
                                       ScalarMap& coarse) const {
  if (level.factor == 1) {
    for (std::size_t i = 0; i < fine.size(); ++i) coarse[i] += fine[i];
    return;
  }
  // Scatter; sequential so that accumulation order is fixed.
  for (int v = 0; v < grid_.height; ++v) {
    const Tap& r = level.row_taps[v];
    for (int u = 0; u < grid_.width; ++u) {
      const double g = fine(v, u);
      if (g == 0.0) continue;
      const Tap& c = level.col_taps[u];
      coarse(r.i0, c.i0) += (1.0 - r.w1) * (1.0 - c.w1) * g;
      coarse(r.i0, c.i1) += (1.0 - r.w1) * c.w1 * g;
      coarse(r.i1, c.i0) += r.w1 * (1.0 - c.w1) * g;
      coarse(r.i1, c.i1) += r.w1 * c.w1 * g;
    }
  }
}

RefineObjective::PhotometricTerm RefineObjective::photometric(
    const ScalarMap& disp, std::span<const Pose> poses, double weight,
    ScalarMap* disp_grad, std::vector<Eigen::Vector3d>* rotation_grad,
    std::vector<Eigen::Vector3d>* translation_grad) const {
  const ErpGrid& grid = grid_;
  const int height = grid.height;
  const int width = grid.width;
  const std::size_t n = grid.pixel_count();
  const int channels = kernel_.target().channels();
  const std::size_t n_sources = sources_.size();
  const bool want_gradient = disp_grad != nullptr;
  const bool apply_automask = n_sources >= 2;

  struct SourceWarp {
    ErpImage warped;
    std::vector<double> du, dv;  // sampler derivatives, kept for the gradient
    Mask valid;
    ScalarMap error;
  };
  std::vector<SourceWarp> warps(n_sources);
  for (std::size_t s = 0; s < n_sources; ++s) {
    const Pose& pose = poses[s];
    SourceWarp& w = warps[s];
    w.warped = ErpImage(grid, channels, 0.0);
    if (want_gradient) {
      w.du.assign(n * static_cast<std::size_t>(channels), 0.0);
      w.dv.assign(n * static_cast<std::size_t>(channels), 0.0);
    }
    w.valid = Mask(height, width, 0);
    for_each_row(height, [&](int v) {
      for (int u = 0; u < width; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * width + u;
        const double d = 1.0 / disp[i];
        const Eigen::Vector3d p_hat = pose.rotation * (d * rays_[i]) + pose.translation;
        const double rho2 = p_hat.x() * p_hat.x() + p_hat.z() * p_hat.z();
        const double range = p_hat.norm();
        if (!(range > kDegenerateRange * (d + pose.translation.norm())) ||
            !(rho2 > 1e-24 * range * range)) {
          continue;
        }
        const double phi = std::atan2(p_hat.x(), p_hat.z());
        const double theta = std::atan2(p_hat.y(), std::sqrt(rho2));
        const PixelCoord uv = angles_to_pixel(SphericalPoint{theta, phi}, grid);
        const std::size_t k = i * static_cast<std::size_t>(channels);
        w.valid[i] = want_gradient
                         ? sample_bilinear_into(sources_[s], uv.u, uv.v, w.warped.pixel(v, u),
                                                w.du.data() + k, w.dv.data() + k)
                         : sample_bilinear_into(sources_[s], uv.u, uv.v, w.warped.pixel(v, u));
        if (!w.valid[i]) {
          for (int c = 0; c < channels; ++c) w.warped.pixel(v, u)[c] = 0.0;
        }
      }
    });
    w.error = kernel_.error(w.warped);
  }

  // Per-pixel minimum over sources and automask.
  Plane<int> best_source(height, width, -1);
  ScalarMap best_error(height, width, std::numeric_limits<double>::infinity());
  Mask used(height, width, 0);
  std::vector<double> row_sum(static_cast<std::size_t>(height), 0.0);
  std::vector<std::size_t> row_used(static_cast<std::size_t>(height), 0);
  std::vector<std::size_t> row_valid(static_cast<std::size_t>(height), 0);
  std::vector<std::size_t> row_kept(static_cast<std::size_t>(height), 0);
  for_each_row(height, [&](int v) {
    for (int u = 0; u < width; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * width + u;
      double identity = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < n_sources; ++s) {
        identity = std::min(identity, identity_errors_[s][i]);
        if (warps[s].valid[i] && warps[s].error[i] < best_error[i]) {
          best_error[i] = warps[s].error[i];
          best_source[i] = static_cast<int>(s);
        }
      }
      if (best_source[i] < 0) continue;
      ++row_valid[v];
      const bool kept = best_error[i] < identity;
      if (kept) ++row_kept[v];
      if (!apply_automask || kept) {
        used[i] = 1;
        row_sum[v] += best_error[i];
        ++row_used[v];
      }
    }
  });
  double photo_sum = 0.0;
  std::size_t n_used = 0;
  std::size_t valid = 0, kept = 0, pole_valid = 0, pole_kept = 0;
  const int band = pole_band_rows(height);
  for (int v = 0; v < height; ++v) {
    photo_sum += row_sum[v];
    n_used += row_used[v];
    valid += row_valid[v];
    kept += row_kept[v];
    if (v < band || v >= height - band) {
      pole_valid += row_valid[v];
      pole_kept += row_kept[v];
    }
  }
  PhotometricTerm term;
  term.value = n_used > 0 ? photo_sum / static_cast<double>(n_used) : 0.0;
  term.kept_fraction = valid > 0 ? static_cast<double>(kept) / static_cast<double>(valid) : 0.0;
  term.kept_fraction_poles =
      pole_valid > 0 ? static_cast<double>(pole_kept) / static_cast<double>(pole_valid) : 0.0;

  if (disp_grad == nullptr || n_used == 0) return term;

  const double pixel_weight = weight / static_cast<double>(n_used);
  for (std::size_t s = 0; s < n_sources; ++s) {
    const Pose& pose = poses[s];
    const SourceWarp& w = warps[s];
    ScalarMap upstream(height, width);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] && best_source[i] == static_cast<int>(s)) {
        upstream[i] = pixel_weight;
        any = true;
      }
    }
    if (!any) continue;
    const std::vector<double> image_grad = kernel_.gradient(w.warped, upstream);

    std::vector<Eigen::Vector3d> row_rot(static_cast<std::size_t>(height),
                                         Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> row_trans(static_cast<std::size_t>(height),
                                           Eigen::Vector3d::Zero());
    for_each_row(height, [&](int v) {
      for (int u = 0; u < width; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * width + u;
        if (!w.valid[i]) continue;
        const std::size_t k = i * static_cast<std::size_t>(channels);
        const double* g = image_grad.data() + k;
        const double* du = w.du.data() + k;
        const double* dv = w.dv.data() + k;
        double dl_du = 0.0;
        double dl_dv = 0.0;
        for (int c = 0; c < channels; ++c) {
          dl_du += g[c] * du[c];
          dl_dv += g[c] * dv[c];
        }
        if (dl_du == 0.0 && dl_dv == 0.0) continue;
        const double d = 1.0 / disp[i];
        const Eigen::Vector3d rotated_ray = pose.rotation * rays_[i];
        const Eigen::Vector3d rp = d * rotated_ray;
        const Eigen::Vector3d p_hat = rp + pose.translation;
        const Eigen::Matrix<double, 2, 3> jac = source_pixel_jacobian(p_hat, grid);
        const Eigen::Vector3d a = (jac.row(0) * dl_du + jac.row(1) * dl_dv).transpose();
        (*disp_grad)[i] += a.dot(rotated_ray) * (-d * d);
        row_trans[v] += a;
        row_rot[v] += rp.cross(a);
      }
    });
    for (int v = 0; v < height; ++v) {
      (*rotation_grad)[s] += row_rot[v];
      (*translation_grad)[s] += row_trans[v];
    }
  }
  return term;
}

ObjectiveGradient RefineObjective::evaluate(const ScalarMap& depth_params,
                                            std::span<const PoseParams> poses,
                                            bool want_gradient) const {
  const ErpGrid& full = grid_;
  if (!depth_params.same_shape(full.height, full.width)) {
    throw ConfigError("depth parameters do not match the image grid");
  }
  const std::size_t n_sources = source_count();
  if (poses.size() != n_sources) throw ConfigError("one pose per source image is required");

  const DepthMapping& mapping = config_.mapping;
  const double n_levels = static_cast<double>(levels_.size());
  const double lambda_sm = config_.loss.lambda_sm;

  ScalarMap disparity(full.height, full.width);
  for (std::size_t i = 0; i < disparity.size(); ++i) {
    disparity[i] = mapping.a * sigmoid(depth_params[i]) + mapping.b;
  }

  std::vector<Pose> pose_values;
  for (const PoseParams& p : poses) pose_values.push_back(params_to_pose(p));

  ObjectiveGradient result;
  std::vector<Eigen::Vector3d> rot(n_sources, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> trans(n_sources, Eigen::Vector3d::Zero());
  if (want_gradient) result.depth = ScalarMap(full.height, full.width);

  for (std::size_t li = 0; li < levels_.size(); ++li) {
    const Level& level = levels_[li];
    const ScalarMap coarse = pool_plane(disparity, level.factor);
    const ScalarMap fine = upsample(coarse, level);

    ScalarMap fine_grad;
    if (want_gradient) fine_grad = ScalarMap(full.height, full.width);
    const PhotometricTerm photo =
        photometric(fine, pose_values, 1.0 / n_levels, want_gradient ? &fine_grad : nullptr,
                    &rot, &trans);
    const double smooth = smoothness_loss(coarse, level.target);
    result.value.loss += combine_losses(photo.value, 0.0, smooth, 0.0, config_.loss) / n_levels;
    result.value.photometric += photo.value / n_levels;
    result.value.smoothness += smooth / n_levels;
    if (li == 0) {
      result.value.automask_applied = n_sources >= 2;
      result.value.automask_kept_fraction = photo.kept_fraction;
      result.value.automask_kept_fraction_poles = photo.kept_fraction_poles;
    }

    if (!want_gradient) continue;

    ScalarMap coarse_grad(coarse.height(), coarse.width());
    upsample_adjoint(fine_grad, level, coarse_grad);
    if (lambda_sm != 0.0) {
      const ScalarMap sm_grad = smoothness_gradient(coarse, level.target);
      for (std::size_t i = 0; i < coarse_grad.size(); ++i) {
        coarse_grad[i] += lambda_sm / n_levels * sm_grad[i];
      }
    }
    // Adjoint of the block average.
    const int f = level.factor;
    const double scale = 1.0 / (static_cast<double>(f) * f);
    for_each_row(full.height, [&](int v) {
      for (int u = 0; u < full.width; ++u) {
        result.depth(v, u) += coarse_grad(v / f, u / f) * scale;
      }
    });
  }

  if (want_gradient) {
    for (std::size_t i = 0; i < result.depth.size(); ++i) {
      const double sigma = sigmoid(depth_params[i]);
      result.depth[i] *= mapping.a * sigma * (1.0 - sigma);
    }
    for (std::size_t s = 0; s < n_sources; ++s) {
      PoseParams g;
      g.head<3>() = so3_left_jacobian(poses[s].head<3>()).transpose() * rot[s];
      g.tail<3>() = trans[s];
      result.poses.push_back(g);
    }
  }
  return result;
}

ObjectiveValue RefineObjective::value(const ScalarMap& depth_params,
                                      std::span<const PoseParams> poses) const {
  return evaluate(depth_params, poses, false).value;
}

ObjectiveGradient RefineObjective::analytic_gradient(const ScalarMap& depth_params,
                                                     std::span<const PoseParams> poses) const {
  return evaluate(depth_params, poses, true);
}

ObjectiveGradient RefineObjective::finite_difference_gradient(
    const ScalarMap& depth_params, std::span<const PoseParams> poses) const {
  const double h = config_.finite_difference_step;
  ObjectiveGradient result;
  result.value = value(depth_params, poses);
  result.depth = ScalarMap(depth_params.height(), depth_params.width());
  ScalarMap x = depth_params;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double plus = value(x, poses).loss;
    x[i] = x0 - h;
    const double minus = value(x, poses).loss;
    x[i] = x0;
    result.depth[i] = (plus - minus) / (2.0 * h);
  }
  std::vector<PoseParams> p(poses.begin(), poses.end());
  result.poses.assign(p.size(), PoseParams::Zero());
  for (std::size_t s = 0; s < p.size(); ++s) {
    for (int k = 0; k < 6; ++k) {
      const double p0 = p[s][k];
      p[s][k] = p0 + h;
      const double plus = value(depth_params, p).loss;
      p[s][k] = p0 - h;
      const double minus = value(depth_params, p).loss;
      p[s][k] = p0;
      result.poses[s][k] = (plus - minus) / (2.0 * h);
    }
  }
  return result;
}

ObjectiveGradient RefineObjective::gradient(const ScalarMap& depth_params,
                                            std::span<const PoseParams> poses) const {
  return config_.gradient_mode == GradientMode::kAnalytic
             ? analytic_gradient(depth_params, poses)
             : finite_difference_gradient(depth_params, poses);
}

double objective(const ScalarMap& depth_params, const PoseParams& pose_params,
                 const ErpImage& target, const ErpImage& source, const RefineConfig& config) {
  const RefineObjective obj(target, {source}, config);
  return obj.value(depth_params, std::span<const PoseParams>(&pose_params, 1)).loss;
}

ObjectiveGradient objective_gradient(const ScalarMap& depth_params, const PoseParams& pose_params,
                                     const ErpImage& target, const ErpImage& source,
                                     const RefineConfig& config) {
  const RefineObjective obj(target, {source}, config);
  return obj.gradient(depth_params, std::span<const PoseParams>(&pose_params, 1));
}

Mask texture_mask(const ErpImage& image, double threshold) {
  const int height = image.height();
  const int width = image.width();
  const int channels = image.channels();
  const auto differs = [&](int v0, int u0, int v1, int u1) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) sum += std::abs(image(v0, u0, c) - image(v1, u1, c));
    return sum / channels >= threshold;
  };
  Mask mask(height, width, 0);
  for_each_row(height, [&](int v) {
    for (int u = 0; u < width; ++u) {
      const int left = u == 0 ? width - 1 : u - 1;
      const int right = u == width - 1 ? 0 : u + 1;
      bool textured = differs(v, u, v, left) || differs(v, u, v, right);
      if (!textured && v > 0) textured = differs(v, u, v - 1, u);
      if (!textured && v + 1 < height) textured = differs(v, u, v + 1, u);
      mask(v, u) = textured ? 1 : 0;
    }
  });
  return mask;
}

RefineDivergedError::RefineDivergedError(std::size_t iteration, RefineReport partial)
    : DivergenceError(iteration, "refinement diverged at iteration " + std::to_string(iteration)),
      partial_(std::move(partial)) {}

RefineReport refine(const DepthMap& initial_depth, const Pose& initial_pose,
                    const ErpImage& target, const ErpImage& source, const DepthMap& gt_depth,
                    const Pose& gt_pose, const RefineConfig& config) {
  config.validate();
  initial_pose.validate();
  if (!(initial_depth.grid == target.grid()) || !(gt_depth.grid == target.grid())) {
    throw ConfigError("depth maps and images must share one grid");
  }
  const RefineObjective obj(target, {source}, config);
  const Mask mask = texture_mask(target, config.texture_threshold);
  const double n_pixels = static_cast<double>(target.grid().pixel_count());

  ScalarMap x = depth_to_params(initial_depth, config.mapping);
  PoseParams pose = pose_to_params(initial_pose);

  RefineReport report;
  const auto finish = [&](RefineReport& r, const ObjectiveValue& value) {
    r.final_objective = value;
    r.final_depth = params_to_depth(x, config.mapping);
    r.final_pose = params_to_pose(pose);
    r.rotation_error_deg =
        rotation_angle_between(r.final_pose.rotation, gt_pose.rotation) * 180.0 / kPi;
    r.translation_error_m = (r.final_pose.translation - gt_pose.translation).norm();
  };
  const auto diverge = [&](std::size_t iteration, const ObjectiveValue& value) {
    RefineReport partial = report;
    partial.final_objective = value;
    partial.final_depth = params_to_depth(x, config.mapping);
    throw RefineDivergedError(iteration, std::move(partial));
  };

  report.initial_metrics =
      compute_metrics(params_to_depth(x, config.mapping), gt_depth, mask, config.eval);
  report.evaluation_pixels = report.initial_metrics.n_valid;

  ObjectiveGradient current = obj.gradient(x, std::span<const PoseParams>(&pose, 1));
  report.loss_trajectory.push_back(current.value.loss);
  if (!std::isfinite(current.value.loss) || !all_finite(current.depth) ||
      !all_finite(current.poses.front())) {
    diverge(0, current.value);
  }

  // Each iteration starts from the last accepted step. After kGrowAfter
  // consecutive first-try acceptances the start doubles, capped at the
  // configured step.
  constexpr int kGrowAfter = 10;
  const bool analytic = config.gradient_mode == GradientMode::kAnalytic;
  double start_scale = 1.0;
  int first_try_streak = 0;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    double scale = start_scale;
    double step = config.step_size * scale;
    double pose_step = config.pose_step_size * scale;
    bool accepted = false;
    for (int attempt = 0; attempt <= config.max_halvings; ++attempt) {
      ScalarMap trial_x = x;
      for (std::size_t i = 0; i < trial_x.size(); ++i) {
        trial_x[i] -= step * n_pixels * current.depth[i];
      }
      PoseParams trial_pose = pose;
      if (config.optimize_pose) trial_pose -= pose_step * current.poses.front();
      if (!all_finite(trial_x) || !all_finite(trial_pose)) {
        x = std::move(trial_x);
        pose = trial_pose;
        diverge(it, current.value);
      }
      // Most trials are accepted, so analytic mode evaluates the gradient
      // together with the trial loss.
      const std::span<const PoseParams> trial_poses(&trial_pose, 1);
      std::optional<ObjectiveGradient> fused;
      ObjectiveValue trial;
      if (analytic) {
        fused = obj.analytic_gradient(trial_x, trial_poses);
        trial = fused->value;
      } else {
        trial = obj.value(trial_x, trial_poses);
      }
      if (!std::isfinite(trial.loss)) {
        x = std::move(trial_x);
        pose = trial_pose;
        diverge(it, trial);
      }
      if (trial.loss <= current.value.loss) {
        ObjectiveGradient next =
            fused ? std::move(*fused) : obj.gradient(trial_x, trial_poses);
        x = std::move(trial_x);
        pose = trial_pose;
        if (!all_finite(next.depth) || !all_finite(next.poses.front())) diverge(it, next.value);
        current = std::move(next);
        report.step_sizes.push_back(step);
        first_try_streak = attempt == 0 ? first_try_streak + 1 : 0;
        start_scale = scale;
        if (first_try_streak >= kGrowAfter) {
          start_scale = std::min(1.0, 2.0 * scale);
          first_try_streak = 0;
        }
        accepted = true;
        break;
      }
      ++report.halvings;
      scale *= 0.5;
      step *= 0.5;
      pose_step *= 0.5;
    }
    if (!accepted) {
      ++report.stalled_iterations;
      report.step_sizes.push_back(0.0);
    }
    report.loss_trajectory.push_back(current.value.loss);
  }

  finish(report, current.value);
  report.final_metrics = compute_metrics(report.final_depth, gt_depth, mask, config.eval);
  return report;
}

}  // namespace erpdepth
