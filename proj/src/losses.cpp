#include "erpdepth/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "erpdepth/errors.hpp"
#include "erpdepth/parallel.hpp"

namespace erpdepth {
namespace {

int reflect_row(int row, int height) {
  if (row < 0) return -row;
  if (row >= height) return 2 * height - 2 - row;
  return row;
}

// Rows feeding each output row of the vertical 3-tap, and for the adjoint,
// the output rows each input row feeds (with multiplicity).
struct RowTaps {
  std::vector<std::array<int, 3>> forward;
  std::vector<std::vector<int>> adjoint;

  explicit RowTaps(int height) : forward(static_cast<std::size_t>(height)),
                                 adjoint(static_cast<std::size_t>(height)) {
    for (int q = 0; q < height; ++q) {
      for (int dr = -1; dr <= 1; ++dr) {
        const int src = reflect_row(q + dr, height);
        forward[static_cast<std::size_t>(q)][static_cast<std::size_t>(dr + 1)] = src;
        adjoint[static_cast<std::size_t>(src)].push_back(q);
      }
    }
  }
};

// Horizontal wrap 3-tap: self-adjoint.
void horizontal_sum3(const ScalarMap& in, ScalarMap& out) {
  const int width = in.width();
  for_each_row(in.height(), [&](int v) {
    for (int u = 0; u < width; ++u) {
      const int left = u == 0 ? width - 1 : u - 1;
      const int right = u == width - 1 ? 0 : u + 1;
      out(v, u) = in(v, left) + in(v, u) + in(v, right);
    }
  });
}

void require_ssim_shape(const ErpImage& x, const ErpImage& y) {
  if (!x.same_shape(y)) throw ConfigError("SSIM inputs differ in shape");
  if (x.height() < 2) throw ConfigError("SSIM needs at least two rows");
}

ScalarMap channel_plane(const ErpImage& image, int c) {
  ScalarMap plane(image.height(), image.width());
  for_each_row(image.height(), [&](int v) {
    for (int u = 0; u < image.width(); ++u) plane(v, u) = image(v, u, c);
  });
  return plane;
}

ScalarMap product(const ScalarMap& a, const ScalarMap& b) {
  ScalarMap out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

struct SsimStats {
  ScalarMap mx, my, exx, eyy, exy;
};

SsimStats ssim_stats(const ScalarMap& x, const ScalarMap& y) {
  return SsimStats{box_mean3(x), box_mean3(y), box_mean3(product(x, x)),
                   box_mean3(product(y, y)), box_mean3(product(x, y))};
}

double ssim_value(double mx, double my, double exx, double eyy, double exy) {
  const double sx = exx - mx * mx;
  const double sy = eyy - my * my;
  const double sxy = exy - mx * my;
  const double num = (2.0 * mx * my + kSsimC1) * (2.0 * sxy + kSsimC2);
  const double den = (mx * mx + my * my + kSsimC1) * (sx + sy + kSsimC2);
  return num / den;
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_pose >= 0.0 && lambda_sm >= 0.0 && lambda_exp >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

DepthMapping DepthMapping::from_range(double min_depth, double max_depth) {
  if (!(min_depth > 0.0 && max_depth > min_depth)) {
    throw ConfigError("depth mapping needs 0 < min_depth < max_depth");
  }
  DepthMapping m;
  m.min_depth = min_depth;
  m.max_depth = max_depth;
  m.b = 1.0 / max_depth;
  m.a = 1.0 / min_depth - m.b;
  return m;
}

void DepthMapping::validate() const {
  if (!(a > 0.0 && b > 0.0 && min_depth > 0.0 && max_depth > min_depth)) {
    throw ConfigError("invalid depth mapping");
  }
}

double sigmoid_to_depth(double sigma, const DepthMapping& mapping) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw DomainError("sigmoid output must lie in [0, 1], got " + std::to_string(sigma));
  }
  return 1.0 / (mapping.a * sigma + mapping.b);
}

double depth_to_sigmoid(double depth, const DepthMapping& mapping) {
  const double sigma = (1.0 / depth - mapping.b) / mapping.a;
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw DomainError("depth " + std::to_string(depth) + " is outside the mapping range");
  }
  return sigma;
}

ScalarMap box_mean3(const ScalarMap& plane) {
  const int height = plane.height();
  const RowTaps taps(height);
  ScalarMap vertical(height, plane.width());
  for_each_row(height, [&](int v) {
    const auto& rows = taps.forward[static_cast<std::size_t>(v)];
    for (int u = 0; u < plane.width(); ++u) {
      vertical(v, u) = plane(rows[0], u) + plane(rows[1], u) + plane(rows[2], u);
    }
  });
  ScalarMap out(height, plane.width());
  horizontal_sum3(vertical, out);
  for (double& value : out.values()) value /= 9.0;
  return out;
}

ScalarMap box_mean3_adjoint(const ScalarMap& plane) {
  const int height = plane.height();
  const RowTaps taps(height);
  ScalarMap horizontal(height, plane.width());
  horizontal_sum3(plane, horizontal);
  ScalarMap out(height, plane.width());
  for_each_row(height, [&](int v) {
    for (int q : taps.adjoint[static_cast<std::size_t>(v)]) {
      for (int u = 0; u < plane.width(); ++u) out(v, u) += horizontal(q, u);
    }
    for (int u = 0; u < plane.width(); ++u) out(v, u) /= 9.0;
  });
  return out;
}

std::vector<ScalarMap> ssim(const ErpImage& x, const ErpImage& y) {
  require_ssim_shape(x, y);
  std::vector<ScalarMap> maps;
  maps.reserve(static_cast<std::size_t>(x.channels()));
  for (int c = 0; c < x.channels(); ++c) {
    const SsimStats s = ssim_stats(channel_plane(x, c), channel_plane(y, c));
    ScalarMap map(x.height(), x.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
      map[i] = ssim_value(s.mx[i], s.my[i], s.exx[i], s.eyy[i], s.exy[i]);
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

ScalarMap photometric_error(const ErpImage& pred, const ErpImage& target, double alpha) {
  require_ssim_shape(pred, target);
  return PhotometricKernel(target, alpha).error(pred);
}

std::vector<double> photometric_error_gradient(const ErpImage& pred, const ErpImage& target,
                                               double alpha, const ScalarMap& upstream) {
  require_ssim_shape(pred, target);
  return PhotometricKernel(target, alpha).gradient(pred, upstream);
}

PhotometricKernel::PhotometricKernel(const ErpImage& target, double alpha)
    : target_(target), alpha_(alpha) {
  if (target.height() < 2) throw ConfigError("SSIM needs at least two rows");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  const RowTaps taps(target.height());
  row_taps_ = taps.forward;
  row_adjoint_ = taps.adjoint;
  const int channels = target.channels();
  target_mean_.resize(target.values().size());
  target_sq_mean_.resize(target.values().size());
  for (int c = 0; c < channels; ++c) {
    const ScalarMap y = channel_plane(target, c);
    const ScalarMap my = box_mean3(y);
    const ScalarMap eyy = box_mean3(product(y, y));
    for (std::size_t i = 0; i < y.size(); ++i) {
      target_mean_[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)] = my[i];
      target_sq_mean_[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)] =
          eyy[i];
    }
  }
}

void PhotometricKernel::check(const ErpImage& pred) const {
  if (!pred.same_shape(target_)) throw ConfigError("prediction and target differ in shape");
}

namespace {

// Row-wise 3x3 window sums of x, x*x and x*y for every channel of row v,
// written interleaved into sx, sxx, sxy (each width * channels long).
void window_sums(const ErpImage& x, const ErpImage& y, const std::array<int, 3>& rows,
                 std::vector<double>& col_x, std::vector<double>& col_xx,
                 std::vector<double>& col_xy, double* sx, double* sxx, double* sxy) {
  const int width = x.width();
  const int channels = x.channels();
  const std::size_t row_len = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  const double* x0 = x.pixel(rows[0], 0);
  const double* x1 = x.pixel(rows[1], 0);
  const double* x2 = x.pixel(rows[2], 0);
  const double* y0 = y.pixel(rows[0], 0);
  const double* y1 = y.pixel(rows[1], 0);
  const double* y2 = y.pixel(rows[2], 0);
  for (std::size_t k = 0; k < row_len; ++k) {
    col_x[k] = x0[k] + x1[k] + x2[k];
    col_xx[k] = x0[k] * x0[k] + x1[k] * x1[k] + x2[k] * x2[k];
    col_xy[k] = x0[k] * y0[k] + x1[k] * y1[k] + x2[k] * y2[k];
  }
  for (int u = 0; u < width; ++u) {
    const std::size_t l = static_cast<std::size_t>(u == 0 ? width - 1 : u - 1) * channels;
    const std::size_t m = static_cast<std::size_t>(u) * channels;
    const std::size_t r = static_cast<std::size_t>(u == width - 1 ? 0 : u + 1) * channels;
    for (int c = 0; c < channels; ++c) {
      sx[m + c] = col_x[l + c] + col_x[m + c] + col_x[r + c];
      sxx[m + c] = col_xx[l + c] + col_xx[m + c] + col_xx[r + c];
      sxy[m + c] = col_xy[l + c] + col_xy[m + c] + col_xy[r + c];
    }
  }
}

}  // namespace

ScalarMap PhotometricKernel::error(const ErpImage& pred) const {
  check(pred);
  const int height = pred.height();
  const int width = pred.width();
  const int channels = pred.channels();
  const std::size_t row_len = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  const double ssim_weight = 0.5 * alpha_ / channels;
  const double l1_weight = (1.0 - alpha_) / channels;
  ScalarMap error(height, width);
  for_each_row(height, [&](int v) {
    std::vector<double> cx(row_len), cxx(row_len), cxy(row_len);
    std::vector<double> sx(row_len), sxx(row_len), sxy(row_len);
    window_sums(pred, target_, row_taps_[static_cast<std::size_t>(v)], cx, cxx, cxy, sx.data(),
                sxx.data(), sxy.data());
    const std::size_t base = static_cast<std::size_t>(v) * row_len;
    const double* x = pred.pixel(v, 0);
    const double* y = target_.pixel(v, 0);
    for (int u = 0; u < width; ++u) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(u) * channels + c;
        const double mx = sx[k] / 9.0;
        const double my = target_mean_[base + k];
        const double s = ssim_value(mx, my, sxx[k] / 9.0, target_sq_mean_[base + k], sxy[k] / 9.0);
        acc += ssim_weight * (1.0 - s) + l1_weight * std::abs(x[k] - y[k]);
      }
      error(v, u) = acc;
    }
  });
  return error;
}

std::vector<double> PhotometricKernel::gradient(const ErpImage& pred,
                                                const ScalarMap& upstream) const {
  check(pred);
  const int height = pred.height();
  const int width = pred.width();
  if (!upstream.same_shape(height, width)) {
    throw ConfigError("upstream gradient does not match the image grid");
  }
  const int channels = pred.channels();
  const std::size_t row_len = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  const double ssim_scale = -0.5 * alpha_ / channels;
  const double l1_scale = (1.0 - alpha_) / channels;

  // Pass 1: upstream-weighted derivatives of SSIM with respect to the
  // window mean, second moment and cross moment of pred.
  const std::size_t total = row_len * static_cast<std::size_t>(height);
  std::unique_ptr<double[]> g_mean(new double[total]);
  std::unique_ptr<double[]> g_sq(new double[total]);
  std::unique_ptr<double[]> g_cross(new double[total]);
  for_each_row(height, [&](int v) {
    const std::size_t base = static_cast<std::size_t>(v) * row_len;
    const bool active = std::any_of(&upstream(v, 0), &upstream(v, 0) + width,
                                    [](double g) { return g != 0.0; });
    if (!active) {
      std::fill_n(g_mean.get() + base, row_len, 0.0);
      std::fill_n(g_sq.get() + base, row_len, 0.0);
      std::fill_n(g_cross.get() + base, row_len, 0.0);
      return;
    }
    std::vector<double> cx(row_len), cxx(row_len), cxy(row_len);
    std::vector<double> sx(row_len), sxx(row_len), sxy(row_len);
    window_sums(pred, target_, row_taps_[static_cast<std::size_t>(v)], cx, cxx, cxy, sx.data(),
                sxx.data(), sxy.data());
    for (int u = 0; u < width; ++u) {
      const double g = upstream(v, u) * ssim_scale;
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(u) * channels + c;
        if (g == 0.0) {
          g_mean[base + k] = g_sq[base + k] = g_cross[base + k] = 0.0;
          continue;
        }
        const double mx = sx[k] / 9.0;
        const double my = target_mean_[base + k];
        const double n1 = 2.0 * mx * my + kSsimC1;
        const double n2 = 2.0 * (sxy[k] / 9.0 - mx * my) + kSsimC2;
        const double d1 = mx * mx + my * my + kSsimC1;
        const double d2 = (sxx[k] / 9.0 - mx * mx) + (target_sq_mean_[base + k] - my * my) + kSsimC2;
        const double den = d1 * d2;
        const double value = n1 * n2 / den;
        g_mean[base + k] = g * (2.0 * my * (n2 - n1) - value * 2.0 * mx * (d2 - d1)) / den;
        g_sq[base + k] = g * (-value * d1) / den;
        g_cross[base + k] = g * (2.0 * n1) / den;
      }
    }
  });

  // Pass 2: adjoint of the 3x3 window mean, then the chain rule through
  // x, x*x and x*y.
  std::vector<double> grad(total);
  for_each_row(height, [&](int v) {
    std::vector<double> col_mean(row_len, 0.0), col_sq(row_len, 0.0), col_cross(row_len, 0.0);
    for (int q : row_adjoint_[static_cast<std::size_t>(v)]) {
      const std::size_t base = static_cast<std::size_t>(q) * row_len;
      for (std::size_t k = 0; k < row_len; ++k) {
        col_mean[k] += g_mean[base + k];
        col_sq[k] += g_sq[base + k];
        col_cross[k] += g_cross[base + k];
      }
    }
    const double* x = pred.pixel(v, 0);
    const double* y = target_.pixel(v, 0);
    double* out = grad.data() + static_cast<std::size_t>(v) * row_len;
    for (int u = 0; u < width; ++u) {
      const std::size_t l = static_cast<std::size_t>(u == 0 ? width - 1 : u - 1) * channels;
      const std::size_t m = static_cast<std::size_t>(u) * channels;
      const std::size_t r = static_cast<std::size_t>(u == width - 1 ? 0 : u + 1) * channels;
      const double up = upstream(v, u) * l1_scale;
      for (int c = 0; c < channels; ++c) {
        const double a_mean = (col_mean[l + c] + col_mean[m + c] + col_mean[r + c]) / 9.0;
        const double a_sq = (col_sq[l + c] + col_sq[m + c] + col_sq[r + c]) / 9.0;
        const double a_cross = (col_cross[l + c] + col_cross[m + c] + col_cross[r + c]) / 9.0;
        const double diff = x[m + c] - y[m + c];
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out[m + c] = a_mean + 2.0 * x[m + c] * a_sq + y[m + c] * a_cross + up * sign;
      }
    }
  });
  return grad;
}

MinReprojection min_reprojection_with_automask(std::span<const ScalarMap> errors_per_source,
                                               std::span<const ScalarMap> identity_errors) {
  if (errors_per_source.empty()) throw ConfigError("min reprojection needs at least one source");
  const int height = errors_per_source.front().height();
  const int width = errors_per_source.front().width();
  for (const auto& e : errors_per_source) {
    if (!e.same_shape(height, width)) throw ConfigError("error maps differ in shape");
  }
  for (const auto& e : identity_errors) {
    if (!e.same_shape(height, width)) throw ConfigError("identity error maps differ in shape");
  }
  MinReprojection out{ScalarMap(height, width), Plane<int>(height, width, 0),
                      Mask(height, width, 1)};
  for (std::size_t i = 0; i < out.combined.size(); ++i) {
    double best = errors_per_source[0][i];
    int best_index = 0;
    for (std::size_t s = 1; s < errors_per_source.size(); ++s) {
      if (errors_per_source[s][i] < best) {
        best = errors_per_source[s][i];
        best_index = static_cast<int>(s);
      }
    }
    double best_identity = std::numeric_limits<double>::infinity();
    for (const auto& e : identity_errors) best_identity = std::min(best_identity, e[i]);
    out.combined[i] = best;
    out.source_index[i] = best_index;
    out.automask[i] = best < best_identity ? 1 : 0;
  }
  return out;
}

namespace {

struct ImageEdgeWeights {
  ScalarMap horizontal;  // exp(-|dx I|) between (v,u) and (v,u+1)
  ScalarMap vertical;    // exp(-|dv I|) between (v,u) and (v+1,u); H-1 rows
};

ImageEdgeWeights edge_weights(const ErpImage& image) {
  const int height = image.height();
  const int width = image.width();
  const int channels = image.channels();
  ImageEdgeWeights w{ScalarMap(height, width), ScalarMap(std::max(height - 1, 0), width)};
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int right = u == width - 1 ? 0 : u + 1;
      double gx = 0.0;
      double gy = 0.0;
      for (int c = 0; c < channels; ++c) {
        gx += std::abs(image(v, right, c) - image(v, u, c));
        if (v + 1 < height) gy += std::abs(image(v + 1, u, c) - image(v, u, c));
      }
      w.horizontal(v, u) = std::exp(-gx / channels);
      if (v + 1 < height) w.vertical(v, u) = std::exp(-gy / channels);
    }
  }
  return w;
}

double checked_mean(const ScalarMap& disparity, const ErpImage& image) {
  if (!disparity.same_shape(image.height(), image.width())) {
    throw ConfigError("disparity and image differ in shape");
  }
  double sum = 0.0;
  for (double d : disparity.values()) sum += d;
  const double mean = sum / static_cast<double>(disparity.size());
  if (!(mean > 0.0)) throw DegenerateInputError("mean disparity must be positive");
  return mean;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double smoothness_loss(const ScalarMap& disparity, const ErpImage& image) {
  const double mean = checked_mean(disparity, image);
  const ImageEdgeWeights w = edge_weights(image);
  const int height = disparity.height();
  const int width = disparity.width();
  double sum_x = 0.0;
  double sum_y = 0.0;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int right = u == width - 1 ? 0 : u + 1;
      sum_x += std::abs(disparity(v, right) - disparity(v, u)) * w.horizontal(v, u);
      if (v + 1 < height) {
        sum_y += std::abs(disparity(v + 1, u) - disparity(v, u)) * w.vertical(v, u);
      }
    }
  }
  double loss = sum_x / (static_cast<double>(height) * width);
  if (height > 1) loss += sum_y / (static_cast<double>(height - 1) * width);
  return loss / mean;
}

ScalarMap smoothness_gradient(const ScalarMap& disparity, const ErpImage& image) {
  const double mean = checked_mean(disparity, image);
  const ImageEdgeWeights w = edge_weights(image);
  const int height = disparity.height();
  const int width = disparity.width();
  const double nx = static_cast<double>(height) * width;
  const double ny = static_cast<double>(height - 1) * width;

  // Gradient with respect to the normalized disparity d* = d / mean.
  ScalarMap g(height, width);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int right = u == width - 1 ? 0 : u + 1;
      const double sx = sign_of(disparity(v, right) - disparity(v, u)) * w.horizontal(v, u) / nx;
      g(v, right) += sx;
      g(v, u) -= sx;
      if (v + 1 < height) {
        const double sy = sign_of(disparity(v + 1, u) - disparity(v, u)) * w.vertical(v, u) / ny;
        g(v + 1, u) += sy;
        g(v, u) -= sy;
      }
    }
  }
  // d*_j = d_j / mean, mean = sum(d) / N.
  const double n = static_cast<double>(disparity.size());
  double coupling = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) coupling += g[i] * disparity[i] / mean;
  ScalarMap grad(height, width);
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] = (g[i] - coupling / n) / mean;
  return grad;
}

double combine_losses(double l_rec, double l_pose, double l_sm, double l_exp,
                      const LossWeights& weights) {
  return l_rec + weights.lambda_pose * l_pose + weights.lambda_sm * l_sm +
         weights.lambda_exp * l_exp;
}

}  // namespace erpdepth
