#include "erpdepth/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "erpdepth/errors.hpp"
#include "erpdepth/tensor_file.hpp"

namespace erpdepth {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

void require_matching(const FeatureMap& features, const DaumParams& params, int channels) {
  params.validate();
  if (features.channels() != channels) {
    throw ConfigError("feature map has " + std::to_string(features.channels()) +
                      " channels, parameters expect " + std::to_string(channels));
  }
  if (features.height() < 1 || features.width() < 1) {
    throw ConfigError("feature map must be non-empty");
  }
}

// Intermediate values of one forward pass, kept for the backward pass.
struct DaumTrace {
  FeatureMap concat;      // 2C x 2h x 2w
  Eigen::VectorXd pooled;
  Eigen::VectorXd hidden_pre;
  Eigen::VectorXd hidden;
  Eigen::VectorXd gate;
  FeatureMap scaled;      // concat * gate
  FeatureMap conv;        // C x 2h x 2w, pre-activation
  std::vector<double> row_weights;
};

Eigen::VectorXd channel_means(const FeatureMap& f) {
  Eigen::VectorXd means(f.channels());
  const auto n = static_cast<double>(f.plane_size());
  for (int c = 0; c < f.channels(); ++c) {
    const double* p = f.plane(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.plane_size(); ++i) sum += p[i];
    means[c] = sum / n;
  }
  return means;
}

void excite(const FeatureMap& input, const DaumParams& params, DaumTrace& trace) {
  trace.pooled = channel_means(input);
  trace.hidden_pre = params.se_reduce_weight * trace.pooled + params.se_reduce_bias;
  trace.hidden = trace.hidden_pre.cwiseMax(0.0);
  const Eigen::VectorXd logits = params.se_expand_weight * trace.hidden + params.se_expand_bias;
  trace.gate = logits.unaryExpr([](double x) { return sigmoid(x); });
  trace.scaled = FeatureMap(input.channels(), input.height(), input.width());
  for (int c = 0; c < input.channels(); ++c) {
    const double* src = input.plane(c);
    double* dst = trace.scaled.plane(c);
    for (std::size_t i = 0; i < input.plane_size(); ++i) dst[i] = src[i] * trace.gate[c];
  }
}

DaumTrace run_forward(const FeatureMap& features, const DaumParams& params) {
  const int channels = params.channels;
  const int height = 2 * features.height();
  const int width = 2 * features.width();
  DaumTrace trace;
  trace.row_weights = latitude_weight_rows(height);
  trace.concat = FeatureMap(2 * channels, height, width);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const double w = trace.row_weights[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) {
        const double up = features(c, y / 2, x / 2);
        trace.concat(c, y, x) = up;
        trace.concat(channels + c, y, x) = up * w;
      }
    }
  }
  excite(trace.concat, params, trace);

  trace.conv = FeatureMap(channels, height, width);
  const std::size_t n = trace.conv.plane_size();
  for (int o = 0; o < channels; ++o) {
    double* out = trace.conv.plane(o);
    std::fill(out, out + n, params.conv_bias[o]);
    for (int k = 0; k < 2 * channels; ++k) {
      const double w = params.conv_weight(o, k);
      const double* in = trace.scaled.plane(k);
      for (std::size_t i = 0; i < n; ++i) out[i] += w * in[i];
    }
  }
  return trace;
}

}  // namespace

double latitude_weight(int row, int height) {
  return std::cos((row - height / 2.0 + 0.5) * kPi / height);
}

std::vector<double> latitude_weight_rows(int height) {
  std::vector<double> rows(static_cast<std::size_t>(std::max(height, 0)));
  for (int v = 0; v < height; ++v) rows[static_cast<std::size_t>(v)] = latitude_weight(v, height);
  return rows;
}

ScalarMap latitude_weight_map(const ErpGrid& grid) {
  grid.validate();
  ScalarMap map(grid.height, grid.width);
  for (int v = 0; v < grid.height; ++v) {
    const double w = latitude_weight(v, grid.height);
    for (int u = 0; u < grid.width; ++u) map(v, u) = w;
  }
  return map;
}

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) throw ConfigError("negative feature map shape");
  values_.assign(static_cast<std::size_t>(channels) * plane_size(), fill);
}

int DaumParams::hidden_size(int channels, int reduction_ratio) {
  return std::max(1, 2 * channels / reduction_ratio);
}

DaumParams DaumParams::zeros(int channels, int reduction_ratio) {
  if (channels < 1 || reduction_ratio < 1) {
    throw ConfigError("DAUM needs channels >= 1 and reduction ratio >= 1");
  }
  const int wide = 2 * channels;
  const int hidden = hidden_size(channels, reduction_ratio);
  DaumParams p;
  p.channels = channels;
  p.reduction_ratio = reduction_ratio;
  p.se_reduce_weight = Eigen::MatrixXd::Zero(hidden, wide);
  p.se_reduce_bias = Eigen::VectorXd::Zero(hidden);
  p.se_expand_weight = Eigen::MatrixXd::Zero(wide, hidden);
  p.se_expand_bias = Eigen::VectorXd::Zero(wide);
  p.conv_weight = Eigen::MatrixXd::Zero(channels, wide);
  p.conv_bias = Eigen::VectorXd::Zero(channels);
  return p;
}

DaumParams DaumParams::random(int channels, std::uint64_t seed, int reduction_ratio,
                              double scale) {
  DaumParams p = zeros(channels, reduction_ratio);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::VectorXd flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = dist(rng);
  p.unflatten(flat);
  return p;
}

void DaumParams::validate() const {
  if (channels < 1 || reduction_ratio < 1) throw ConfigError("DAUM parameters are empty");
  const int wide = 2 * channels;
  const int hidden = hidden_size(channels, reduction_ratio);
  const bool shapes_ok =
      se_reduce_weight.rows() == hidden && se_reduce_weight.cols() == wide &&
      se_reduce_bias.size() == hidden && se_expand_weight.rows() == wide &&
      se_expand_weight.cols() == hidden && se_expand_bias.size() == wide &&
      conv_weight.rows() == channels && conv_weight.cols() == wide &&
      conv_bias.size() == channels;
  if (!shapes_ok) throw ConfigError("DAUM parameter shapes are inconsistent with C");
  if (!flatten().allFinite()) throw ConfigError("DAUM parameters contain non-finite values");
}

Eigen::VectorXd DaumParams::flatten() const {
  const Eigen::Index total = se_reduce_weight.size() + se_reduce_bias.size() +
                             se_expand_weight.size() + se_expand_bias.size() +
                             conv_weight.size() + conv_bias.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) = block.reshaped();
    at += block.size();
  };
  put(se_reduce_weight);
  put(se_reduce_bias);
  put(se_expand_weight);
  put(se_expand_bias);
  put(conv_weight);
  put(conv_bias);
  return flat;
}

void DaumParams::unflatten(const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  auto take = [&](auto& block) {
    block.reshaped() = flat.segment(at, block.size());
    at += block.size();
  };
  if (flat.size() != flatten().size()) throw ConfigError("flat DAUM vector has the wrong size");
  take(se_reduce_weight);
  take(se_reduce_bias);
  take(se_expand_weight);
  take(se_expand_bias);
  take(conv_weight);
  take(conv_bias);
}

FeatureMap se_block(const FeatureMap& features, const DaumParams& params) {
  require_matching(features, params, 2 * params.channels);
  DaumTrace trace;
  excite(features, params, trace);
  return std::move(trace.scaled);
}

FeatureMap daum_forward(const FeatureMap& features, const DaumParams& params) {
  require_matching(features, params, params.channels);
  DaumTrace trace = run_forward(features, params);
  for (double& value : trace.conv.values()) value = elu(value);
  return std::move(trace.conv);
}

DaumGradients daum_backward(const FeatureMap& features, const DaumParams& params,
                            const FeatureMap& upstream) {
  require_matching(features, params, params.channels);
  const int channels = params.channels;
  const int wide = 2 * channels;
  if (upstream.channels() != channels || upstream.height() != 2 * features.height() ||
      upstream.width() != 2 * features.width()) {
    throw ConfigError("upstream gradient does not match the DAUM output shape");
  }
  const DaumTrace trace = run_forward(features, params);
  const std::size_t n = trace.conv.plane_size();

  DaumGradients grads{FeatureMap(channels, features.height(), features.width()),
                      DaumParams::zeros(channels, params.reduction_ratio)};

  // Through ELU.
  FeatureMap d_conv(channels, trace.conv.height(), trace.conv.width());
  for (std::size_t i = 0; i < d_conv.values().size(); ++i) {
    d_conv.values()[i] = upstream.values()[i] * elu_derivative(trace.conv.values()[i]);
  }

  // 1x1 convolution.
  FeatureMap d_scaled(wide, trace.conv.height(), trace.conv.width());
  for (int o = 0; o < channels; ++o) {
    const double* g = d_conv.plane(o);
    double bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) bias += g[i];
    grads.params.conv_bias[o] = bias;
    for (int k = 0; k < wide; ++k) {
      const double* s = trace.scaled.plane(k);
      double* ds = d_scaled.plane(k);
      const double w = params.conv_weight(o, k);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += g[i] * s[i];
        ds[i] += w * g[i];
      }
      grads.params.conv_weight(o, k) = acc;
    }
  }

  // Channel gate and the direct path into the concatenation.
  Eigen::VectorXd d_gate(wide);
  FeatureMap d_concat(wide, trace.conv.height(), trace.conv.width());
  for (int k = 0; k < wide; ++k) {
    const double* ds = d_scaled.plane(k);
    const double* z = trace.concat.plane(k);
    double* dz = d_concat.plane(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += ds[i] * z[i];
      dz[i] = ds[i] * trace.gate[k];
    }
    d_gate[k] = acc;
  }

  // Excitation MLP.
  const Eigen::VectorXd d_logits =
      d_gate.cwiseProduct(trace.gate.cwiseProduct((1.0 - trace.gate.array()).matrix()));
  grads.params.se_expand_weight = d_logits * trace.hidden.transpose();
  grads.params.se_expand_bias = d_logits;
  Eigen::VectorXd d_hidden = params.se_expand_weight.transpose() * d_logits;
  for (Eigen::Index j = 0; j < d_hidden.size(); ++j) {
    if (!(trace.hidden_pre[j] > 0.0)) d_hidden[j] = 0.0;
  }
  grads.params.se_reduce_weight = d_hidden * trace.pooled.transpose();
  grads.params.se_reduce_bias = d_hidden;
  const Eigen::VectorXd d_pooled = params.se_reduce_weight.transpose() * d_hidden;

  // Squeeze (mean pool) feeds every position of its channel.
  for (int k = 0; k < wide; ++k) {
    const double share = d_pooled[k] / static_cast<double>(n);
    double* dz = d_concat.plane(k);
    for (std::size_t i = 0; i < n; ++i) dz[i] += share;
  }

  // Concatenation halves and the nearest-neighbor upsample.
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < trace.conv.height(); ++y) {
      const double w = trace.row_weights[static_cast<std::size_t>(y)];
      for (int x = 0; x < trace.conv.width(); ++x) {
        grads.features(c, y / 2, x / 2) +=
            d_concat(c, y, x) + w * d_concat(channels + c, y, x);
      }
    }
  }
  return grads;
}

void save_daum_params(const std::string& path, const DaumParams& params) {
  params.validate();
  TensorFile file;
  file.metadata["format"] = "daum";
  file.metadata["channels"] = std::to_string(params.channels);
  file.metadata["reduction_ratio"] = std::to_string(params.reduction_ratio);
  auto add = [&](const std::string& name, const auto& block) {
    NamedTensor t;
    if (block.cols() == 1) {
      t.shape = {static_cast<std::int64_t>(block.rows())};
    } else {
      t.shape = {static_cast<std::int64_t>(block.rows()), static_cast<std::int64_t>(block.cols())};
    }
    t.data.reserve(static_cast<std::size_t>(block.size()));
    // Row-major on disk.
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        t.data.push_back(static_cast<float>(block(r, c)));
      }
    }
    file.tensors.emplace(name, std::move(t));
  };
  add("se_reduce.weight", params.se_reduce_weight);
  add("se_reduce.bias", params.se_reduce_bias);
  add("se_expand.weight", params.se_expand_weight);
  add("se_expand.bias", params.se_expand_bias);
  add("conv1x1.weight", params.conv_weight);
  add("conv1x1.bias", params.conv_bias);
  write_tensor_file(path, file);
}

DaumParams load_daum_params(const std::string& path) {
  const TensorFile file = read_tensor_file(path);
  int channels = 0;
  int ratio = 16;
  try {
    channels = std::stoi(file.metadata.at("channels"));
    ratio = std::stoi(file.metadata.at("reduction_ratio"));
  } catch (const std::exception&) {
    throw InputError("'" + path + "' lacks DAUM channel metadata");
  }
  DaumParams params = DaumParams::zeros(channels, ratio);
  auto fetch = [&](const std::string& name, auto& block) {
    const auto it = file.tensors.find(name);
    if (it == file.tensors.end()) throw InputError("'" + path + "' is missing " + name);
    if (it->second.data.size() != static_cast<std::size_t>(block.size())) {
      throw InputError("'" + path + "' tensor " + name + " has the wrong size");
    }
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = it->second.data[i++];
    }
  };
  fetch("se_reduce.weight", params.se_reduce_weight);
  fetch("se_reduce.bias", params.se_reduce_bias);
  fetch("se_expand.weight", params.se_expand_weight);
  fetch("se_expand.bias", params.se_expand_bias);
  fetch("conv1x1.weight", params.conv_weight);
  fetch("conv1x1.bias", params.conv_bias);
  params.validate();
  return params;
}

}  // namespace erpdepth
