#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "erpdepth/raster.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {

// Latitude weight cos((v - H/2 + 1/2) * pi / H) for row v of an image of
// height H. Takes the row count directly so it also serves feature maps
// whose width is not 2H.
double latitude_weight(int row, int height);
std::vector<double> latitude_weight_rows(int height);

// H x W map of latitude weights, constant across columns.
ScalarMap latitude_weight_map(const ErpGrid& grid);

// C x h x w activations, channel-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  double& operator()(int c, int y, int x) { return values_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return values_[index(c, y, x)]; }
  double* plane(int c) { return values_.data() + static_cast<std::size_t>(c) * plane_size(); }
  const double* plane(int c) const {
    return values_.data() + static_cast<std::size_t>(c) * plane_size();
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const FeatureMap& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

 private:
  std::size_t index(int c, int y, int x) const {
    return static_cast<std::size_t>(c) * plane_size() +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// Parameters of one distortion-aware upsampling block operating on C input
// channels: a squeeze-and-excitation bottleneck over the 2C concatenated
// channels followed by a 1x1 convolution back to C channels.
struct DaumParams {
  int channels = 0;
  int reduction_ratio = 16;
  Eigen::MatrixXd se_reduce_weight;  // hidden x 2C
  Eigen::VectorXd se_reduce_bias;    // hidden
  Eigen::MatrixXd se_expand_weight;  // 2C x hidden
  Eigen::VectorXd se_expand_bias;    // 2C
  Eigen::MatrixXd conv_weight;       // C x 2C
  Eigen::VectorXd conv_bias;         // C

  // max(1, 2C / reduction_ratio).
  static int hidden_size(int channels, int reduction_ratio);

  static DaumParams zeros(int channels, int reduction_ratio = 16);
  // Deterministic uniform initialization in [-scale, scale].
  static DaumParams random(int channels, std::uint64_t seed, int reduction_ratio = 16,
                           double scale = 0.1);

  // Throws ConfigError on inconsistent shapes or non-finite entries.
  void validate() const;

  // Flat parameter vector in the order reduce W, reduce b, expand W,
  // expand b, conv W, conv b (matrices column-major).
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

// Channel attention: global average pool, ReLU bottleneck, sigmoid gate,
// channel-wise rescale. `features` has 2C channels.
FeatureMap se_block(const FeatureMap& features, const DaumParams& params);

// Nearest-neighbor x2 upsample, concatenate [up, up * latitude weight],
// SE block, 1x1 convolution to C channels, ELU. The weight is evaluated
// with the height of the upsampled map.
FeatureMap daum_forward(const FeatureMap& features, const DaumParams& params);

struct DaumGradients {
  FeatureMap features;
  DaumParams params;  // same layout as the forward parameters
};

// Gradients of <upstream, daum_forward(features, params)>.
DaumGradients daum_backward(const FeatureMap& features, const DaumParams& params,
                            const FeatureMap& upstream);

// Named-tensor container: 8-byte little-endian header length, a JSON header
// mapping tensor names to dtype/shape/byte offsets, then raw little-endian
// float32 data.
void save_daum_params(const std::string& path, const DaumParams& params);
DaumParams load_daum_params(const std::string& path);

}  // namespace erpdepth
