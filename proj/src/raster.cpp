#include "erpdepth/raster.hpp"

#include <cmath>
#include <string>

#include "erpdepth/errors.hpp"

namespace erpdepth {

ErpImage::ErpImage(const ErpGrid& grid, int channels, double fill)
    : grid_(grid), channels_(channels) {
  grid.validate();
  if (channels < 1) throw ConfigError("image needs at least one channel");
  values_.assign(grid.pixel_count() * static_cast<std::size_t>(channels), fill);
}

void ErpImage::validate() const {
  grid_.validate();
  if (values_.size() != grid_.pixel_count() * static_cast<std::size_t>(channels_)) {
    throw ConfigError("image buffer does not match its grid");
  }
  for (double value : values_) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
      throw ConfigError("image intensity outside [0, 1]: " + std::to_string(value));
    }
  }
}

DepthMap::DepthMap(const ErpGrid& g, double fill)
    : grid(g), values(g.height, g.width, fill), valid(g.height, g.width, 1) {
  g.validate();
}

void DepthMap::validate() const {
  grid.validate();
  if (!values.same_shape(grid.height, grid.width) ||
      !valid.same_shape(grid.height, grid.width)) {
    throw ConfigError("depth map planes do not match the grid");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (valid[i] && !(std::isfinite(values[i]) && values[i] > 0.0)) {
      throw ConfigError("valid depth entry must be finite and positive");
    }
  }
}

}  // namespace erpdepth
