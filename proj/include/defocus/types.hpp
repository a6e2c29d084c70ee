#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace defocus {

// Dense H x W x C image, row-major with interleaved channels. Photographic
// content is nominally in [0, 1]; focus-measure maps may exceed that.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  static Raster zeros(int height, int width, int channels = 1);

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_shape(const Raster& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
  bool all_finite() const;
};

// Rec.601 luma (0.299, 0.587, 0.114). Single-channel input is copied through.
Raster to_luma(const Raster& image);

// Per-pixel boolean field; nonzero means "marked".
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  static Mask none(int height, int width);

  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t count() const;
};

// Dense scalar field with per-pixel validity. Depth maps store millimeters
// (valid pixels finite and > 0); defocus maps store CoC diameters in pixels
// (valid pixels finite and >= 0).
struct GridMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  static GridMap constant(int height, int width, double value);

  double value_at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  double& value_at(int y, int x) {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  bool is_valid(int y, int x) const {
    return valid[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int y, int x, double value, bool is_valid = true) {
    const std::size_t i = static_cast<std::size_t>(y) * width + x;
    values[i] = value;
    valid[i] = is_valid ? 1 : 0;
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool fully_valid() const;
  std::size_t valid_count() const;
  bool same_shape(const GridMap& other) const {
    return height == other.height && width == other.width;
  }
};

using DepthMap = GridMap;
using DefocusMap = GridMap;

// Ordered sequence of images of one scene at increasing focus depths.
struct FocusStack {
  std::vector<Raster> members;
  std::vector<double> focus_depths_mm;

  std::size_t size() const { return members.size(); }
};

// Throws DataError unless: at least one member, matching lengths, identical
// member shapes, strictly increasing focus depths.
void validate_stack(const FocusStack& stack);

}  // namespace defocus
