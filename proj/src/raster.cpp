#include "defocus/types.hpp"

#include <cmath>
#include <string>

#include "defocus/errors.hpp"

namespace defocus {

Raster Raster::zeros(int height, int width, int channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DomainError("raster dimensions must be positive");
  }
  Raster r;
  r.height = height;
  r.width = width;
  r.channels = channels;
  r.data.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  return r;
}

bool Raster::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Raster to_luma(const Raster& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) {
    throw DataError("luma conversion expects 1 or 3 channels, got " +
                    std::to_string(image.channels));
  }
  Raster out = Raster::zeros(image.height, image.width, 1);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double* px = &image.data[i * 3];
    out.data[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

Mask Mask::none(int height, int width) {
  Mask m;
  m.height = height;
  m.width = width;
  m.data.assign(static_cast<std::size_t>(height) * width, 0);
  return m;
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (std::uint8_t v : data) n += (v != 0);
  return n;
}

GridMap GridMap::constant(int height, int width, double value) {
  if (height < 1 || width < 1) {
    throw DomainError("map dimensions must be positive");
  }
  GridMap m;
  m.height = height;
  m.width = width;
  m.values.assign(static_cast<std::size_t>(height) * width, value);
  m.valid.assign(static_cast<std::size_t>(height) * width, 1);
  return m;
}

bool GridMap::fully_valid() const {
  for (std::uint8_t v : valid) {
    if (!v) return false;
  }
  return true;
}

std::size_t GridMap::valid_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : valid) n += (v != 0);
  return n;
}

void validate_stack(const FocusStack& stack) {
  if (stack.members.empty()) throw DataError("focus stack is empty");
  if (stack.members.size() != stack.focus_depths_mm.size()) {
    throw DataError("focus stack has " + std::to_string(stack.members.size()) +
                    " members but " +
                    std::to_string(stack.focus_depths_mm.size()) +
                    " focus depths");
  }
  for (std::size_t t = 1; t < stack.members.size(); ++t) {
    if (!stack.members[t].same_shape(stack.members[0])) {
      throw DataError("focus stack member " + std::to_string(t) +
                      " has a different shape");
    }
    if (!(stack.focus_depths_mm[t] > stack.focus_depths_mm[t - 1])) {
      throw DataError("focus depths must increase strictly (index " +
                      std::to_string(t) + ")");
    }
  }
}

}  // namespace defocus
