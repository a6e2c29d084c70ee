#include "defocus/stack.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "defocus/errors.hpp"

namespace defocus {

namespace {

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// |3x3 Laplacian| of the luma plane, replicate padding.
Raster abs_laplacian(const Raster& image) {
  const Raster luma = to_luma(image);
  const int h = luma.height;
  const int w = luma.width;
  Raster out = Raster::zeros(h, w, 1);
  for (int y = 0; y < h; ++y) {
    const int yu = clamp_index(y - 1, h);
    const int yd = clamp_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xl = clamp_index(x - 1, w);
      const int xr = clamp_index(x + 1, w);
      const double v = luma.at(yu, x) + luma.at(yd, x) + luma.at(y, xl) +
                       luma.at(y, xr) - 4.0 * luma.at(y, x);
      out.at(y, x) = std::abs(v);
    }
  }
  return out;
}

// Separable box sum with replicate padding, window = 2r+1.
Raster box_sum(const Raster& src, int r) {
  const int h = src.height;
  const int w = src.width;
  Raster tmp = Raster::zeros(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += src.at(y, clamp_index(x + k, w));
      tmp.at(y, x) = s;
    }
  }
  Raster out = Raster::zeros(h, w, 1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp.at(clamp_index(y + k, h), x);
      out.at(y, x) = s;
    }
  }
  return out;
}

}  // namespace

Raster focus_measure(const Raster& image, int window_px) {
  if (window_px < 1 || window_px % 2 == 0) {
    throw DomainError("focus measure window must be odd and >= 1, got " +
                      std::to_string(window_px));
  }
  if (!image.all_finite()) {
    throw DataError("focus measure input contains non-finite values");
  }
  Raster response = abs_laplacian(image);
  if (window_px == 1) return response;
  return box_sum(response, window_px / 2);
}

ComposeResult compose_all_in_focus(const FocusStack& stack, int window_px) {
  if (stack.size() < 2) {
    throw DomainError("compose requires at least 2 stack members, got " +
                      std::to_string(stack.size()));
  }
  const Raster& first = stack.members.front();
  if (stack.members.size() != stack.focus_depths_mm.size()) {
    throw DomainError("stack has " + std::to_string(stack.members.size()) +
                      " members but " +
                      std::to_string(stack.focus_depths_mm.size()) +
                      " focus depths");
  }
  for (std::size_t t = 0; t < stack.members.size(); ++t) {
    const Raster& m = stack.members[t];
    if (!m.same_shape(first)) {
      throw DomainError("stack member " + std::to_string(t) +
                        " shape differs from member 0");
    }
    if (!std::isfinite(stack.focus_depths_mm[t]) ||
        stack.focus_depths_mm[t] <= 0.0) {
      throw DomainError("focus depth " + std::to_string(t) +
                        " must be finite and positive");
    }
  }

  const int h = first.height;
  const int w = first.width;
  const int npx = h * w;

  std::vector<int> best_index(static_cast<std::size_t>(npx), 0);
  std::vector<double> best_measure;

  for (std::size_t t = 0; t < stack.members.size(); ++t) {
    const Raster measure = focus_measure(stack.members[t], window_px);
    if (t == 0) {
      best_measure = measure.data;
      continue;
    }
    for (int i = 0; i < npx; ++i) {
      // Strict > keeps the lowest index on ties.
      if (measure.data[static_cast<std::size_t>(i)] >
          best_measure[static_cast<std::size_t>(i)]) {
        best_measure[static_cast<std::size_t>(i)] =
            measure.data[static_cast<std::size_t>(i)];
        best_index[static_cast<std::size_t>(i)] = static_cast<int>(t);
      }
    }
  }

  ComposeResult result;
  result.all_in_focus = Raster::zeros(h, w, first.channels);
  result.depth = DepthMap::constant(h, w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int t = best_index[static_cast<std::size_t>(y * w + x)];
      const Raster& src = stack.members[static_cast<std::size_t>(t)];
      for (int c = 0; c < first.channels; ++c) {
        result.all_in_focus.at(y, x, c) = src.at(y, x, c);
      }
      result.depth.set(y, x, stack.focus_depths_mm[static_cast<std::size_t>(t)]);
    }
  }
  return result;
}

Mask detect_invalid(const DepthMap& depth) {
  Mask mask = Mask::none(depth.height, depth.width);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const bool bad = !depth.is_valid(y, x) ||
                       !std::isfinite(depth.value_at(y, x)) ||
                       depth.value_at(y, x) <= 0.0;
      mask.at(y, x) = bad ? 1 : 0;
    }
  }
  return mask;
}

DepthMap refine_depth(const DepthMap& depth_primary, const Mask& invalid,
                      const DepthMap& depth_fill) {
  if (depth_primary.height != invalid.height ||
      depth_primary.width != invalid.width) {
    throw DomainError("invalid mask shape differs from primary depth");
  }
  if (!depth_primary.same_shape(depth_fill)) {
    throw DomainError("fill depth shape differs from primary depth");
  }
  DepthMap out = DepthMap::constant(depth_primary.height,
                                    depth_primary.width, 0.0);
  for (int y = 0; y < depth_primary.height; ++y) {
    for (int x = 0; x < depth_primary.width; ++x) {
      if (invalid.at(y, x)) {
        if (!depth_fill.is_valid(y, x)) {
          throw DataError("fill depth is invalid at masked pixel (y=" +
                          std::to_string(y) + ", x=" + std::to_string(x) +
                          ")");
        }
        out.set(y, x, depth_fill.value_at(y, x));
      } else {
        out.set(y, x, depth_primary.value_at(y, x));
      }
    }
  }
  return out;
}

}  // namespace defocus
