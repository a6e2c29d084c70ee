#pragma once

#include "defocus/types.hpp"

namespace defocus {

// Per-pixel focus measure: Rec.601 luma, 3x3 Laplacian with replicate
// padding, absolute value, box sum over window_px x window_px (replicate at
// the borders). window_px must be odd; 1 disables the box sum.
Raster focus_measure(const Raster& image, int window_px);

struct ComposeResult {
  Raster all_in_focus;
  DepthMap depth;
};

// Picks, per pixel, the stack member with the largest focus measure (ties
// resolve to the lowest index) and assembles the all-in-focus image and the
// shape-from-focus depth map from that selection. The depth output is fully
// valid and quantized to the stack's focus depths. Requires T >= 2; member
// ordering is not assumed.
ComposeResult compose_all_in_focus(const FocusStack& stack, int window_px = 9);

// Marks pixels that are non-finite, <= 0, or already flagged invalid.
Mask detect_invalid(const DepthMap& depth);

// Replaces masked pixels of depth_primary with depth_fill. The fill source
// must be valid at every masked pixel; the result is fully valid.
DepthMap refine_depth(const DepthMap& depth_primary, const Mask& invalid,
                      const DepthMap& depth_fill);

}  // namespace defocus
