#pragma once

#include <vector>

#include "defocus/optics.hpp"
#include "defocus/types.hpp"

namespace defocus {

struct RenderOptions {
  // Kernel support half-width in units of sigma.
  double truncation_sigmas = 3.0;
  // Hard cap on the kernel radius in pixels.
  int max_kernel_radius_px = 64;
  // Below this sigma a source pixel passes through unblurred.
  double min_sigma_px = 0.25;
  // Gaussian sigma per CoC-diameter pixel. 1.0 substitutes the CoC diameter
  // directly into the sigma slot; 0.5 treats it as diameter -> radius.
  double coc_to_sigma = 1.0;
  // Worker threads; 0 picks the hardware concurrency. Output bytes do not
  // depend on this value.
  unsigned threads = 1;

  void validate() const;
};

// Isotropic Gaussian point-spread weight
//   (1 / (2*pi*sigma^2)) * exp(-(dx^2 + dy^2) / (2*sigma^2)).
// Requires sigma > 0.
double gaussian_weight(double dx, double dy, double sigma);

// min(ceil(truncation_sigmas * sigma), max_kernel_radius_px), or 0 for
// sigma below min_sigma_px. Requires sigma >= 0.
int kernel_radius(double sigma, const RenderOptions& opts);

// Synthesizes one focused image from an all-in-focus image and a depth map.
// Every source pixel scatters its value over a square Gaussian footprint
// whose sigma follows from the circle of confusion at its depth; in-focus
// pixels (kernel radius 0) pass through as unit deltas. Each destination is
// normalized by its accumulated weight, so constant images are fixed points
// and weight lost off the image border is absorbed. Contributions are summed
// regardless of depth ordering (no occlusion handling).
//
// Output bytes are deterministic for any thread count: destinations are
// gathered per fixed 64x64 tile, scanning candidate sources in row-major
// order.
//
// Requires matching shapes and a fully valid depth map (refine first).
Raster render_focused(const Raster& all_in_focus, const DepthMap& depth,
                      const FocusSetting& setting, const LensConfig& lens,
                      const RenderOptions& opts = {});

// render_focused at each of the given focus depths, in order. The depths
// must increase strictly and each must exceed the focal length.
FocusStack render_stack(const Raster& all_in_focus, const DepthMap& depth,
                        const std::vector<double>& focus_depths_mm,
                        const LensConfig& lens,
                        const RenderOptions& opts = {});

}  // namespace defocus
