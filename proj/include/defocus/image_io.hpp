#pragma once

#include <string>

#include "defocus/types.hpp"

namespace defocus {

enum class PngBitDepth { bits8 = 8, bits16 = 16 };

// Millimeters, or pixels of blur, per stored integer unit in 16-bit PNGs.
inline constexpr double kDefaultDepthUnitMm = 0.1;
inline constexpr double kDefocusPngUnitPx = 2e-4;

// Format is chosen by extension: .png (8/16-bit gray or RGB, values mapped
// linearly to [0,1]) or .pfm (portable float map, 1 or 3 channels, stored
// little-endian with scale -1.0, rows bottom to top).
Raster load_raster(const std::string& path);

// PNG saves clamp to [0,1] and quantize; PFM saves keep float32 precision.
// Non-finite samples are rejected.
void save_raster(const Raster& raster, const std::string& path,
                 PngBitDepth png_depth = PngBitDepth::bits16);

// Depth maps in millimeters. 16-bit grayscale PNG stores
// round(mm/unit_scale) with raw value 0 reserved for invalid pixels; values
// that would round to 0 or exceed 65535 are rejected. PFM stores millimeters
// directly with NaN marking invalid pixels.
DepthMap load_depth(const std::string& path,
                    double unit_scale = kDefaultDepthUnitMm);
void save_depth(const DepthMap& depth, const std::string& path,
                double unit_scale = kDefaultDepthUnitMm);

// Defocus maps in pixels of CoC diameter. PFM stores pixels directly with
// NaN as invalid. PNG uses the fixed unit kDefocusPngUnitPx (so the
// quantization error stays below 1e-4 px), which limits the representable
// range to [0, 65535 * kDefocusPngUnitPx]; the map must be fully valid.
DefocusMap load_defocus(const std::string& path);
void save_defocus(const DefocusMap& defocus, const std::string& path);

}  // namespace defocus
