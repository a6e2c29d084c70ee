#pragma once

#include <optional>

#include "defocus/types.hpp"

namespace defocus {

// Optical constants of a thin-lens camera. The circle-of-confusion scale
// `coc_scale` converts CoC millimeters on the sensor into output pixels:
// it equals aperture / (pixel_size * output_scale) with aperture = F / N.
// Calibrated rigs often publish the combined scale directly, in which case
// pixel_size_mm and output_scale stay at their neutral defaults.
struct LensConfig {
  double focal_length_mm = 50.0;
  double f_number = 1.4;
  double pixel_size_mm = 1.0;
  double output_scale = 1.0;
  double coc_scale = 50.0 / 1.4;

  // Derives coc_scale = (F / N) / (pixel_size * output_scale).
  static LensConfig from_physical(double focal_length_mm, double f_number,
                                  double pixel_size_mm, double output_scale);

  // Takes the combined CoC scale as calibrated; pixel size and output scale
  // default to 1.
  static LensConfig from_coc_scale(double focal_length_mm, double f_number,
                                   double coc_scale);

  double aperture_mm() const { return focal_length_mm / f_number; }

  // Throws DomainError unless every constant is positive and finite.
  void validate() const;
};

// One focus configuration: the scene depth rendered perfectly sharp, plus
// optionally the lens-to-sensor distance it corresponds to.
struct FocusSetting {
  double focus_depth_mm = 0.0;
  std::optional<double> sensor_distance_mm;

  static FocusSetting at_depth(double focus_depth_mm);
  static FocusSetting from_sensor(double sensor_distance_mm,
                                  const LensConfig& lens);

  // Throws DomainError unless focus_depth_mm > focal length, and (when the
  // sensor distance is present) the thin-lens relation 1/D_f + 1/v = 1/F
  // holds to 1e-9 relative.
  void validate(const LensConfig& lens) const;
};

// Thin-lens equation solved for the focus depth: D_f = v*F / (v - F).
// Requires v > F > 0.
double focus_depth_from_sensor(double sensor_distance_mm,
                               double focal_length_mm);

// Inverse of focus_depth_from_sensor: v = D_f*F / (D_f - F).
// Requires D_f > F > 0.
double sensor_from_focus_depth(double focus_depth_mm, double focal_length_mm);

// CoC diameter in output pixels for an object at depth_mm:
//   coc_scale * |depth - D_f| / depth * F / (D_f - F).
// Nonnegative; zero exactly on the focus plane. The value is not clamped to
// the image size; bounding the blur footprint is the renderer's concern.
double coc_pixels(double depth_mm, const FocusSetting& setting,
                  const LensConfig& lens);

// Per-pixel coc_pixels over a depth map. Invalid pixels stay invalid (value
// 0); a valid pixel <= 0 raises DataError naming the first offender in
// row-major order.
DefocusMap defocus_map_from_depth(const DepthMap& depth,
                                  const FocusSetting& setting,
                                  const LensConfig& lens);

}  // namespace defocus
