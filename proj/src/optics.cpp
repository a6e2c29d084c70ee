#include "defocus/optics.hpp"

#include <cmath>
#include <string>

#include "defocus/errors.hpp"

namespace defocus {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

// Single expression shared by coc_pixels and defocus_map_from_depth so the
// two produce bit-identical values for the same inputs.
inline double coc_formula(double coc_scale, double focal_mm, double focus_mm,
                          double depth_mm) {
  return coc_scale * (std::abs(depth_mm - focus_mm) / depth_mm) *
         (focal_mm / (focus_mm - focal_mm));
}

}  // namespace

LensConfig LensConfig::from_physical(double focal_length_mm, double f_number,
                                     double pixel_size_mm,
                                     double output_scale) {
  LensConfig lens;
  lens.focal_length_mm = focal_length_mm;
  lens.f_number = f_number;
  lens.pixel_size_mm = pixel_size_mm;
  lens.output_scale = output_scale;
  lens.validate();
  lens.coc_scale =
      (focal_length_mm / f_number) / (pixel_size_mm * output_scale);
  return lens;
}

LensConfig LensConfig::from_coc_scale(double focal_length_mm, double f_number,
                                      double coc_scale) {
  LensConfig lens;
  lens.focal_length_mm = focal_length_mm;
  lens.f_number = f_number;
  lens.pixel_size_mm = 1.0;
  lens.output_scale = 1.0;
  lens.coc_scale = coc_scale;
  lens.validate();
  return lens;
}

void LensConfig::validate() const {
  require_positive(focal_length_mm, "focal_length_mm");
  require_positive(f_number, "f_number");
  require_positive(pixel_size_mm, "pixel_size_mm");
  require_positive(output_scale, "output_scale");
  require_positive(coc_scale, "coc_scale");
}

FocusSetting FocusSetting::at_depth(double focus_depth_mm) {
  FocusSetting s;
  s.focus_depth_mm = focus_depth_mm;
  return s;
}

FocusSetting FocusSetting::from_sensor(double sensor_distance_mm,
                                       const LensConfig& lens) {
  FocusSetting s;
  s.focus_depth_mm =
      focus_depth_from_sensor(sensor_distance_mm, lens.focal_length_mm);
  s.sensor_distance_mm = sensor_distance_mm;
  return s;
}

void FocusSetting::validate(const LensConfig& lens) const {
  if (!(focus_depth_mm > lens.focal_length_mm)) {
    throw DomainError(
        "focus depth must exceed the focal length (no real image forms)");
  }
  if (sensor_distance_mm) {
    const double lhs = 1.0 / focus_depth_mm + 1.0 / *sensor_distance_mm;
    const double rhs = 1.0 / lens.focal_length_mm;
    if (std::abs(lhs - rhs) > 1e-9 * rhs) {
      throw DomainError(
          "focus depth and sensor distance violate the thin-lens relation");
    }
  }
}

double focus_depth_from_sensor(double sensor_distance_mm,
                               double focal_length_mm) {
  require_positive(focal_length_mm, "focal_length_mm");
  if (!(sensor_distance_mm > focal_length_mm)) {
    throw DomainError("sensor distance must exceed the focal length");
  }
  return sensor_distance_mm * focal_length_mm /
         (sensor_distance_mm - focal_length_mm);
}

double sensor_from_focus_depth(double focus_depth_mm, double focal_length_mm) {
  require_positive(focal_length_mm, "focal_length_mm");
  if (!(focus_depth_mm > focal_length_mm)) {
    throw DomainError("focus depth must exceed the focal length");
  }
  return focus_depth_mm * focal_length_mm /
         (focus_depth_mm - focal_length_mm);
}

double coc_pixels(double depth_mm, const FocusSetting& setting,
                  const LensConfig& lens) {
  lens.validate();
  setting.validate(lens);
  if (!(depth_mm > 0.0)) {
    throw DomainError("object depth must be positive");
  }
  return coc_formula(lens.coc_scale, lens.focal_length_mm,
                     setting.focus_depth_mm, depth_mm);
}

DefocusMap defocus_map_from_depth(const DepthMap& depth,
                                  const FocusSetting& setting,
                                  const LensConfig& lens) {
  lens.validate();
  setting.validate(lens);
  DefocusMap out;
  out.height = depth.height;
  out.width = depth.width;
  out.values.assign(depth.pixel_count(), 0.0);
  out.valid = depth.valid;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * depth.width + x;
      if (!depth.valid[i]) continue;
      const double d = depth.values[i];
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw DataError("depth value " + std::to_string(d) + " at pixel (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) +
                        ") must be positive");
      }
      out.values[i] = coc_formula(lens.coc_scale, lens.focal_length_mm,
                                  setting.focus_depth_mm, d);
    }
  }
  return out;
}

}  // namespace defocus
