#pragma once

#include <string>

#include "defocus/optics.hpp"
#include "defocus/types.hpp"

namespace defocus {

// Depth evaluation summary. Thresholded accuracies are fractions in [0,1];
// the remaining fields are error magnitudes (>= 0).
struct MetricReport {
  double delta_1_05 = 0.0;
  double delta_1_15 = 0.0;
  double delta_1_25 = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double log10_err = 0.0;

  // Column order is fixed; callers rely on it when concatenating rows.
  static std::string csv_header();
  std::string to_csv_row() const;
  // One key=value pair per line, same order as the CSV columns.
  std::string to_kv() const;
};

struct LossWeights {
  double lambda1 = 1.0;  // depth SSIM term
  double lambda2 = 1.0;  // depth scale-invariant log term
  double lambda3 = 1.0;  // defocus SSIM term
  double lambda4 = 1.0;  // defocus scale-invariant log term
  double lambda5 = 1.0;  // physical consistency term

  void validate() const;  // all finite and >= 0
};

// Computes accuracy/error statistics over the intersection of the two
// validity masks. Every compared pixel must be > 0 in both maps.
MetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt);

// Mean structural similarity over an 11x11 Gaussian window (sigma 1.5),
// C1=(0.01*L)^2, C2=(0.03*L)^2 with L = dynamic_range. Only windows fully
// inside the image contribute, so both dimensions must be >= 11. Inputs are
// single-channel. Result lies in [-1, 1]; ssim(x, x) == 1 exactly.
double ssim(const Raster& a, const Raster& b, double dynamic_range);

// Scale-invariant log error: with d = ln(gt) - ln(pred) over the N pixels in
// the valid intersection, returns (1/N)*sum(d^2) - (1/(2N^2))*(sum d)^2.
// Nonnegative; zero only when pred == gt. Compared values must be > 0.
double silog_term(const GridMap& pred, const GridMap& gt);

// lambda1 * (1 - ssim)/2 + lambda2 * silog. Maps must be fully valid; the
// SSIM dynamic range defaults (0) to the ground-truth value range, floored
// at 1e-6 so constant maps stay well defined.
double depth_loss(const DepthMap& pred, const DepthMap& gt,
                  const LossWeights& w, double dynamic_range = 0.0);

// Same shape as depth_loss with lambda3/lambda4. Defocus maps may contain
// exact zeros (pixels on the focus plane), so values are floored at 1e-6 px
// before the log term only; SSIM sees the raw values.
double defocus_loss(const DefocusMap& pred, const DefocusMap& gt,
                    const LossWeights& w, double dynamic_range = 0.0);

// lambda5 * ||j_hat - defocus_from(d_hat)||_2 / N over all N pixels. Both
// maps must be fully valid; depths must be positive.
double physical_consistency(const DefocusMap& j_hat, const DepthMap& d_hat,
                            const FocusSetting& setting, const LensConfig& lens,
                            const LossWeights& w);

// depth_loss + defocus_loss + physical_consistency(j_pred, d_pred).
double total_loss(const DepthMap& d_pred, const DepthMap& d_gt,
                  const DefocusMap& j_pred, const DefocusMap& j_gt,
                  const FocusSetting& setting, const LensConfig& lens,
                  const LossWeights& w, double depth_dynamic_range = 0.0,
                  double defocus_dynamic_range = 0.0);

// Min-max rescale of the valid pixels to [0,1]. A constant map rescales to
// all zeros. Invalid pixels stay invalid.
GridMap normalize_map(const GridMap& m);

// Shortest decimal string that round-trips the value.
std::string format_double(double value);

}  // namespace defocus
