#include "defocus/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <system_error>
#include <vector>

#include "defocus/errors.hpp"

namespace defocus {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kLogFloor = 1e-6;

std::array<double, kSsimWindow> ssim_window() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double t = static_cast<double>(k - kSsimWindow / 2);
    g[static_cast<std::size_t>(k)] =
        std::exp(-(t * t) / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[static_cast<std::size_t>(k)];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable Gaussian filter keeping only positions where the window fits
// entirely inside the image. Output is (h - 10) x (w - 10).
std::vector<double> blur_valid(const std::vector<double>& src, int h, int w,
                               const std::array<double, kSsimWindow>& g) {
  const int wv = w - kSsimWindow + 1;
  const int hv = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) *
                           static_cast<std::size_t>(wv));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        s += g[static_cast<std::size_t>(k)] *
             src[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(x + k)];
      }
      rows[static_cast<std::size_t>(y) * static_cast<std::size_t>(wv) +
           static_cast<std::size_t>(x)] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(hv) *
                          static_cast<std::size_t>(wv));
  for (int y = 0; y < hv; ++y) {
    for (int x = 0; x < wv; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        s += g[static_cast<std::size_t>(k)] *
             rows[static_cast<std::size_t>(y + k) *
                      static_cast<std::size_t>(wv) +
                  static_cast<std::size_t>(x)];
      }
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(wv) +
          static_cast<std::size_t>(x)] = s;
    }
  }
  return out;
}

void require_fully_valid(const GridMap& m, const char* label) {
  if (!m.fully_valid()) {
    throw DataError(std::string(label) + " map must be fully valid");
  }
  for (double v : m.values) {
    if (!std::isfinite(v)) {
      throw DataError(std::string(label) + " map contains non-finite values");
    }
  }
}

Raster map_to_raster(const GridMap& m) {
  Raster r = Raster::zeros(m.height, m.width, 1);
  r.data = m.values;
  return r;
}

// Value range of gt, floored so constant maps still give positive constants.
double auto_dynamic_range(const GridMap& gt) {
  if (gt.values.empty()) throw DomainError("map is empty");
  double lo = gt.values.front();
  double hi = lo;
  for (double v : gt.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::max(hi - lo, 1e-6);
}

double structural_term(const GridMap& pred, const GridMap& gt,
                       double dynamic_range) {
  if (!std::isfinite(dynamic_range) || dynamic_range < 0.0) {
    throw DomainError("dynamic range must be finite and >= 0");
  }
  const double range =
      dynamic_range > 0.0 ? dynamic_range : auto_dynamic_range(gt);
  return ssim(map_to_raster(pred), map_to_raster(gt), range);
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string MetricReport::csv_header() {
  return "delta_1.05,delta_1.15,delta_1.25,abs_rel,sq_rel,rmse,rmse_log,"
         "log10";
}

std::string MetricReport::to_csv_row() const {
  std::string row = format_double(delta_1_05);
  for (double v : {delta_1_15, delta_1_25, abs_rel, sq_rel, rmse, rmse_log,
                   log10_err}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

std::string MetricReport::to_kv() const {
  const std::array<const char*, 8> keys = {
      "delta_1.05", "delta_1.15", "delta_1.25", "abs_rel",
      "sq_rel",     "rmse",       "rmse_log",   "log10"};
  const std::array<double, 8> vals = {delta_1_05, delta_1_15, delta_1_25,
                                      abs_rel,    sq_rel,     rmse,
                                      rmse_log,   log10_err};
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out += keys[i];
    out += '=';
    out += format_double(vals[i]);
    out += '\n';
  }
  return out;
}

void LossWeights::validate() const {
  const std::array<double, 5> ls = {lambda1, lambda2, lambda3, lambda4,
                                    lambda5};
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (!std::isfinite(ls[i]) || ls[i] < 0.0) {
      throw DomainError("lambda" + std::to_string(i + 1) +
                        " must be finite and >= 0, got " +
                        format_double(ls[i]));
    }
  }
}

MetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (!pred.same_shape(gt)) {
    throw DomainError("prediction and ground truth shapes differ");
  }
  long long n = 0;
  long long n105 = 0;
  long long n115 = 0;
  long long n125 = 0;
  double sum_abs_rel = 0.0;
  double sum_sq_rel = 0.0;
  double sum_sq = 0.0;
  double sum_sq_log = 0.0;
  double sum_log10 = 0.0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      if (!pred.is_valid(y, x) || !gt.is_valid(y, x)) continue;
      const double p = pred.value_at(y, x);
      const double g = gt.value_at(y, x);
      if (!(p > 0.0) || !(g > 0.0)) {
        throw DataError("nonpositive value at compared pixel (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) + ")");
      }
      ++n;
      const double ratio = std::max(p / g, g / p);
      if (ratio < 1.05) ++n105;
      if (ratio < 1.15) ++n115;
      if (ratio < 1.25) ++n125;
      const double diff = p - g;
      sum_abs_rel += std::abs(diff) / g;
      sum_sq_rel += diff * diff / g;
      sum_sq += diff * diff;
      const double dlog = std::log(p) - std::log(g);
      sum_sq_log += dlog * dlog;
      sum_log10 += std::abs(std::log10(p) - std::log10(g));
    }
  }
  if (n == 0) {
    throw DataError("no valid pixels common to prediction and ground truth");
  }
  const double dn = static_cast<double>(n);
  MetricReport r;
  r.delta_1_05 = static_cast<double>(n105) / dn;
  r.delta_1_15 = static_cast<double>(n115) / dn;
  r.delta_1_25 = static_cast<double>(n125) / dn;
  r.abs_rel = sum_abs_rel / dn;
  r.sq_rel = sum_sq_rel / dn;
  r.rmse = std::sqrt(sum_sq / dn);
  r.rmse_log = std::sqrt(sum_sq_log / dn);
  r.log10_err = sum_log10 / dn;
  return r;
}

double ssim(const Raster& a, const Raster& b, double dynamic_range) {
  if (!a.same_shape(b)) throw DomainError("ssim inputs have different shapes");
  if (a.channels != 1) {
    throw DomainError("ssim expects single-channel inputs, got " +
                      std::to_string(a.channels) + " channels");
  }
  if (a.height < kSsimWindow || a.width < kSsimWindow) {
    throw DomainError("ssim needs both dimensions >= " +
                      std::to_string(kSsimWindow));
  }
  if (!std::isfinite(dynamic_range) || dynamic_range <= 0.0) {
    throw DomainError("ssim dynamic range must be finite and positive");
  }
  if (!a.all_finite() || !b.all_finite()) {
    throw DataError("ssim inputs contain non-finite values");
  }

  const int h = a.height;
  const int w = a.width;
  const std::size_t npx = a.data.size();
  std::vector<double> aa(npx);
  std::vector<double> bb(npx);
  std::vector<double> ab(npx);
  for (std::size_t i = 0; i < npx; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }

  const auto g = ssim_window();
  const std::vector<double> mu_a = blur_valid(a.data, h, w, g);
  const std::vector<double> mu_b = blur_valid(b.data, h, w, g);
  const std::vector<double> m_aa = blur_valid(aa, h, w, g);
  const std::vector<double> m_bb = blur_valid(bb, h, w, g);
  const std::vector<double> m_ab = blur_valid(ab, h, w, g);

  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double mu_ab = mu_a[i] * mu_b[i];
    const double var_a = m_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_ab;
    const double num = (2.0 * mu_ab + c1) * (2.0 * cov + c2);
    const double den =
        (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

double silog_term(const GridMap& pred, const GridMap& gt) {
  if (!pred.same_shape(gt)) {
    throw DomainError("prediction and ground truth shapes differ");
  }
  long long n = 0;
  double sum_d = 0.0;
  double sum_d2 = 0.0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      if (!pred.is_valid(y, x) || !gt.is_valid(y, x)) continue;
      const double p = pred.value_at(y, x);
      const double g = gt.value_at(y, x);
      if (!(p > 0.0) || !(g > 0.0)) {
        throw DataError("nonpositive value at compared pixel (y=" +
                        std::to_string(y) + ", x=" + std::to_string(x) + ")");
      }
      // log(gt) - log(pred), computed from the ratio so that rescaling both
      // maps by an exactly representable factor cancels bitwise.
      const double d = -std::log(p / g);
      sum_d += d;
      sum_d2 += d * d;
      ++n;
    }
  }
  if (n == 0) {
    throw DataError("no valid pixels common to prediction and ground truth");
  }
  const double dn = static_cast<double>(n);
  return sum_d2 / dn - (sum_d * sum_d) / (2.0 * dn * dn);
}

double depth_loss(const DepthMap& pred, const DepthMap& gt,
                  const LossWeights& w, double dynamic_range) {
  w.validate();
  if (!pred.same_shape(gt)) {
    throw DomainError("prediction and ground truth shapes differ");
  }
  require_fully_valid(pred, "predicted depth");
  require_fully_valid(gt, "ground truth depth");
  const double s = structural_term(pred, gt, dynamic_range);
  return w.lambda1 * (1.0 - s) / 2.0 + w.lambda2 * silog_term(pred, gt);
}

double defocus_loss(const DefocusMap& pred, const DefocusMap& gt,
                    const LossWeights& w, double dynamic_range) {
  w.validate();
  if (!pred.same_shape(gt)) {
    throw DomainError("prediction and ground truth shapes differ");
  }
  require_fully_valid(pred, "predicted defocus");
  require_fully_valid(gt, "ground truth defocus");
  for (const GridMap* m : {&pred, &gt}) {
    for (double v : m->values) {
      if (v < 0.0) throw DataError("defocus values must be >= 0");
    }
  }
  const double s = structural_term(pred, gt, dynamic_range);

  // Ground-truth defocus is exactly zero on the focus plane, so the log term
  // sees floored copies; SSIM uses the raw values.
  DefocusMap pf = pred;
  DefocusMap gf = gt;
  for (double& v : pf.values) v = std::max(v, kLogFloor);
  for (double& v : gf.values) v = std::max(v, kLogFloor);
  return w.lambda3 * (1.0 - s) / 2.0 + w.lambda4 * silog_term(pf, gf);
}

double physical_consistency(const DefocusMap& j_hat, const DepthMap& d_hat,
                            const FocusSetting& setting, const LensConfig& lens,
                            const LossWeights& w) {
  w.validate();
  if (!j_hat.same_shape(d_hat)) {
    throw DomainError("defocus and depth shapes differ");
  }
  require_fully_valid(j_hat, "predicted defocus");
  require_fully_valid(d_hat, "predicted depth");
  for (double v : j_hat.values) {
    if (v < 0.0) throw DataError("defocus values must be >= 0");
  }
  const DefocusMap implied = defocus_map_from_depth(d_hat, setting, lens);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < j_hat.values.size(); ++i) {
    const double d = j_hat.values[i] - implied.values[i];
    sum_sq += d * d;
  }
  const double n = static_cast<double>(j_hat.values.size());
  return w.lambda5 * std::sqrt(sum_sq) / n;
}

double total_loss(const DepthMap& d_pred, const DepthMap& d_gt,
                  const DefocusMap& j_pred, const DefocusMap& j_gt,
                  const FocusSetting& setting, const LensConfig& lens,
                  const LossWeights& w, double depth_dynamic_range,
                  double defocus_dynamic_range) {
  return depth_loss(d_pred, d_gt, w, depth_dynamic_range) +
         defocus_loss(j_pred, j_gt, w, defocus_dynamic_range) +
         physical_consistency(j_pred, d_pred, setting, lens, w);
}

GridMap normalize_map(const GridMap& m) {
  GridMap out = m;
  bool any = false;
  double lo = 0.0;
  double hi = 0.0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.is_valid(y, x)) continue;
      const double v = m.value_at(y, x);
      if (!std::isfinite(v)) {
        throw DataError("cannot normalize a map with non-finite values");
      }
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!any) return out;
  const double span = hi - lo;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.is_valid(y, x)) continue;
      const double v = m.value_at(y, x);
      out.set(y, x, span > 0.0 ? (v - lo) / span : 0.0);
    }
  }
  return out;
}

}  // namespace defocus
