#include "defocus/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "defocus/errors.hpp"

namespace defocus {

namespace {

constexpr int kTile = 64;

struct TileJob {
  const Raster& src;
  Raster& dst;
  const std::vector<double>& sigma;
  const std::vector<int>& radius;
  int rmax;

  void run(int ty0, int ty1, int tx0, int tx1) const;
};

void TileJob::run(int ty0, int ty1, int tx0, int tx1) const {
  const int w = src.width;
  const int h = src.height;
  const int nc = src.channels;
  const int tw = tx1 - tx0 + 1;
  const int th = ty1 - ty0 + 1;

  std::vector<double> acc(static_cast<std::size_t>(th) * tw * nc, 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(th) * tw, 0.0);
  std::vector<double> g;

  const int sy0 = std::max(0, ty0 - rmax);
  const int sy1 = std::min(h - 1, ty1 + rmax);
  const int sx0 = std::max(0, tx0 - rmax);
  const int sx1 = std::min(w - 1, tx1 + rmax);

  for (int j = sy0; j <= sy1; ++j) {
    for (int i = sx0; i <= sx1; ++i) {
      const std::size_t sidx = static_cast<std::size_t>(j) * w + i;
      const int r = radius[sidx];
      const int oy0 = std::max(j - r, ty0);
      const int oy1 = std::min(j + r, ty1);
      if (oy0 > oy1) continue;
      const int ox0 = std::max(i - r, tx0);
      const int ox1 = std::min(i + r, tx1);
      if (ox0 > ox1) continue;

      const double* val = &src.data[sidx * nc];
      if (r == 0) {
        const std::size_t d =
            static_cast<std::size_t>(j - ty0) * tw + (i - tx0);
        wsum[d] += 1.0;
        for (int c = 0; c < nc; ++c) acc[d * nc + c] += val[c];
        continue;
      }

      const double s = sigma[sidx];
      const double inv2s2 = -1.0 / (2.0 * s * s);
      const double norm = 1.0 / (2.0 * std::numbers::pi * s * s);
      g.assign(static_cast<std::size_t>(2 * r + 1), 0.0);
      for (int t = 0; t <= r; ++t) {
        const double e = std::exp(static_cast<double>(t) * t * inv2s2);
        g[static_cast<std::size_t>(r + t)] = e;
        g[static_cast<std::size_t>(r - t)] = e;
      }

      const int span = ox1 - ox0;
      for (int y = oy0; y <= oy1; ++y) {
        const double wy = norm * g[static_cast<std::size_t>(y - j + r)];
        const std::size_t drow =
            static_cast<std::size_t>(y - ty0) * tw + (ox0 - tx0);
        double* arow = &acc[drow * nc];
        double* wrow = &wsum[drow];
        const double* gx = &g[static_cast<std::size_t>(ox0 - i + r)];
        if (nc == 3) {
          const double v0 = val[0], v1 = val[1], v2 = val[2];
          for (int x = 0; x <= span; ++x) {
            const double wt = wy * gx[x];
            wrow[x] += wt;
            arow[x * 3 + 0] += v0 * wt;
            arow[x * 3 + 1] += v1 * wt;
            arow[x * 3 + 2] += v2 * wt;
          }
        } else if (nc == 1) {
          const double v0 = val[0];
          for (int x = 0; x <= span; ++x) {
            const double wt = wy * gx[x];
            wrow[x] += wt;
            arow[x] += v0 * wt;
          }
        } else {
          for (int x = 0; x <= span; ++x) {
            const double wt = wy * gx[x];
            wrow[x] += wt;
            for (int c = 0; c < nc; ++c) arow[x * nc + c] += val[c] * wt;
          }
        }
      }
    }
  }

  for (int y = ty0; y <= ty1; ++y) {
    for (int x = tx0; x <= tx1; ++x) {
      const std::size_t d = static_cast<std::size_t>(y - ty0) * tw + (x - tx0);
      const double wn = wsum[d];
      for (int c = 0; c < nc; ++c) {
        dst.at(y, x, c) = acc[d * nc + c] / wn;
      }
    }
  }
}

}  // namespace

void RenderOptions::validate() const {
  if (!(truncation_sigmas >= 1.0)) {
    throw DomainError("truncation_sigmas must be >= 1");
  }
  if (max_kernel_radius_px < 1) {
    throw DomainError("max_kernel_radius_px must be >= 1");
  }
  if (!(min_sigma_px >= 0.0)) {
    throw DomainError("min_sigma_px must be nonnegative");
  }
  if (!(coc_to_sigma > 0.0)) {
    throw DomainError("coc_to_sigma must be positive");
  }
}

double gaussian_weight(double dx, double dy, double sigma) {
  if (!(sigma > 0.0)) {
    throw DomainError("gaussian_weight requires sigma > 0");
  }
  const double s2 = sigma * sigma;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * s2)) /
         (2.0 * std::numbers::pi * s2);
}

int kernel_radius(double sigma, const RenderOptions& opts) {
  opts.validate();
  if (!(sigma >= 0.0)) {
    throw DomainError("kernel_radius requires sigma >= 0");
  }
  if (sigma < opts.min_sigma_px) return 0;
  const double r = std::ceil(opts.truncation_sigmas * sigma);
  if (r >= static_cast<double>(opts.max_kernel_radius_px)) {
    return opts.max_kernel_radius_px;
  }
  return static_cast<int>(r);
}

Raster render_focused(const Raster& all_in_focus, const DepthMap& depth,
                      const FocusSetting& setting, const LensConfig& lens,
                      const RenderOptions& opts) {
  opts.validate();
  lens.validate();
  setting.validate(lens);
  if (all_in_focus.height != depth.height ||
      all_in_focus.width != depth.width) {
    throw DataError("image and depth map shapes differ");
  }
  if (!depth.fully_valid()) {
    throw DataError("depth map has invalid pixels; refine it first");
  }
  if (!all_in_focus.all_finite()) {
    throw DataError("image contains non-finite values");
  }

  const int h = all_in_focus.height;
  const int w = all_in_focus.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  std::vector<double> sigma(n);
  std::vector<int> radius(n);
  int rmax = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double s =
          coc_pixels(depth.values[i], setting, lens) * opts.coc_to_sigma;
      sigma[i] = s;
      radius[i] = kernel_radius(s, opts);
      rmax = std::max(rmax, radius[i]);
    }
  }

  Raster out = Raster::zeros(h, w, all_in_focus.channels);
  if (rmax == 0) {     // everything in focus: exact pass-through
    out.data = all_in_focus.data;
    return out;
  }

  const TileJob job{all_in_focus, out, sigma, radius, rmax};
  const int tiles_y = (h + kTile - 1) / kTile;
  const int tiles_x = (w + kTile - 1) / kTile;
  const int ntiles = tiles_y * tiles_x;

  auto run_tiles = [&](int first, int stride) {
    for (int t = first; t < ntiles; t += stride) {
      const int ty = t / tiles_x;
      const int tx = t % tiles_x;
      const int ty0 = ty * kTile;
      const int tx0 = tx * kTile;
      job.run(ty0, std::min(ty0 + kTile, h) - 1, tx0,
              std::min(tx0 + kTile, w) - 1);
    }
  };

  unsigned nthreads = opts.threads;
  if (nthreads == 0) nthreads = std::thread::hardware_concurrency();
  nthreads = std::max(1u, std::min(nthreads, static_cast<unsigned>(ntiles)));

  if (nthreads == 1) {
    run_tiles(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned k = 0; k < nthreads; ++k) {
      pool.emplace_back(run_tiles, static_cast<int>(k),
                        static_cast<int>(nthreads));
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

FocusStack render_stack(const Raster& all_in_focus, const DepthMap& depth,
                        const std::vector<double>& focus_depths_mm,
                        const LensConfig& lens, const RenderOptions& opts) {
  if (focus_depths_mm.empty()) {
    throw DomainError("render_stack requires at least one focus depth");
  }
  for (std::size_t t = 0; t < focus_depths_mm.size(); ++t) {
    if (!(focus_depths_mm[t] > lens.focal_length_mm)) {
      throw DomainError("focus depth " + std::to_string(focus_depths_mm[t]) +
                        " does not exceed the focal length");
    }
    if (t > 0 && !(focus_depths_mm[t] > focus_depths_mm[t - 1])) {
      throw DomainError("focus depths must increase strictly");
    }
  }
  FocusStack stack;
  stack.focus_depths_mm = focus_depths_mm;
  stack.members.reserve(focus_depths_mm.size());
  for (double fd : focus_depths_mm) {
    stack.members.push_back(render_focused(
        all_in_focus, depth, FocusSetting::at_depth(fd), lens, opts));
  }
  return stack;
}

}  // namespace defocus
