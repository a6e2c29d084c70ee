// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failed criteria. argv[1] names the CLI binary (used by the determinism
// criterion); everything else exercises the library directly.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "defocus/dataset.hpp"
#include "defocus/errors.hpp"
#include "defocus/image_io.hpp"
#include "defocus/metrics.hpp"
#include "defocus/optics.hpp"
#include "defocus/render.hpp"
#include "defocus/stack.hpp"
#include "defocus/types.hpp"
#include "oracles.hpp"

using namespace defocus;
namespace fs = std::filesystem;

namespace {

std::string g_tool;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

std::string fmt(double v) { return format_double(v); }

fs::path scratch() {
  static const fs::path root = [] {
    fs::path p = fs::current_path() / "acceptance_scratch";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

Raster random_texture(std::uint64_t seed, int h, int w, int c) {
  Raster r = Raster::zeros(h, w, c);
  r.data = oracle::random_values(seed, r.data.size(), 0.0, 1.0);
  return r;
}

DepthMap two_plane_depth(int h, int w, double near_mm, double far_mm,
                         int split_x) {
  DepthMap d = DepthMap::constant(h, w, near_mm);
  for (int y = 0; y < h; ++y) {
    for (int x = split_x; x < w; ++x) d.set(y, x, far_mm);
  }
  return d;
}

const LensConfig kLens = LensConfig::from_coc_scale(50.0, 1.4, 800.0);

int run_tool(const std::string& args) {
  const std::string cmd = "\"" + g_tool + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  check(in.good(), "cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void check_same_file(const fs::path& a, const fs::path& b) {
  check(file_bytes(a) == file_bytes(b),
        "files differ: " + a.string() + " vs " + b.string());
}

void check_same_tree(const fs::path& a, const fs::path& b) {
  auto list = [](const fs::path& root) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), root));
    }
    std::sort(rel.begin(), rel.end());
    return rel;
  };
  const std::vector<fs::path> la = list(a);
  const std::vector<fs::path> lb = list(b);
  check(la == lb, "directory listings differ: " + a.string() + " vs " +
                      b.string());
  for (const fs::path& rel : la) check_same_file(a / rel, b / rel);
}

// ---- criteria ---------------------------------------------------------------

// Thin-lens blur diameter at a canonical configuration, against a hand-reduced
// constant: 800 * (500/1000) * (50/450) = 400/9 px.
void c01_coc_formula() {
  const FocusSetting at500 = FocusSetting::at_depth(500.0);
  const double got = coc_pixels(1000.0, at500, kLens);
  const double want = 400.0 / 9.0;
  check(std::abs(got - want) / want <= 1e-9,
        "coc(1000mm) = " + fmt(got) + ", want " + fmt(want));
  check(coc_pixels(500.0, at500, kLens) == 0.0, "coc at the focus plane");
}

// The inverse pair loses precision as focus recedes: reconstructing the
// depth divides by v - F, amplifying rounding by about D/F. Sweeping the
// realistic focusing range of a 50mm lens (just past F out to 100m) keeps
// that amplification within the 1e-12 budget.
void c02_thin_lens_round_trip() {
  const double f = 50.0;
  const double lo = std::log(51.0);
  const double hi = std::log(1.0e5);
  for (int i = 0; i < 1000; ++i) {
    const double t = static_cast<double>(i) / 999.0;
    const double depth = std::exp(lo + (hi - lo) * t);
    const double v = sensor_from_focus_depth(depth, f);
    const double back = focus_depth_from_sensor(v, f);
    check(std::abs(back - depth) / depth <= 1e-12,
          "round trip at " + fmt(depth) + "mm drifted to " + fmt(back));
  }
}

void c03_render_identity() {
  const Raster aif = random_texture(301, 256, 256, 3);
  const DepthMap depth = DepthMap::constant(256, 256, 700.0);
  const Raster out =
      render_focused(aif, depth, FocusSetting::at_depth(700.0), kLens, {});
  check(out.data == aif.data, "in-focus render changed at least one byte");
}

void c04_render_constancy() {
  Raster aif = Raster::zeros(96, 96, 3);
  for (double& v : aif.data) v = 0.5;
  DepthMap depth = DepthMap::constant(96, 96, 0.0);
  depth.values = oracle::random_values(304, depth.values.size(), 300.0, 900.0);
  RenderOptions opts;
  opts.max_kernel_radius_px = 16;
  const Raster out =
      render_focused(aif, depth, FocusSetting::at_depth(500.0), kLens, opts);
  double worst = 0.0;
  for (double v : out.data) worst = std::max(worst, std::abs(v - 0.5));
  check(worst <= 1e-6, "max deviation " + fmt(worst));
}

void c05_render_oracle() {
  const double focus = 500.0;
  const double depth_mm = 560.0;
  const double sigma =
      800.0 * ((depth_mm - focus) / depth_mm) * (50.0 / (focus - 50.0));
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const Raster aif = random_texture(305, 64, 64, 1);
  const DepthMap depth = DepthMap::constant(64, 64, depth_mm);
  const Raster out =
      render_focused(aif, depth, FocusSetting::at_depth(focus), kLens, {});
  const std::vector<double> want =
      oracle::constant_sigma_render(aif.data, 64, 64, sigma, radius);
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    worst = std::max(worst, std::abs(out.data[i] - want[i]));
  }
  check(worst <= 1e-9, "max abs difference " + fmt(worst));
}

void c06_sff_round_trip() {
  RenderOptions opts;
  opts.max_kernel_radius_px = 10;  // keeps 2*radius eligibility meaningful
  const Raster aif = random_texture(306, 64, 64, 1);
  const DepthMap gt = two_plane_depth(64, 64, 600.0, 900.0, 32);

  const int count = 50;
  std::vector<double> fds(count);
  for (int i = 0; i < count; ++i) {
    fds[i] = 550.0 + 400.0 * static_cast<double>(i) / 49.0;
  }
  const double step = 400.0 / 49.0;

  const FocusStack stack = render_stack(aif, gt, fds, kLens, opts);
  const ComposeResult res = compose_all_in_focus(stack, 9);

  int eligible = 0;
  int good = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (std::abs(x - 32) <= 2 * opts.max_kernel_radius_px) continue;
      ++eligible;
      if (std::abs(res.depth.value_at(y, x) - gt.value_at(y, x)) <=
          step + 1e-9) {
        ++good;
      }
    }
  }
  check(eligible > 0, "no eligible pixels");
  const double frac =
      static_cast<double>(good) / static_cast<double>(eligible);
  check(frac >= 0.95, "only " + fmt(100.0 * frac) + "% of " +
                          std::to_string(eligible) +
                          " eligible pixels within one focus step");
}

void c07_physical_consistency_zero() {
  const LossWeights w;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    DepthMap d = DepthMap::constant(8, 8, 0.0);
    d.values = oracle::random_values(700 + trial, d.values.size(), 100.0,
                                     5000.0);
    const std::vector<double> fd =
        oracle::random_values(800 + trial, 1, 200.0, 2000.0);
    const FocusSetting setting = FocusSetting::at_depth(fd[0]);
    const DefocusMap j = defocus_map_from_depth(d, setting, kLens);
    const double r = physical_consistency(j, d, setting, kLens, w);
    check(r <= 1e-9, "residual " + fmt(r) + " on trial " +
                         std::to_string(trial));
  }
}

void c08_metric_oracles() {
  const LossWeights w;
  const FocusSetting setting = FocusSetting::at_depth(500.0);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    DepthMap pred = DepthMap::constant(8, 8, 0.0);
    DepthMap gt = DepthMap::constant(8, 8, 0.0);
    pred.values = oracle::random_values(810 + trial, 64, 0.5, 2.5);
    gt.values = oracle::random_values(910 + trial, 64, 0.5, 2.5);

    const MetricReport r = depth_metrics(pred, gt);
    const oracle::Metrics o = oracle::depth_metrics(pred.values, gt.values);
    const std::vector<std::pair<double, double>> pairs = {
        {r.delta_1_05, o.delta_1_05}, {r.delta_1_15, o.delta_1_15},
        {r.delta_1_25, o.delta_1_25}, {r.abs_rel, o.abs_rel},
        {r.sq_rel, o.sq_rel},         {r.rmse, o.rmse},
        {r.rmse_log, o.rmse_log},     {r.log10_err, o.log10_err}};
    for (const auto& [got, want] : pairs) {
      check(std::abs(got - want) <= 1e-12,
            "metric " + fmt(got) + " vs oracle " + fmt(want) + " on trial " +
                std::to_string(trial));
    }

    const double s = silog_term(pred, gt);
    const double so = oracle::silog(pred.values, gt.values);
    check(std::abs(s - so) <= 1e-12, "silog " + fmt(s) + " vs " + fmt(so));

    DepthMap dm = DepthMap::constant(8, 8, 0.0);
    dm.values = oracle::random_values(1010 + trial, 64, 300.0, 900.0);
    const DefocusMap implied = defocus_map_from_depth(dm, setting, kLens);
    DefocusMap j = implied;
    const std::vector<double> noise =
        oracle::random_values(1110 + trial, 64, 0.0, 0.5);
    for (std::size_t i = 0; i < 64; ++i) j.values[i] += noise[i];
    const double pc = physical_consistency(j, dm, setting, kLens, w);
    const double pco =
        oracle::consistency_residual(j.values, implied.values, w.lambda5);
    check(std::abs(pc - pco) <= 1e-12,
          "consistency " + fmt(pc) + " vs " + fmt(pco));
  }
}

void c09_ssim_properties() {
  Raster x = Raster::zeros(16, 16, 1);
  x.data = oracle::random_values(900, x.data.size(), 0.0, 1.0);
  const double self = ssim(x, x, 1.0);
  check(std::abs(self - 1.0) <= 1e-12, "ssim(x,x) = " + fmt(self));

  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Raster a = Raster::zeros(16, 16, 1);
    Raster b = Raster::zeros(16, 16, 1);
    a.data = oracle::random_values(9100 + trial, a.data.size(), 0.0, 1.0);
    b.data = oracle::random_values(9200 + trial, b.data.size(), 0.0, 1.0);
    const double ab = ssim(a, b, 1.0);
    const double ba = ssim(b, a, 1.0);
    check(std::abs(ab - ba) <= 1e-12, "asymmetry " + fmt(ab - ba));
    check(ab >= -1.0 - 1e-12 && ab <= 1.0 + 1e-12,
          "ssim out of range: " + fmt(ab));
  }
}

void c10_loss_sanity() {
  const LossWeights w;
  const FocusSetting setting = FocusSetting::at_depth(500.0);
  DepthMap d = DepthMap::constant(16, 16, 0.0);
  d.values = oracle::random_values(1000, d.values.size(), 300.0, 900.0);
  const DefocusMap j = defocus_map_from_depth(d, setting, kLens);
  const double total = total_loss(d, d, j, j, setting, kLens, w);
  check(total == 0.0, "total loss " + fmt(total) + " for consistent inputs");

  const DepthMap ones = DepthMap::constant(8, 8, 1.0);
  DepthMap scaled = ones;
  for (double& v : scaled.values) v = std::exp(1.0);
  const double s = silog_term(scaled, ones);
  check(s == 0.5, "silog(e*gt, gt) = " + fmt(s) + ", want exactly 0.5");
}

void c11_cli_determinism() {
  check(!g_tool.empty(), "tool path missing (argv[1])");
  const fs::path d = scratch() / "c11";
  fs::create_directories(d);
  const std::string lens = " --coc-scale 800 --max-kernel-radius 10";

  // Inputs sized like the SFF criterion: 64x64, two planes at 600/900mm.
  auto synth_into = [&](const fs::path& dir) {
    check(run_tool("synth --out-aif " + (dir / "aif.png").string() +
                   " --out-depth " + (dir / "depth.png").string() +
                   " --height 64 --width 64 --planes 2 --depth-min 600"
                   " --depth-max 900 --seed 5") == 0,
          "synth failed");
  };
  synth_into(d / "in1");
  synth_into(d / "in2");
  check_same_tree(d / "in1", d / "in2");
  const std::string aif = (d / "in1" / "aif.png").string();
  const std::string depth = (d / "in1" / "depth.png").string();

  for (int threads : {1, 8}) {
    const std::string t = std::to_string(threads);
    check(run_tool("render --aif " + aif + " --depth " + depth +
                   " --focus-mm 700 --out " +
                   (d / ("render_t" + t + ".png")).string() + lens +
                   " --threads " + t) == 0,
          "render failed with --threads " + t);
    check(run_tool("stack --aif " + aif + " --depth " + depth + " --out-dir " +
                   (d / ("stack_t" + t)).string() +
                   " --focus-min 550 --focus-max 950 --focus-count 50" + lens +
                   " --threads " + t) == 0,
          "stack failed with --threads " + t);
    check(run_tool("gen-scene --aif " + aif + " --depth " + depth +
                   " --out-dir " + (d / ("scene_t" + t)).string() +
                   " --focus-min 600 --focus-max 900 --focus-count 5" + lens +
                   " --scene-id c11 --threads " + t) == 0,
          "gen-scene failed with --threads " + t);
  }
  check_same_file(d / "render_t1.png", d / "render_t8.png");
  check_same_tree(d / "stack_t1", d / "stack_t8");
  check_same_tree(d / "scene_t1", d / "scene_t8");

  // Commands without a threading knob must still be run-to-run identical.
  for (int pass : {1, 2}) {
    const std::string s = std::to_string(pass);
    check(run_tool("compose --stack " +
                   (d / "stack_t1" / "stack.json").string() + " --out-aif " +
                   (d / ("composed_" + s + ".png")).string() +
                   " --out-depth " + (d / ("sf_" + s + ".png")).string()) == 0,
          "compose failed");
    check(run_tool("refine --primary " + (d / ("sf_" + s + ".png")).string() +
                   " --fill " + depth + " --out " +
                   (d / ("refined_" + s + ".png")).string()) == 0,
          "refine failed");
    check(run_tool("defocus --depth " + depth + " --focus-mm 700 --out " +
                   (d / ("j_" + s + ".pfm")).string() + " --coc-scale 800") ==
              0,
          "defocus failed");
    check(run_tool("eval --pred " + (d / ("sf_" + s + ".png")).string() +
                   " --gt " + depth + " --format csv --out " +
                   (d / ("metrics_" + s + ".csv")).string()) == 0,
          "eval failed");
  }
  for (const char* stem : {"composed", "sf", "refined"}) {
    check_same_file(d / (std::string(stem) + "_1.png"),
                    d / (std::string(stem) + "_2.png"));
  }
  check_same_file(d / "j_1.pfm", d / "j_2.pfm");
  check_same_file(d / "metrics_1.csv", d / "metrics_2.csv");
}

void c12_scene_self_consistency() {
  const fs::path dir = scratch() / "c12_scene";
  const Raster aif = random_texture(312, 256, 256, 3);
  const DepthMap depth = two_plane_depth(256, 256, 600.0, 900.0, 128);
  std::vector<double> fds(200);
  for (int i = 0; i < 200; ++i) {
    fds[static_cast<std::size_t>(i)] =
        550.0 + 400.0 * static_cast<double>(i) / 199.0;
  }
  GenerateOptions opts;
  opts.render.threads = 1;
  opts.render.max_kernel_radius_px = 8;

  const auto t0 = std::chrono::steady_clock::now();
  generate_scene(aif, depth, kLens, fds, dir.string(), opts);
  const double gen_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  check(gen_s < 300.0,
        "generation took " + fmt(gen_s) + "s, budget is 300s");

  const ValidationReport rep =
      validate_scene((dir / "manifest.json").string());
  if (!rep.ok()) {
    std::string msg = std::to_string(rep.findings.size()) + " finding(s): " +
                      rep.findings.front();
    throw Failure(msg);
  }
  std::cout << "       (200 shots at 256x256 in " << fmt(gen_s)
            << "s, zero findings)\n";
}

struct Criterion {
  int id;
  const char* label;
  std::function<void()> body;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_tool = argv[1];

  const std::vector<Criterion> criteria = {
      {1, "thin-lens blur diameter formula", c01_coc_formula},
      {2, "focus/sensor distance inverses", c02_thin_lens_round_trip},
      {3, "in-focus render is bit-exact", c03_render_identity},
      {4, "constant image is a render fixed point", c04_render_constancy},
      {5, "render matches dense convolution oracle", c05_render_oracle},
      {6, "focus stack round trip recovers depth", c06_sff_round_trip},
      {7, "derived defocus maps are self-consistent",
       c07_physical_consistency_zero},
      {8, "metrics match double-loop oracles", c08_metric_oracles},
      {9, "ssim identity, symmetry, range", c09_ssim_properties},
      {10, "losses vanish on consistent inputs", c10_loss_sanity},
      {11, "CLI output is thread-count invariant", c11_cli_determinism},
      {12, "scene generation validates cleanly", c12_scene_self_consistency},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ostringstream line;
    line << (error.empty() ? "[PASS]" : "[FAIL]") << " " << c.id << ": "
         << c.label << " (" << fmt(std::round(secs * 100.0) / 100.0) << "s)";
    if (!error.empty()) {
      line << " - " << error;
      ++failures;
    }
    std::cout << line.str() << '\n';
  }
  std::cout << (12 - failures) << " of 12 criteria passed\n";
  return failures;
}
