#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
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

namespace fs = std::filesystem;

using namespace defocus;

namespace {

// Lens flags shared by every command that evaluates the thin-lens model.
// --coc-scale sets the combined constant directly and excludes the
// physical pixel-pitch form.
struct LensFlags {
  double focal_mm = 50.0;
  double f_number = 1.4;
  double pixel_mm = 1.0;
  double output_scale = 1.0;
  double coc_scale = 0.0;
  CLI::Option* coc_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--focal-mm", focal_mm, "lens focal length, millimeters")
        ->capture_default_str();
    cmd->add_option("--f-number", f_number, "aperture f-number")
        ->capture_default_str();
    coc_opt = cmd->add_option(
        "--coc-scale", coc_scale,
        "combined blur scale: aperture / (pixel pitch * output scale)");
    CLI::Option* pix =
        cmd->add_option("--pixel-mm", pixel_mm,
                        "sensor pixel pitch, millimeters")
            ->capture_default_str();
    CLI::Option* scl =
        cmd->add_option("--output-scale", output_scale,
                        "capture-to-output resolution ratio")
            ->capture_default_str();
    coc_opt->excludes(pix);
    coc_opt->excludes(scl);
  }

  LensConfig build() const {
    if (coc_opt != nullptr && coc_opt->count() > 0) {
      return LensConfig::from_coc_scale(focal_mm, f_number, coc_scale);
    }
    return LensConfig::from_physical(focal_mm, f_number, pixel_mm,
                                     output_scale);
  }
};

struct RenderFlags {
  RenderOptions opts;

  void attach(CLI::App* cmd) {
    cmd->add_option("--truncation-sigmas", opts.truncation_sigmas,
                    "kernel cutoff in sigma units")
        ->capture_default_str();
    cmd->add_option("--max-kernel-radius", opts.max_kernel_radius_px,
                    "kernel radius cap, pixels")
        ->capture_default_str();
    cmd->add_option("--min-sigma", opts.min_sigma_px,
                    "below this sigma a pixel passes through unblurred")
        ->capture_default_str();
    cmd->add_option("--coc-to-sigma", opts.coc_to_sigma,
                    "Gaussian sigma per pixel of CoC diameter")
        ->capture_default_str();
    cmd->add_option("--threads", opts.threads,
                    "worker threads (0 = hardware concurrency)")
        ->capture_default_str();
  }
};

PngBitDepth to_png_depth(int bits) {
  if (bits == 8) return PngBitDepth::bits8;
  if (bits == 16) return PngBitDepth::bits16;
  throw DomainError("--png-bits must be 8 or 16, got " + std::to_string(bits));
}

void echo_lens(bool verbose, const LensConfig& lens) {
  if (!verbose) return;
  std::cerr << "config: focal_mm=" << format_double(lens.focal_length_mm)
            << " f_number=" << format_double(lens.f_number)
            << " pixel_mm=" << format_double(lens.pixel_size_mm)
            << " output_scale=" << format_double(lens.output_scale)
            << " coc_scale=" << format_double(lens.coc_scale) << '\n';
}

void echo_render(bool verbose, const RenderOptions& opts) {
  if (!verbose) return;
  std::cerr << "config: truncation_sigmas="
            << format_double(opts.truncation_sigmas)
            << " max_kernel_radius=" << opts.max_kernel_radius_px
            << " min_sigma=" << format_double(opts.min_sigma_px)
            << " coc_to_sigma=" << format_double(opts.coc_to_sigma)
            << " threads=" << opts.threads << '\n';
}

void note_written(const std::string& path) {
  std::cout << "wrote " << path << '\n';
}

std::vector<double> focus_linspace(double lo, double hi, int count) {
  if (count < 1) throw DomainError("--focus-count must be >= 1");
  if (!std::isfinite(lo) || lo <= 0.0) {
    throw DomainError("--focus-min must be finite and positive");
  }
  if (count == 1) return {lo};
  if (!(hi > lo)) {
    throw DomainError("--focus-max must exceed --focus-min when count > 1");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        i == count - 1 ? hi : lo + static_cast<double>(i) * step;
  }
  return out;
}

Mask load_mask(const std::string& path) {
  const Raster r = load_raster(path);
  if (r.channels != 1) {
    throw DataError("mask must be single-channel: " + path);
  }
  Mask m = Mask::none(r.height, r.width);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    m.data[i] = r.data[i] > 0.5 ? 1 : 0;
  }
  return m;
}

void make_parent_dirs(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  try {
    fs::create_directories(parent);
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create directories: ") + e.what());
  }
}

// ---- synth ----------------------------------------------------------------

struct SynthParams {
  std::string out_aif;
  std::string out_depth;
  std::string layout = "planes";
  int height = 256;
  int width = 256;
  int channels = 3;
  int planes = 2;
  double depth_min = 600.0;
  double depth_max = 900.0;
  double depth_unit = kDefaultDepthUnitMm;
  std::uint64_t seed = 1;
  int png_bits = 16;
  bool verbose = false;
};

void run_synth(const SynthParams& p) {
  if (p.height < 1 || p.width < 1) {
    throw DomainError("--height and --width must be >= 1");
  }
  if (p.channels != 1 && p.channels != 3) {
    throw DomainError("--channels must be 1 or 3");
  }
  if (!(p.depth_min > 0.0) || !(p.depth_max >= p.depth_min)) {
    throw DomainError("need 0 < --depth-min <= --depth-max");
  }
  if (p.planes < 1) throw DomainError("--planes must be >= 1");

  std::mt19937_64 eng(p.seed);
  Raster aif = Raster::zeros(p.height, p.width, p.channels);
  for (double& v : aif.data) {
    v = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  }

  DepthMap depth = DepthMap::constant(p.height, p.width, p.depth_min);
  if (p.layout == "planes") {
    std::vector<double> plane_depths(static_cast<std::size_t>(p.planes),
                                     p.depth_min);
    for (int b = 1; b < p.planes; ++b) {
      plane_depths[static_cast<std::size_t>(b)] =
          p.depth_min + (p.depth_max - p.depth_min) * static_cast<double>(b) /
                            static_cast<double>(p.planes - 1);
    }
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const int band = std::min(p.planes - 1, x * p.planes / p.width);
        depth.set(y, x, plane_depths[static_cast<std::size_t>(band)]);
      }
    }
  } else if (p.layout == "ramp") {
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double t =
            p.width == 1 ? 0.0
                         : static_cast<double>(x) /
                               static_cast<double>(p.width - 1);
        depth.set(y, x, p.depth_min + (p.depth_max - p.depth_min) * t);
      }
    }
  } else {
    throw DomainError("--layout must be planes or ramp");
  }

  if (p.verbose) {
    std::cerr << "config: layout=" << p.layout << " seed=" << p.seed
              << " size=" << p.height << "x" << p.width << "x" << p.channels
              << " depth=[" << format_double(p.depth_min) << ", "
              << format_double(p.depth_max) << "]mm\n";
  }
  make_parent_dirs(p.out_aif);
  make_parent_dirs(p.out_depth);
  save_raster(aif, p.out_aif, to_png_depth(p.png_bits));
  note_written(p.out_aif);
  save_depth(depth, p.out_depth, p.depth_unit);
  note_written(p.out_depth);
}

// ---- render ---------------------------------------------------------------

struct RenderParams {
  std::string aif;
  std::string depth;
  std::string out;
  double focus_mm = 0.0;
  double depth_unit = kDefaultDepthUnitMm;
  int png_bits = 16;
  bool verbose = false;
  LensFlags lens;
  RenderFlags render;
};

void run_render(const RenderParams& p) {
  const LensConfig lens = p.lens.build();
  echo_lens(p.verbose, lens);
  echo_render(p.verbose, p.render.opts);
  const Raster aif = load_raster(p.aif);
  const DepthMap depth = load_depth(p.depth, p.depth_unit);
  const FocusSetting setting = FocusSetting::at_depth(p.focus_mm);
  const Raster out = render_focused(aif, depth, setting, lens, p.render.opts);
  make_parent_dirs(p.out);
  save_raster(out, p.out, to_png_depth(p.png_bits));
  note_written(p.out);
}

// ---- stack ----------------------------------------------------------------

struct StackParams {
  std::string aif;
  std::string depth;
  std::string out_dir;
  double focus_min = 0.0;
  double focus_max = 0.0;
  int focus_count = 200;
  double depth_unit = kDefaultDepthUnitMm;
  int png_bits = 16;
  bool verbose = false;
  LensFlags lens;
  RenderFlags render;
};

void run_stack(const StackParams& p) {
  const LensConfig lens = p.lens.build();
  echo_lens(p.verbose, lens);
  echo_render(p.verbose, p.render.opts);
  const std::vector<double> depths =
      focus_linspace(p.focus_min, p.focus_max, p.focus_count);
  const Raster aif = load_raster(p.aif);
  const DepthMap depth = load_depth(p.depth, p.depth_unit);

  try {
    fs::create_directories(p.out_dir);
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create directories: ") + e.what());
  }

  StackManifest manifest;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%04zu", i);
    const FocusSetting setting = FocusSetting::at_depth(depths[i]);
    const Raster shot =
        render_focused(aif, depth, setting, lens, p.render.opts);
    const std::string rel = std::string(stem) + "_img.png";
    save_raster(shot, (fs::path(p.out_dir) / rel).string(),
                to_png_depth(p.png_bits));
    manifest.entries.push_back({rel, depths[i]});
  }
  const std::string manifest_path =
      (fs::path(p.out_dir) / "stack.json").string();
  save_stack_manifest(manifest, manifest_path);
  note_written(manifest_path);
}

// ---- compose --------------------------------------------------------------

struct ComposeParams {
  std::string stack;
  std::string out_aif;
  std::string out_depth;
  int window = 9;
  double depth_unit = kDefaultDepthUnitMm;
  int png_bits = 16;
  bool verbose = false;
};

void run_compose(const ComposeParams& p) {
  if (p.verbose) {
    std::cerr << "config: window=" << p.window << '\n';
  }
  const FocusStack stack = load_focus_stack(p.stack);
  const ComposeResult result = compose_all_in_focus(stack, p.window);
  make_parent_dirs(p.out_aif);
  make_parent_dirs(p.out_depth);
  save_raster(result.all_in_focus, p.out_aif, to_png_depth(p.png_bits));
  note_written(p.out_aif);
  save_depth(result.depth, p.out_depth, p.depth_unit);
  note_written(p.out_depth);
}

// ---- refine ---------------------------------------------------------------

struct RefineParams {
  std::string primary;
  std::string fill;
  std::string mask;
  std::string out;
  double depth_unit = kDefaultDepthUnitMm;
  bool verbose = false;
};

void run_refine(const RefineParams& p) {
  const DepthMap primary = load_depth(p.primary, p.depth_unit);
  const DepthMap fill = load_depth(p.fill, p.depth_unit);
  const Mask mask =
      p.mask.empty() ? detect_invalid(primary) : load_mask(p.mask);
  if (p.verbose) {
    std::cerr << "config: mask=" << (p.mask.empty() ? "auto" : p.mask)
              << " masked_pixels=" << mask.count() << '\n';
  }
  const DepthMap out = refine_depth(primary, mask, fill);
  make_parent_dirs(p.out);
  save_depth(out, p.out, p.depth_unit);
  note_written(p.out);
}

// ---- defocus --------------------------------------------------------------

struct DefocusParams {
  std::string depth;
  std::string out;
  double focus_mm = 0.0;
  double depth_unit = kDefaultDepthUnitMm;
  bool verbose = false;
  LensFlags lens;
};

void run_defocus(const DefocusParams& p) {
  const LensConfig lens = p.lens.build();
  echo_lens(p.verbose, lens);
  const DepthMap depth = load_depth(p.depth, p.depth_unit);
  const DefocusMap map =
      defocus_map_from_depth(depth, FocusSetting::at_depth(p.focus_mm), lens);
  make_parent_dirs(p.out);
  save_defocus(map, p.out);
  note_written(p.out);
}

// ---- eval -----------------------------------------------------------------

struct EvalParams {
  std::string pred;
  std::string gt;
  std::string kind = "depth";
  std::string format = "kv";
  std::string out;
  double depth_unit = kDefaultDepthUnitMm;
  bool normalize = false;
  bool verbose = false;
};

void run_eval(const EvalParams& p) {
  GridMap pred;
  GridMap gt;
  if (p.kind == "depth") {
    pred = load_depth(p.pred, p.depth_unit);
    gt = load_depth(p.gt, p.depth_unit);
  } else {
    pred = load_defocus(p.pred);
    gt = load_defocus(p.gt);
  }
  if (p.normalize) {
    // Min-max rescaling sends the minimum to exactly 0, which the log-based
    // metrics reject, so normalized values are floored just above it.
    pred = normalize_map(pred);
    gt = normalize_map(gt);
    for (GridMap* m : {&pred, &gt}) {
      for (double& v : m->values) v = std::max(v, 1e-6);
    }
  }
  if (p.verbose) {
    std::cerr << "config: kind=" << p.kind
              << " normalize=" << (p.normalize ? "true" : "false") << '\n';
  }
  const MetricReport report = depth_metrics(pred, gt);
  std::string text;
  if (p.format == "csv") {
    text = MetricReport::csv_header() + "\n" + report.to_csv_row() + "\n";
  } else {
    text = report.to_kv();
  }
  if (p.out.empty()) {
    std::cout << text;
  } else {
    make_parent_dirs(p.out);
    std::ofstream out(p.out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.out + " for writing");
    out << text;
    if (!out) throw IoError("failed to write " + p.out);
    note_written(p.out);
  }
}

// ---- gen-scene ------------------------------------------------------------

struct GenSceneParams {
  std::string aif;
  std::string depth;
  std::string out_dir;
  std::string scene_id;
  double focus_min = 0.0;
  double focus_max = 0.0;
  int focus_count = 200;
  double depth_unit = kDefaultDepthUnitMm;
  int png_bits = 16;
  bool verbose = false;
  LensFlags lens;
  RenderFlags render;
};

void run_gen_scene(const GenSceneParams& p) {
  const LensConfig lens = p.lens.build();
  echo_lens(p.verbose, lens);
  echo_render(p.verbose, p.render.opts);
  const Raster aif = load_raster(p.aif);
  const DepthMap depth = load_depth(p.depth, p.depth_unit);
  const std::vector<double> depths =
      focus_linspace(p.focus_min, p.focus_max, p.focus_count);

  GenerateOptions opts;
  opts.render = p.render.opts;
  opts.image_depth = to_png_depth(p.png_bits);
  opts.scene_id = p.scene_id;
  generate_scene(aif, depth, lens, depths, p.out_dir, opts);

  const std::string manifest_path =
      (fs::path(p.out_dir) / "manifest.json").string();
  const ValidationReport report = validate_scene(manifest_path);
  if (!report.ok()) {
    for (const std::string& f : report.findings) {
      std::cerr << "finding: " << f << '\n';
    }
    throw DataError("generated scene failed validation with " +
                    std::to_string(report.findings.size()) + " finding(s)");
  }
  note_written(manifest_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defocus physics toolkit: focused-image synthesis, focus-stack"
               " analysis, and depth/defocus evaluation"};
  app.require_subcommand(1);

  auto synth = std::make_shared<SynthParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "synth", "generate a random test texture and depth map");
    cmd->add_option("--out-aif", synth->out_aif, "output image (.png|.pfm)")
        ->required();
    cmd->add_option("--out-depth", synth->out_depth,
                    "output depth map (.png|.pfm)")
        ->required();
    cmd->add_option("--height", synth->height, "image height")
        ->capture_default_str();
    cmd->add_option("--width", synth->width, "image width")
        ->capture_default_str();
    cmd->add_option("--channels", synth->channels, "1 or 3")
        ->capture_default_str();
    cmd->add_option("--layout", synth->layout, "depth layout: planes or ramp")
        ->check(CLI::IsMember({"planes", "ramp"}))
        ->capture_default_str();
    cmd->add_option("--planes", synth->planes,
                    "plane count for the planes layout")
        ->capture_default_str();
    cmd->add_option("--depth-min", synth->depth_min, "nearest depth, mm")
        ->capture_default_str();
    cmd->add_option("--depth-max", synth->depth_max, "farthest depth, mm")
        ->capture_default_str();
    cmd->add_option("--depth-unit", synth->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_option("--seed", synth->seed, "texture RNG seed")
        ->capture_default_str();
    cmd->add_option("--png-bits", synth->png_bits, "PNG bit depth: 8 or 16")
        ->capture_default_str();
    cmd->add_flag("--verbose", synth->verbose, "echo configuration to stderr");
    cmd->callback([synth] { run_synth(*synth); });
  }

  auto render = std::make_shared<RenderParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "render", "render one focused image from all-in-focus + depth");
    cmd->add_option("--aif", render->aif, "all-in-focus image")->required();
    cmd->add_option("--depth", render->depth, "depth map, mm")->required();
    cmd->add_option("--focus-mm", render->focus_mm, "focus depth, mm")
        ->required();
    cmd->add_option("--out", render->out, "output image (.png|.pfm)")
        ->required();
    cmd->add_option("--depth-unit", render->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_option("--png-bits", render->png_bits, "PNG bit depth: 8 or 16")
        ->capture_default_str();
    cmd->add_flag("--verbose", render->verbose,
                  "echo configuration to stderr");
    render->lens.attach(cmd);
    render->render.attach(cmd);
    cmd->callback([render] { run_render(*render); });
  }

  auto stack = std::make_shared<StackParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "stack", "render a focus stack over a range of focus depths");
    cmd->add_option("--aif", stack->aif, "all-in-focus image")->required();
    cmd->add_option("--depth", stack->depth, "depth map, mm")->required();
    cmd->add_option("--out-dir", stack->out_dir, "output directory")
        ->required();
    cmd->add_option("--focus-min", stack->focus_min, "first focus depth, mm")
        ->required();
    cmd->add_option("--focus-max", stack->focus_max, "last focus depth, mm")
        ->required();
    cmd->add_option("--focus-count", stack->focus_count, "number of shots")
        ->capture_default_str();
    cmd->add_option("--depth-unit", stack->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_option("--png-bits", stack->png_bits, "PNG bit depth: 8 or 16")
        ->capture_default_str();
    cmd->add_flag("--verbose", stack->verbose, "echo configuration to stderr");
    stack->lens.attach(cmd);
    stack->render.attach(cmd);
    cmd->callback([stack] { run_stack(*stack); });
  }

  auto compose = std::make_shared<ComposeParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "compose",
        "composite a focus stack into an all-in-focus image and depth");
    cmd->add_option("--stack", compose->stack,
                    "stack.json or manifest.json describing the stack")
        ->required();
    cmd->add_option("--out-aif", compose->out_aif,
                    "output all-in-focus image")
        ->required();
    cmd->add_option("--out-depth", compose->out_depth, "output depth map")
        ->required();
    cmd->add_option("--window", compose->window,
                    "focus measure window, odd pixels")
        ->capture_default_str();
    cmd->add_option("--depth-unit", compose->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_option("--png-bits", compose->png_bits,
                    "PNG bit depth: 8 or 16")
        ->capture_default_str();
    cmd->add_flag("--verbose", compose->verbose,
                  "echo configuration to stderr");
    cmd->callback([compose] { run_compose(*compose); });
  }

  auto refine = std::make_shared<RefineParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "refine", "fill masked depth pixels from a second depth map");
    cmd->add_option("--primary", refine->primary, "primary depth map")
        ->required();
    cmd->add_option("--fill", refine->fill, "fill depth map")->required();
    cmd->add_option("--mask", refine->mask,
                    "mask image (nonzero = replace); omit to auto-detect "
                    "invalid pixels");
    cmd->add_option("--out", refine->out, "output depth map")->required();
    cmd->add_option("--depth-unit", refine->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_flag("--verbose", refine->verbose,
                  "echo configuration to stderr");
    cmd->callback([refine] { run_refine(*refine); });
  }

  auto defocus_p = std::make_shared<DefocusParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "defocus", "compute the blur-diameter map implied by a depth map");
    cmd->add_option("--depth", defocus_p->depth, "depth map, mm")->required();
    cmd->add_option("--focus-mm", defocus_p->focus_mm, "focus depth, mm")
        ->required();
    cmd->add_option("--out", defocus_p->out, "output map (.pfm|.png)")
        ->required();
    cmd->add_option("--depth-unit", defocus_p->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_flag("--verbose", defocus_p->verbose,
                  "echo configuration to stderr");
    defocus_p->lens.attach(cmd);
    cmd->callback([defocus_p] { run_defocus(*defocus_p); });
  }

  auto eval = std::make_shared<EvalParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "eval", "compare a predicted map against ground truth");
    cmd->add_option("--pred", eval->pred, "predicted map")->required();
    cmd->add_option("--gt", eval->gt, "ground-truth map")->required();
    cmd->add_option("--kind", eval->kind, "map kind: depth or defocus")
        ->check(CLI::IsMember({"depth", "defocus"}))
        ->capture_default_str();
    cmd->add_flag("--normalize", eval->normalize,
                  "min-max normalize both maps before comparing");
    cmd->add_option("--format", eval->format, "output format: kv or csv")
        ->check(CLI::IsMember({"kv", "csv"}))
        ->capture_default_str();
    cmd->add_option("--out", eval->out,
                    "output file (default: print to stdout)");
    cmd->add_option("--depth-unit", eval->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_flag("--verbose", eval->verbose, "echo configuration to stderr");
    cmd->callback([eval] { run_eval(*eval); });
  }

  auto gen = std::make_shared<GenSceneParams>();
  {
    CLI::App* cmd = app.add_subcommand(
        "gen-scene",
        "render a full scene (shots + blur maps + manifest) and re-validate "
        "it");
    cmd->add_option("--aif", gen->aif, "all-in-focus image")->required();
    cmd->add_option("--depth", gen->depth, "depth map, mm")->required();
    cmd->add_option("--out-dir", gen->out_dir, "scene output directory")
        ->required();
    cmd->add_option("--focus-min", gen->focus_min, "first focus depth, mm")
        ->required();
    cmd->add_option("--focus-max", gen->focus_max, "last focus depth, mm")
        ->required();
    cmd->add_option("--focus-count", gen->focus_count, "number of shots")
        ->capture_default_str();
    cmd->add_option("--scene-id", gen->scene_id,
                    "manifest scene id (default: directory name)");
    cmd->add_option("--depth-unit", gen->depth_unit,
                    "mm per integer unit for 16-bit PNG depth")
        ->capture_default_str();
    cmd->add_option("--png-bits", gen->png_bits, "PNG bit depth: 8 or 16")
        ->capture_default_str();
    cmd->add_flag("--verbose", gen->verbose, "echo configuration to stderr");
    gen->lens.attach(cmd);
    gen->render.attach(cmd);
    cmd->callback([gen] { run_gen_scene(*gen); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
