#pragma once

#include <string>
#include <vector>

#include "defocus/image_io.hpp"
#include "defocus/optics.hpp"
#include "defocus/render.hpp"
#include "defocus/types.hpp"

namespace defocus {

struct ShotEntry {
  std::string focused_image_path;
  double focus_depth_mm = 0.0;
  std::string defocus_map_path;
};

// Scene layout on disk:
//   <scene>/manifest.json
//   <scene>/aif.png            all-in-focus image
//   <scene>/depth.pfm          ground-truth depth, millimeters
//   <scene>/shots/<t>_img.png  focused image at shots[t].focus_depth_mm
//   <scene>/shots/<t>_defocus.pfm  matching CoC map, pixels
// Manifest paths are stored relative to the manifest's directory.
struct SceneManifest {
  int schema_version = 1;
  std::string scene_id;
  LensConfig lens;
  std::string all_in_focus_path;
  std::string depth_path;
  double depth_unit_scale = kDefaultDepthUnitMm;
  std::vector<ShotEntry> shots;

  // Structural invariants: nonempty shots, strictly increasing focus depths,
  // positive unit scale, valid lens. Does not touch the filesystem.
  void validate() const;
};

// Parses and validates the manifest, then checks that every referenced file
// exists. Throws DataError on schema or invariant violations, IoError when
// the manifest itself cannot be read.
SceneManifest load_manifest(const std::string& manifest_path);
void save_manifest(const SceneManifest& manifest,
                   const std::string& manifest_path);

struct GenerateOptions {
  RenderOptions render;
  PngBitDepth image_depth = PngBitDepth::bits16;
  std::string scene_id;  // defaults to the output directory name
};

// Renders one focused image plus its ground-truth defocus map per focus
// depth and writes the full scene layout, manifest last. The depth map is
// quantized to float32 before use so that the stored maps agree exactly
// with what a reader recomputes from the stored depth. Deterministic:
// identical inputs produce byte-identical files.
SceneManifest generate_scene(const Raster& all_in_focus, const DepthMap& depth,
                             const LensConfig& lens,
                             const std::vector<double>& focus_depths_mm,
                             const std::string& out_dir,
                             const GenerateOptions& opts = {});

struct ValidationReport {
  std::vector<std::string> findings;
  bool ok() const { return findings.empty(); }
};

// Re-checks a scene on disk: manifest schema, file existence, shape
// agreement, and that each stored defocus map matches the map recomputed
// from the stored depth (tolerance 1e-9 px for PFM, 1e-4 px for quantized
// PNG). Collects findings instead of throwing.
ValidationReport validate_scene(const std::string& manifest_path);

// Flat focus-stack manifest: a list of image paths with focus depths,
// stored as JSON next to the images.
struct StackManifest {
  struct Entry {
    std::string image_path;
    double focus_depth_mm = 0.0;
  };
  int schema_version = 1;
  std::vector<Entry> entries;
};

StackManifest load_stack_manifest(const std::string& manifest_path);
void save_stack_manifest(const StackManifest& manifest,
                         const std::string& manifest_path);

// Loads the images listed by either a stack manifest or a scene manifest
// (detected by shot key names) into memory, in manifest order.
FocusStack load_focus_stack(const std::string& manifest_path);

}  // namespace defocus
