#include "defocus/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include "defocus/errors.hpp"
#include "defocus/metrics.hpp"

namespace defocus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed to write " + path);
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw DataError(std::string("manifest field '") + key +
                    "' missing or not a number");
  }
  return j.at(key).get<double>();
}

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw DataError(std::string("manifest field '") + key +
                    "' missing or not a string");
  }
  return j.at(key).get<std::string>();
}

json lens_to_json(const LensConfig& lens) {
  return json{{"focal_length_mm", lens.focal_length_mm},
              {"f_number", lens.f_number},
              {"pixel_size_mm", lens.pixel_size_mm},
              {"output_scale", lens.output_scale},
              {"coc_scale", lens.coc_scale}};
}

LensConfig lens_from_json(const json& j) {
  LensConfig lens;
  lens.focal_length_mm = require_number(j, "focal_length_mm");
  lens.f_number = require_number(j, "f_number");
  lens.pixel_size_mm = require_number(j, "pixel_size_mm");
  lens.output_scale = require_number(j, "output_scale");
  lens.coc_scale = require_number(j, "coc_scale");
  lens.validate();
  return lens;
}

SceneManifest manifest_from_json(const json& j) {
  SceneManifest m;
  const double version = require_number(j, "schema_version");
  m.schema_version = static_cast<int>(version);
  if (m.schema_version != 1) {
    throw DataError("unsupported manifest schema_version " +
                    std::to_string(m.schema_version));
  }
  m.scene_id = require_string(j, "scene_id");
  if (!j.contains("lens") || !j.at("lens").is_object()) {
    throw DataError("manifest field 'lens' missing or not an object");
  }
  m.lens = lens_from_json(j.at("lens"));
  m.all_in_focus_path = require_string(j, "all_in_focus_path");
  m.depth_path = require_string(j, "depth_path");
  m.depth_unit_scale = require_number(j, "depth_unit_scale");
  if (!j.contains("shots") || !j.at("shots").is_array()) {
    throw DataError("manifest field 'shots' missing or not an array");
  }
  for (const json& s : j.at("shots")) {
    ShotEntry e;
    e.focused_image_path = require_string(s, "focused_image_path");
    e.focus_depth_mm = require_number(s, "focus_depth_mm");
    e.defocus_map_path = require_string(s, "defocus_map_path");
    m.shots.push_back(std::move(e));
  }
  m.validate();
  return m;
}

json manifest_to_json(const SceneManifest& m) {
  json shots = json::array();
  for (const ShotEntry& e : m.shots) {
    shots.push_back(json{{"focused_image_path", e.focused_image_path},
                         {"focus_depth_mm", e.focus_depth_mm},
                         {"defocus_map_path", e.defocus_map_path}});
  }
  return json{{"schema_version", m.schema_version},
              {"scene_id", m.scene_id},
              {"lens", lens_to_json(m.lens)},
              {"all_in_focus_path", m.all_in_focus_path},
              {"depth_path", m.depth_path},
              {"depth_unit_scale", m.depth_unit_scale},
              {"shots", shots}};
}

std::string shot_stem(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", index);
  return buf;
}

void require_strictly_increasing(const std::vector<double>& depths) {
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!std::isfinite(depths[i]) || depths[i] <= 0.0) {
      throw DataError("focus depth " + std::to_string(i) +
                      " must be finite and positive");
    }
    if (i > 0 && depths[i] <= depths[i - 1]) {
      throw DataError("focus depths must be strictly increasing (index " +
                      std::to_string(i) + ")");
    }
  }
}

}  // namespace

void SceneManifest::validate() const {
  if (schema_version != 1) {
    throw DataError("unsupported manifest schema_version " +
                    std::to_string(schema_version));
  }
  lens.validate();
  if (all_in_focus_path.empty() || depth_path.empty()) {
    throw DataError("manifest image paths must be nonempty");
  }
  if (!std::isfinite(depth_unit_scale) || depth_unit_scale <= 0.0) {
    throw DataError("depth_unit_scale must be finite and positive");
  }
  if (shots.empty()) throw DataError("manifest must list at least one shot");
  std::vector<double> depths;
  depths.reserve(shots.size());
  for (const ShotEntry& e : shots) {
    if (e.focused_image_path.empty() || e.defocus_map_path.empty()) {
      throw DataError("shot paths must be nonempty");
    }
    depths.push_back(e.focus_depth_mm);
  }
  require_strictly_increasing(depths);
}

SceneManifest load_manifest(const std::string& manifest_path) {
  const SceneManifest m = manifest_from_json(parse_json_file(manifest_path));
  const fs::path base = fs::path(manifest_path).parent_path();
  auto check = [&base](const std::string& rel) {
    if (!fs::exists(base / rel)) {
      throw DataError("missing file referenced by manifest: " + rel);
    }
  };
  check(m.all_in_focus_path);
  check(m.depth_path);
  for (const ShotEntry& e : m.shots) {
    check(e.focused_image_path);
    check(e.defocus_map_path);
  }
  return m;
}

void save_manifest(const SceneManifest& manifest,
                   const std::string& manifest_path) {
  manifest.validate();
  write_json_file(manifest_to_json(manifest), manifest_path);
}

SceneManifest generate_scene(const Raster& all_in_focus, const DepthMap& depth,
                             const LensConfig& lens,
                             const std::vector<double>& focus_depths_mm,
                             const std::string& out_dir,
                             const GenerateOptions& opts) {
  lens.validate();
  opts.render.validate();
  if (all_in_focus.height != depth.height ||
      all_in_focus.width != depth.width) {
    throw DomainError("all-in-focus image and depth map shapes differ");
  }
  if (!depth.fully_valid()) {
    throw DataError("scene depth must be fully valid (refine first)");
  }
  if (focus_depths_mm.empty()) {
    throw DomainError("at least one focus depth is required");
  }
  require_strictly_increasing(focus_depths_mm);
  for (double fd : focus_depths_mm) {
    FocusSetting::at_depth(fd).validate(lens);
  }

  // Stored depth is float32 (PFM); computing the shots from the quantized
  // values keeps the written defocus maps exactly consistent with what a
  // reader recomputes from the written depth.
  DepthMap qdepth = depth;
  for (double& v : qdepth.values) v = static_cast<double>(static_cast<float>(v));
  for (int y = 0; y < qdepth.height; ++y) {
    for (int x = 0; x < qdepth.width; ++x) {
      const double v = qdepth.value_at(y, x);
      if (!std::isfinite(v) || v <= 0.0) {
        throw DataError("depth at (y=" + std::to_string(y) + ", x=" +
                        std::to_string(x) +
                        ") is not a positive finite value after float32 "
                        "quantization");
      }
    }
  }

  try {
    fs::create_directories(fs::path(out_dir) / "shots");
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create scene directories: ") + e.what());
  }

  SceneManifest m;
  m.lens = lens;
  m.all_in_focus_path = "aif.png";
  m.depth_path = "depth.pfm";
  m.depth_unit_scale = kDefaultDepthUnitMm;
  if (opts.scene_id.empty()) {
    fs::path p(out_dir);
    if (p.filename().empty()) p = p.parent_path();
    m.scene_id = p.filename().string().empty() ? "scene"
                                               : p.filename().string();
  } else {
    m.scene_id = opts.scene_id;
  }

  save_raster(all_in_focus, (fs::path(out_dir) / m.all_in_focus_path).string(),
              opts.image_depth);
  save_depth(qdepth, (fs::path(out_dir) / m.depth_path).string());

  for (std::size_t i = 0; i < focus_depths_mm.size(); ++i) {
    const std::string stem = shot_stem(i);
    ShotEntry e;
    e.focus_depth_mm = focus_depths_mm[i];
    e.focused_image_path = "shots/" + stem + "_img.png";
    e.defocus_map_path = "shots/" + stem + "_defocus.pfm";

    const FocusSetting setting = FocusSetting::at_depth(e.focus_depth_mm);
    const Raster shot =
        render_focused(all_in_focus, qdepth, setting, lens, opts.render);
    save_raster(shot, (fs::path(out_dir) / e.focused_image_path).string(),
                opts.image_depth);
    const DefocusMap coc = defocus_map_from_depth(qdepth, setting, lens);
    save_defocus(coc, (fs::path(out_dir) / e.defocus_map_path).string());
    m.shots.push_back(std::move(e));
  }

  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

ValidationReport validate_scene(const std::string& manifest_path) {
  ValidationReport rep;
  json j;
  {
    std::ifstream in(manifest_path);
    if (!in) {
      rep.findings.push_back("cannot open manifest: " + manifest_path);
      return rep;
    }
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      rep.findings.push_back(std::string("invalid JSON: ") + e.what());
      return rep;
    }
  }
  SceneManifest m;
  try {
    m = manifest_from_json(j);
  } catch (const std::exception& e) {
    rep.findings.push_back(std::string("manifest: ") + e.what());
    return rep;
  }

  const fs::path base = fs::path(manifest_path).parent_path();
  auto present = [&](const std::string& rel) {
    if (fs::exists(base / rel)) return true;
    rep.findings.push_back("missing file: " + rel);
    return false;
  };

  const bool have_aif = present(m.all_in_focus_path);
  const bool have_depth = present(m.depth_path);
  std::vector<std::pair<bool, bool>> have_shot(m.shots.size());
  for (std::size_t i = 0; i < m.shots.size(); ++i) {
    have_shot[i] = {present(m.shots[i].focused_image_path),
                    present(m.shots[i].defocus_map_path)};
  }

  Raster aif;
  bool aif_ok = false;
  if (have_aif) {
    try {
      aif = load_raster((base / m.all_in_focus_path).string());
      aif_ok = true;
    } catch (const std::exception& e) {
      rep.findings.push_back(m.all_in_focus_path + ": " + e.what());
    }
  }
  DepthMap depth;
  bool depth_ok = false;
  if (have_depth) {
    try {
      depth = load_depth((base / m.depth_path).string(), m.depth_unit_scale);
      depth_ok = true;
    } catch (const std::exception& e) {
      rep.findings.push_back(m.depth_path + ": " + e.what());
    }
  }
  if (aif_ok && depth_ok &&
      (aif.height != depth.height || aif.width != depth.width)) {
    rep.findings.push_back("all-in-focus image shape differs from depth map");
  }

  for (std::size_t i = 0; i < m.shots.size(); ++i) {
    const ShotEntry& e = m.shots[i];
    if (have_shot[i].first) {
      try {
        const Raster img =
            load_raster((base / e.focused_image_path).string());
        if (depth_ok &&
            (img.height != depth.height || img.width != depth.width)) {
          rep.findings.push_back(e.focused_image_path +
                                 ": shape differs from depth map");
        }
      } catch (const std::exception& ex) {
        rep.findings.push_back(e.focused_image_path + ": " + ex.what());
      }
    }
    if (!have_shot[i].second) continue;
    DefocusMap stored;
    try {
      stored = load_defocus((base / e.defocus_map_path).string());
    } catch (const std::exception& ex) {
      rep.findings.push_back(e.defocus_map_path + ": " + ex.what());
      continue;
    }
    if (depth_ok &&
        (stored.height != depth.height || stored.width != depth.width)) {
      rep.findings.push_back(e.defocus_map_path +
                             ": shape differs from depth map");
      continue;
    }
    if (!depth_ok) continue;

    DefocusMap recomputed;
    try {
      recomputed = defocus_map_from_depth(
          depth, FocusSetting::at_depth(e.focus_depth_mm), m.lens);
    } catch (const std::exception& ex) {
      rep.findings.push_back(e.defocus_map_path +
                             ": cannot recompute from depth: " + ex.what());
      continue;
    }

    // PFM stores float32, so compare at storage precision; PNG carries the
    // quantization of its fixed unit.
    const bool is_pfm =
        e.defocus_map_path.size() >= 4 &&
        e.defocus_map_path.substr(e.defocus_map_path.size() - 4) == ".pfm";
    const double tol = is_pfm ? 1e-9 : 1e-4 + 1e-12;
    double worst = 0.0;
    bool validity_mismatch = false;
    for (int y = 0; y < stored.height && !validity_mismatch; ++y) {
      for (int x = 0; x < stored.width; ++x) {
        if (stored.is_valid(y, x) != recomputed.is_valid(y, x)) {
          validity_mismatch = true;
          break;
        }
        if (!stored.is_valid(y, x)) continue;
        const double expect =
            is_pfm ? static_cast<double>(
                         static_cast<float>(recomputed.value_at(y, x)))
                   : recomputed.value_at(y, x);
        worst = std::max(worst, std::abs(expect - stored.value_at(y, x)));
      }
    }
    if (validity_mismatch) {
      rep.findings.push_back(e.defocus_map_path +
                             ": validity mask disagrees with depth map");
    } else if (worst > tol) {
      rep.findings.push_back(
          e.defocus_map_path + ": deviates from the map recomputed at " +
          format_double(e.focus_depth_mm) + "mm by " + format_double(worst) +
          "px (tolerance " + format_double(tol) + "px)");
    }
  }
  return rep;
}

StackManifest load_stack_manifest(const std::string& manifest_path) {
  const json j = parse_json_file(manifest_path);
  StackManifest m;
  const double version = require_number(j, "schema_version");
  m.schema_version = static_cast<int>(version);
  if (m.schema_version != 1) {
    throw DataError("unsupported stack schema_version " +
                    std::to_string(m.schema_version));
  }
  if (!j.contains("shots") || !j.at("shots").is_array()) {
    throw DataError("stack manifest field 'shots' missing or not an array");
  }
  for (const json& s : j.at("shots")) {
    StackManifest::Entry e;
    e.image_path = require_string(s, "image_path");
    e.focus_depth_mm = require_number(s, "focus_depth_mm");
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) {
    throw DataError("stack manifest must list at least one shot");
  }
  std::vector<double> depths;
  depths.reserve(m.entries.size());
  for (const auto& e : m.entries) depths.push_back(e.focus_depth_mm);
  require_strictly_increasing(depths);
  return m;
}

void save_stack_manifest(const StackManifest& manifest,
                         const std::string& manifest_path) {
  json shots = json::array();
  for (const StackManifest::Entry& e : manifest.entries) {
    shots.push_back(json{{"image_path", e.image_path},
                         {"focus_depth_mm", e.focus_depth_mm}});
  }
  write_json_file(json{{"schema_version", manifest.schema_version},
                       {"shots", shots}},
                  manifest_path);
}

FocusStack load_focus_stack(const std::string& manifest_path) {
  const json j = parse_json_file(manifest_path);
  std::vector<std::pair<std::string, double>> listed;
  if (j.contains("shots") && j.at("shots").is_array() &&
      !j.at("shots").empty() && j.at("shots").front().is_object() &&
      j.at("shots").front().contains("focused_image_path")) {
    const SceneManifest m = load_manifest(manifest_path);
    for (const ShotEntry& e : m.shots) {
      listed.emplace_back(e.focused_image_path, e.focus_depth_mm);
    }
  } else {
    const StackManifest m = load_stack_manifest(manifest_path);
    for (const StackManifest::Entry& e : m.entries) {
      listed.emplace_back(e.image_path, e.focus_depth_mm);
    }
  }

  const fs::path base = fs::path(manifest_path).parent_path();
  FocusStack stack;
  for (const auto& [rel, fd] : listed) {
    stack.members.push_back(load_raster((base / rel).string()));
    stack.focus_depths_mm.push_back(fd);
  }
  validate_stack(stack);
  return stack;
}

}  // namespace defocus
