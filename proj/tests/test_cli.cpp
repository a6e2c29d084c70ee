#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "defocus/dataset.hpp"
#include "defocus/image_io.hpp"
#include "defocus/metrics.hpp"

using namespace defocus;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  static const fs::path root = [] {
    fs::path p = fs::current_path() / "test_cli_scratch";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

RunResult run(const std::string& args) {
  const char* bin = std::getenv("DEFOCUSTOOL_BIN");
  REQUIRE_MESSAGE(bin != nullptr,
                  "DEFOCUSTOOL_BIN must point at the defocustool binary");
  static int counter = 0;
  const fs::path out_file =
      scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err_file =
      scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;

  const std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" +
                          out_file.string() + "\" 2> \"" + err_file.string() +
                          "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("render --help").code == 0);

  const RunResult none = run("");
  CHECK(none.code == 2);
  CHECK(starts_with(none.err, "error: usage:"));

  CHECK(run("no-such-command").code == 2);
  CHECK(run("render --nope").code == 2);
  CHECK(run("render").code == 2);  // missing required options

  // The two lens parameterizations are mutually exclusive.
  const fs::path d = scratch_dir();
  const RunResult both = run("render --aif a.png --depth d.png --focus-mm 700"
                             " --out o.png --coc-scale 800 --pixel-mm 0.005");
  CHECK(both.code == 2);
  CHECK(starts_with(both.err, "error: usage:"));
}

TEST_CASE("synthesized texture and depth") {
  const fs::path d = scratch_dir();
  const RunResult r = run(
      "synth --out-aif " + q(d / "aif.png") + " --out-depth " +
      q(d / "depth.png") +
      " --height 32 --width 32 --channels 3 --planes 2 --depth-min 600"
      " --depth-max 900 --seed 7");
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "aif.png"));
  CHECK(fs::exists(d / "depth.png"));
  CHECK(r.out.find("wrote ") != std::string::npos);

  const Raster aif = load_raster((d / "aif.png").string());
  CHECK(aif.height == 32);
  CHECK(aif.channels == 3);
  const DepthMap depth = load_depth((d / "depth.png").string());
  CHECK(depth.value_at(0, 0) == 600.0);
  CHECK(depth.value_at(0, 31) == 900.0);

  CHECK(run("synth --out-aif x.png --out-depth y.png --layout spiral").code ==
        2);
  CHECK(run("synth --out-aif " + q(d / "x.png") + " --out-depth " +
            q(d / "y.png") + " --png-bits 7")
            .code == 3);
  CHECK(run("synth --out-aif " + q(d / "x.png") + " --out-depth " +
            q(d / "y.png") + " --channels 2")
            .code == 3);
}

TEST_CASE("render error reporting") {
  const fs::path d = scratch_dir();
  // Focus at or below the focal length is a domain error.
  const RunResult bad_focus =
      run("render --aif " + q(d / "aif.png") + " --depth " + q(d / "depth.png") +
          " --focus-mm 10 --out " + q(d / "r.png"));
  CHECK(bad_focus.code == 3);
  CHECK(starts_with(bad_focus.err, "error: data:"));

  const RunResult missing =
      run("render --aif " + q(d / "no_such_file.png") + " --depth " +
          q(d / "depth.png") + " --focus-mm 700 --out " + q(d / "r.png"));
  CHECK(missing.code == 4);
  CHECK(starts_with(missing.err, "error: io:"));
}

TEST_CASE("defocus map at the focus plane is zero") {
  const fs::path d = scratch_dir() / "flat";
  REQUIRE(run("synth --out-aif " + q(d / "aif.png") + " --out-depth " +
              q(d / "depth.png") +
              " --height 8 --width 8 --planes 1 --depth-min 700")
              .code == 0);
  const RunResult r =
      run("defocus --depth " + q(d / "depth.png") + " --focus-mm 700 --out " +
          q(d / "j.pfm") + " --coc-scale 800");
  CHECK(r.code == 0);
  const DefocusMap j = load_defocus((d / "j.pfm").string());
  for (double v : j.values) CHECK(v == 0.0);
}

TEST_CASE("eval of identical maps prints the identity row") {
  const fs::path d = scratch_dir() / "flat";  // written by the previous case
  const RunResult r = run("eval --pred " + q(d / "depth.png") + " --gt " +
                          q(d / "depth.png") + " --format csv");
  CHECK(r.code == 0);
  CHECK(r.out ==
        "delta_1.05,delta_1.15,delta_1.25,abs_rel,sq_rel,rmse,rmse_log,log10\n"
        "1,1,1,0,0,0,0,0\n");

  const RunResult kv = run("eval --pred " + q(d / "depth.png") + " --gt " +
                           q(d / "depth.png"));
  CHECK(kv.code == 0);
  CHECK(kv.out.find("delta_1.05=1\n") != std::string::npos);
  CHECK(kv.out.find("rmse=0\n") != std::string::npos);
}

TEST_CASE("stack, compose, refine, eval pipeline") {
  const fs::path d = scratch_dir() / "pipe";
  REQUIRE(run("synth --out-aif " + q(d / "aif.png") + " --out-depth " +
              q(d / "depth.png") +
              " --height 32 --width 32 --planes 2 --depth-min 600"
              " --depth-max 900 --seed 11")
              .code == 0);

  const RunResult st = run(
      "stack --aif " + q(d / "aif.png") + " --depth " + q(d / "depth.png") +
      " --out-dir " + q(d / "shots") +
      " --focus-min 600 --focus-max 900 --focus-count 4 --coc-scale 800"
      " --max-kernel-radius 6");
  CHECK(st.code == 0);
  for (const char* name :
       {"0000_img.png", "0001_img.png", "0002_img.png", "0003_img.png",
        "stack.json"}) {
    CHECK(fs::exists(d / "shots" / name));
  }
  const StackManifest sm =
      load_stack_manifest((d / "shots" / "stack.json").string());
  REQUIRE(sm.entries.size() == 4);
  CHECK(sm.entries.front().focus_depth_mm == 600.0);
  CHECK(sm.entries.back().focus_depth_mm == 900.0);

  const RunResult co =
      run("compose --stack " + q(d / "shots" / "stack.json") + " --out-aif " +
          q(d / "composed.png") + " --out-depth " + q(d / "sf_depth.png") +
          " --window 9");
  CHECK(co.code == 0);
  const DepthMap sf = load_depth((d / "sf_depth.png").string());
  CHECK(sf.fully_valid());
  CHECK(sf.height == 32);

  // Force a refinement by masking a block to be filled from ground truth.
  Raster mask = Raster::zeros(32, 32, 1);
  for (int y = 4; y < 9; ++y) {
    for (int x = 4; x < 9; ++x) mask.at(y, x) = 1.0;
  }
  save_raster(mask, (d / "mask.png").string(), PngBitDepth::bits8);
  const RunResult rf =
      run("refine --primary " + q(d / "sf_depth.png") + " --fill " +
          q(d / "depth.png") + " --mask " + q(d / "mask.png") + " --out " +
          q(d / "refined.png"));
  CHECK(rf.code == 0);
  const DepthMap refined = load_depth((d / "refined.png").string());
  CHECK(refined.fully_valid());
  CHECK(refined.value_at(5, 5) == 600.0);  // filled from the left plane

  const RunResult ev = run("eval --pred " + q(d / "refined.png") + " --gt " +
                           q(d / "depth.png") + " --out " +
                           q(d / "metrics.txt"));
  CHECK(ev.code == 0);
  const std::string text = slurp(d / "metrics.txt");
  CHECK(text.find("delta_1.25=") != std::string::npos);
  CHECK(text.find("rmse=") != std::string::npos);
}

TEST_CASE("scene generation command") {
  const fs::path d = scratch_dir() / "scene";
  REQUIRE(run("synth --out-aif " + q(d / "aif.png") + " --out-depth " +
              q(d / "depth.png") +
              " --height 24 --width 24 --planes 2 --depth-min 600"
              " --depth-max 900 --seed 3")
              .code == 0);
  const RunResult g = run(
      "gen-scene --aif " + q(d / "aif.png") + " --depth " + q(d / "depth.png") +
      " --out-dir " + q(d / "out") +
      " --focus-min 600 --focus-max 900 --focus-count 3 --coc-scale 800"
      " --max-kernel-radius 6 --scene-id demo");
  CHECK(g.code == 0);
  CHECK(g.out.find("manifest.json") != std::string::npos);

  const SceneManifest m = load_manifest((d / "out" / "manifest.json").string());
  CHECK(m.scene_id == "demo");
  REQUIRE(m.shots.size() == 3);
  CHECK(m.shots[1].focus_depth_mm == 750.0);

  // A scene manifest also drives compose directly.
  const RunResult co =
      run("compose --stack " + q(d / "out" / "manifest.json") + " --out-aif " +
          q(d / "c.png") + " --out-depth " + q(d / "cd.png"));
  CHECK(co.code == 0);
  CHECK(fs::exists(d / "c.png"));

  // Defocus evaluation across two focus settings, normalized.
  REQUIRE(run("defocus --depth " + q(d / "depth.png") +
              " --focus-mm 700 --out " + q(d / "j700.pfm") + " --coc-scale 800")
              .code == 0);
  REQUIRE(run("defocus --depth " + q(d / "depth.png") +
              " --focus-mm 650 --out " + q(d / "j650.pfm") + " --coc-scale 800")
              .code == 0);
  const RunResult ev =
      run("eval --pred " + q(d / "j650.pfm") + " --gt " + q(d / "j700.pfm") +
          " --kind defocus --normalize --format csv");
  CHECK(ev.code == 0);
  CHECK(starts_with(ev.out, MetricReport::csv_header()));
}
