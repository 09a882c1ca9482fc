#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mvsfuse/dataset_io.hpp"
#include "mvsfuse/image.hpp"

using namespace mvsfuse;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

std::string binary_path() {
  const char* bin = std::getenv("MVSFUSE_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "MVSFUSE_BIN must point at the CLI binary");
  return bin;
}

RunResult run(const std::string& args) {
  const std::string cmd = binary_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 512> buf;
  while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "mvsfuse_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

// Small scene so CLI runs stay fast.
fs::path write_small_scene(const fs::path& dir) {
  const fs::path path = dir / "scene.json";
  std::ofstream out(path);
  out << R"({
    "frames": 5,
    "seed": 42,
    "intrinsics": {"fx": 90, "fy": 90, "cx": 39.5, "cy": 31.5, "width": 80, "height": 64},
    "trajectory": [
      {"translation": [0, 0, 0]},
      {"translation": [0.24, 0, 0.18]},
      {"translation": [0.48, 0, 0.36]},
      {"translation": [0.72, 0, 0.54]},
      {"translation": [0.96, 0, 0.72]}
    ],
    "primitives": [
      {"kind": "plane", "size": [200, 200], "pose": {"translation": [0, 0, 9]},
       "texture": {"kind": "value_noise", "scale": 0.5, "octaves": 3}},
      {"kind": "sphere", "size": [1.2], "pose": {"translation": [1.5, 0.5, 5]},
       "texture": {"kind": "value_noise", "scale": 0.3, "octaves": 2}}
    ]
  })";
  return path;
}

fs::path small_bench_config(const fs::path& dir) {
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << R"({
    "seed": 3,
    "sweep": {"d_min": 2.0, "d_max": 30.0, "n_bins": 32},
    "noise": {"levels": [0, 0.05, "identity"]}
  })";
  return path;
}

}  // namespace

TEST_CASE("gen renders a loadable sequence") {
  const fs::path dir = temp_dir("gen");
  const RunResult r =
      run("gen --suite textured_translate " + (dir / "seq").string());
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "seq" / "manifest.json"));
  const LoadedSequence seq = load_sequence(dir / "seq" / "manifest.json");
  CHECK(seq.frames.size() == 10);
  CHECK(fs::exists(dir / "seq" / "config.resolved"));
}

TEST_CASE("gen --suite stopped produces identical poses") {
  const fs::path dir = temp_dir("gen_stopped");
  const RunResult r = run("gen --suite stopped " + (dir / "seq").string());
  CHECK(r.exit_code == 0);
  const LoadedSequence seq = load_sequence(dir / "seq" / "manifest.json");
  for (const auto& f : seq.frames) {
    CHECK(f.cam_to_world.rotation == seq.frames[0].cam_to_world.rotation);
    CHECK(f.cam_to_world.translation ==
          seq.frames[0].cam_to_world.translation);
  }
}

TEST_CASE("gen is deterministic per seed") {
  const fs::path dir = temp_dir("gen_seed");
  const fs::path scene = write_small_scene(dir);
  CHECK(run("gen --spec " + scene.string() + " " + (dir / "a").string())
            .exit_code == 0);
  CHECK(run("gen --spec " + scene.string() + " " + (dir / "b").string())
            .exit_code == 0);
  CHECK(slurp(dir / "a" / "depth_0000.pfm") ==
        slurp(dir / "b" / "depth_0000.pfm"));
  CHECK(slurp(dir / "a" / "depth_0003.pfm") ==
        slurp(dir / "b" / "depth_0003.pfm"));

  // A different seed changes the rendered texture.
  CHECK(run("gen --seed 777 --spec " + scene.string() + " " +
            (dir / "c").string())
            .exit_code == 0);
  CHECK(slurp(dir / "a" / "image_0000.png") !=
        slurp(dir / "c" / "image_0000.png"));
}

TEST_CASE("depth writes the six maps and honors the window precondition") {
  const fs::path dir = temp_dir("depth");
  const fs::path scene = write_small_scene(dir);
  const fs::path cfg = small_bench_config(dir);
  REQUIRE(run("gen --spec " + scene.string() + " " + (dir / "seq").string())
              .exit_code == 0);
  const std::string manifest = (dir / "seq" / "manifest.json").string();

  SUBCASE("frames without both neighbors exit 2") {
    CHECK(run("depth --manifest " + manifest + " --frame 0 " +
              (dir / "out").string())
              .exit_code == 2);
    CHECK(run("depth --manifest " + manifest + " --frame 4 " +
              (dir / "out").string())
              .exit_code == 2);
  }
  SUBCASE("a valid frame produces parseable outputs") {
    const RunResult r =
        run("depth --config " + cfg.string() + " --manifest " + manifest +
            " --frame 2 " + (dir / "out").string());
    CHECK(r.exit_code == 0);
    for (const char* name :
         {"d_s.pfm", "d_m.pfm", "d_fuse.pfm", "m_m.pfm", "m_w.pfm",
          "weight.pfm"}) {
      REQUIRE_MESSAGE(fs::exists(dir / "out" / name), name);
      const DepthMap m = read_pfm(dir / "out" / name);
      CHECK(m.width == 80);
      CHECK(m.height == 64);
    }
    CHECK(fs::exists(dir / "out" / "config.resolved"));
  }
}

TEST_CASE("bench emits reports deterministically") {
  const fs::path dir = temp_dir("bench");
  const fs::path scene = write_small_scene(dir);
  const fs::path cfg = small_bench_config(dir);
  REQUIRE(run("gen --spec " + scene.string() + " " + (dir / "seq").string())
              .exit_code == 0);
  const std::string manifest = (dir / "seq" / "manifest.json").string();

  const RunResult r = run("bench --config " + cfg.string() + " --manifest " +
                          manifest + " " + (dir / "r1").string());
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "r1" / "report.csv"));
  REQUIRE(fs::exists(dir / "r1" / "summary.csv"));
  REQUIRE(fs::exists(dir / "r1" / "plot.svg"));

  const std::string summary = slurp(dir / "r1" / "summary.csv");
  CHECK(summary.find("d_m,") != std::string::npos);
  CHECK(summary.find("d_fuse,") != std::string::npos);

  SUBCASE("same seed and different worker counts match byte for byte") {
    CHECK(run("bench --jobs 1 --config " + cfg.string() + " --manifest " +
              manifest + " " + (dir / "r2").string())
              .exit_code == 0);
    CHECK(run("bench --jobs 3 --config " + cfg.string() + " --manifest " +
              manifest + " " + (dir / "r3").string())
              .exit_code == 0);
    CHECK(slurp(dir / "r1" / "report.csv") == slurp(dir / "r2" / "report.csv"));
    CHECK(slurp(dir / "r2" / "report.csv") == slurp(dir / "r3" / "report.csv"));
    CHECK(slurp(dir / "r2" / "summary.csv") ==
          slurp(dir / "r3" / "summary.csv"));
  }
  SUBCASE("--levels restricts the rows") {
    CHECK(run("bench --config " + cfg.string() + " --levels 0 --manifest " +
              manifest + " " + (dir / "r0").string())
              .exit_code == 0);
    std::ifstream in(dir / "r0" / "report.csv");
    std::string line;
    int rows = -1;  // header
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 3);
  }
  SUBCASE("dotted overrides reach the config") {
    CHECK(run("bench --config " + cfg.string() +
              " --sweep.n_bins=16 --manifest " + manifest + " " +
              (dir / "r16").string())
              .exit_code == 0);
    const std::string resolved = slurp(dir / "r16" / "config.resolved");
    CHECK(resolved.find("\"n_bins\": 16") != std::string::npos);
    // Unknown keys are rejected.
    CHECK(run("bench --config " + cfg.string() +
              " --sweep.bogus=1 --manifest " + manifest + " " +
              (dir / "rbad").string())
              .exit_code == 1);
  }
}

TEST_CASE("eval prints the metric row") {
  const fs::path dir = temp_dir("eval");
  DepthMap gt(8, 8, 2.0f);
  DepthMap pred(8, 8, 4.0f);
  write_pfm(gt, dir / "gt.pfm");
  write_pfm(pred, dir / "pred.pfm");

  SUBCASE("identical maps score zero") {
    const RunResult r =
        run("eval " + (dir / "gt.pfm").string() + " " +
            (dir / "gt.pfm").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.rfind("abs_rel,sq_rel,rmse,n_pixels\n", 0) == 0);
    CHECK(r.output.find("\n0,0,0,64") != std::string::npos);
  }
  SUBCASE("doubled depth gives abs_rel 1") {
    const RunResult r = run("eval " + (dir / "pred.pfm").string() + " " +
                            (dir / "gt.pfm").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\n1,2,2,64") != std::string::npos);
  }
  SUBCASE("shape mismatch exits 1") {
    DepthMap small(4, 4, 2.0f);
    write_pfm(small, dir / "small.pfm");
    const RunResult r = run("eval " + (dir / "small.pfm").string() + " " +
                            (dir / "gt.pfm").string());
    CHECK(r.exit_code == 1);
  }
}

TEST_CASE("report regenerates the plot from CSV") {
  const fs::path dir = temp_dir("report");
  const fs::path scene = write_small_scene(dir);
  const fs::path cfg = small_bench_config(dir);
  REQUIRE(run("gen --spec " + scene.string() + " " + (dir / "seq").string())
              .exit_code == 0);
  REQUIRE(run("bench --config " + cfg.string() + " --manifest " +
              (dir / "seq" / "manifest.json").string() + " " +
              (dir / "r").string())
              .exit_code == 0);
  const RunResult r = run("report --input " + (dir / "r" / "report.csv").string() +
                          " " + (dir / "replot").string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(dir / "r" / "plot.svg") == slurp(dir / "replot" / "plot.svg"));
}

TEST_CASE("MVSFUSE_SEED is the lowest-priority seed source") {
  const fs::path dir = temp_dir("envseed");
  const fs::path scene = write_small_scene(dir);
  // The scene file pins its own seed; strip it via a sceneless config path:
  // gen --spec uses the spec seed unless a seed is explicitly provided, so
  // compare env-seeded runs against --seed runs.
  setenv("MVSFUSE_SEED", "777", 1);
  CHECK(run("gen --spec " + scene.string() + " " + (dir / "env").string())
            .exit_code == 0);
  unsetenv("MVSFUSE_SEED");
  CHECK(run("gen --seed 777 --spec " + scene.string() + " " +
            (dir / "flag").string())
            .exit_code == 0);
  CHECK(slurp(dir / "env" / "image_0000.png") ==
        slurp(dir / "flag" / "image_0000.png"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("nonsense").exit_code == 2);
  CHECK(run("gen /tmp/nowhere_gen").exit_code == 2);  // no suite or spec
  CHECK(run("bench --manifest /tmp/does_not_exist.json").exit_code == 2);
}
