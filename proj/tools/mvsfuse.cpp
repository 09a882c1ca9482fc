#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mvsfuse/config.hpp"
#include "mvsfuse/dataset_io.hpp"
#include "mvsfuse/errors.hpp"
#include "mvsfuse/evalbench.hpp"
#include "mvsfuse/mono_prior.hpp"
#include "mvsfuse/parallel.hpp"
#include "mvsfuse/rng.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace fs = std::filesystem;
using namespace mvsfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

// Precondition failures map to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pulls `--block.key[=value]` tokens out of argv; everything the config
// schema owns is addressed by dotted path.
std::vector<std::string> extract_overrides(int argc, char** argv,
                                           std::vector<ConfigOverride>& out) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.size() > 2 && a.rfind("--", 0) == 0) {
      const auto eq = a.find('=');
      const std::string name =
          a.substr(2, (eq == std::string::npos ? a.size() : eq) - 2);
      if (name.find('.') != std::string::npos) {
        std::string value;
        if (eq != std::string::npos) {
          value = a.substr(eq + 1);
        } else if (i + 1 < argc) {
          value = argv[++i];
        } else {
          throw UsageError("missing value for override --" + name);
        }
        out.push_back({name, value});
        continue;
      }
    }
    args.push_back(a);
  }
  return args;
}

PriorProvider make_prior_provider(const LoadedSequence& loaded,
                                  const Sequence& seq,
                                  const RunConfig& config) {
  if (config.prior.source == RunConfig::Prior::Source::File) {
    std::vector<std::string> paths;
    for (const auto& f : loaded.frames) paths.push_back(f.prior_depth_path);
    return [paths](int frame_index) {
      const std::string& p = paths[static_cast<std::size_t>(frame_index)];
      if (p.empty())
        throw InvalidSpec("prior.source is \"file\" but frame " +
                          std::to_string(frame_index) +
                          " has no prior_depth_path");
      return load_prior(p);
    };
  }
  for (const auto& f : seq.frames)
    if (f.gt_depth.width == 0)
      throw InvalidSpec(
          "prior.source is \"synth\" but the sequence has no ground-truth "
          "depth");
  return synth_prior_provider(seq, config.prior.scale,
                              config.prior.smooth_err_amp,
                              config.prior.smooth_err_scale, config.seed);
}

int cmd_gen(const RunConfig& config, const std::string& suite,
            const std::string& spec_path, const fs::path& out_dir) {
  SceneSpec spec;
  if (!suite.empty() && !spec_path.empty())
    throw UsageError("gen: give either --suite or --spec, not both");
  if (!suite.empty()) {
    spec = standard_spec(suite);
  } else if (!spec_path.empty()) {
    spec = load_scene_spec(spec_path);
  } else if (config.scene) {
    spec = scene_spec_from_json(*config.scene);
  } else {
    throw UsageError("gen: need --suite, --spec, or a scene block in the config");
  }
  if (config.seed_source != RunConfig::SeedSource::Default)
    spec.seed = config.seed;
  const Sequence seq = generate(spec);
  const fs::path manifest = save_sequence(seq, out_dir);
  write_resolved_config(config, out_dir);
  std::cout << manifest.string() << "\n";
  return kExitOk;
}

int cmd_depth(const RunConfig& config, const fs::path& manifest_path,
              int frame, const fs::path& out_dir) {
  const LoadedSequence loaded = load_sequence(manifest_path);
  const int n = static_cast<int>(loaded.frames.size());
  if (frame < 1 || frame + 1 >= n)
    throw UsageError("depth: frame " + std::to_string(frame) +
                     " lacks a 3-frame window (valid: 1.." +
                     std::to_string(n - 2) + ")");
  const Sequence seq = loaded.to_sequence();
  const PriorProvider prior = make_prior_provider(loaded, seq, config);

  std::vector<Image> srcs = {seq.frames[frame - 1].image,
                             seq.frames[frame + 1].image};
  std::vector<Pose> rels = {
      relative_pose(seq.frames[frame].cam_to_world,
                    seq.frames[frame - 1].cam_to_world),
      relative_pose(seq.frames[frame].cam_to_world,
                    seq.frames[frame + 1].cam_to_world)};
  const WindowResult w =
      estimate_window(seq.frames[frame].image, srcs, rels, seq.intrinsics,
                      prior(frame), config.pipeline);

  fs::create_directories(out_dir);
  write_pfm(w.d_s, out_dir / "d_s.pfm");
  write_pfm(w.d_m, out_dir / "d_m.pfm");
  write_pfm(w.d_fuse, out_dir / "d_fuse.pfm");
  write_pfm(w.m_m, out_dir / "m_m.pfm");
  write_pfm(w.m_w, out_dir / "m_w.pfm");
  write_pfm(w.weight, out_dir / "weight.pfm");
  write_resolved_config(config, out_dir);
  std::cout << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_bench(const RunConfig& config, const fs::path& manifest_path,
              const fs::path& out_dir) {
  const LoadedSequence loaded = load_sequence(manifest_path);
  const Sequence seq = loaded.to_sequence();
  const PriorProvider prior = make_prior_provider(loaded, seq, config);
  NoiseSpec noise = config.noise;
  noise.seed = config.noise_seed();
  BenchmarkReport report =
      run_benchmark(seq, prior, config.pipeline, noise);
  report.config_json = config.to_json().dump(2);
  const ReportPaths paths = write_report(report, out_dir);
  write_resolved_config(config, out_dir);
  std::cout << paths.report_csv.string() << "\n"
            << paths.summary_csv.string() << "\n"
            << paths.plot_svg.string() << "\n";
  return kExitOk;
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path,
             double min_depth, double max_depth) {
  const DepthMap pred = read_pfm(pred_path);
  const DepthMap gt = read_pfm(gt_path);
  const MetricSet m = depth_metrics(pred, gt, min_depth, max_depth);
  std::printf("abs_rel,sq_rel,rmse,n_pixels\n");
  std::printf("%.9g,%.9g,%.9g,%zu\n", m.abs_rel, m.sq_rel, m.rmse, m.n_pixels);
  return kExitOk;
}

int cmd_report(const fs::path& input_csv, const fs::path& out_dir) {
  const fs::path svg = regenerate_plot(input_csv, out_dir);
  std::cout << svg.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<ConfigOverride> overrides;
  std::vector<std::string> args;
  try {
    args = extract_overrides(argc, argv, overrides);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Adaptive single/multi-view depth fusion toolkit"};
  app.fallthrough();
  std::optional<std::uint64_t> seed_flag;
  int jobs = 0;
  std::string config_path;
  app.add_option("--seed", seed_flag, "Seed override (highest priority)");
  app.add_option("--jobs", jobs, "Worker threads (default: hardware)");
  app.add_option("--config", config_path, "JSON config file");

  auto* gen = app.add_subcommand("gen", "Render a synthetic sequence");
  std::string suite, spec_path, gen_out;
  gen->add_option("--suite", suite, "Standard scene name");
  gen->add_option("--spec", spec_path, "Scene spec JSON file");
  gen->add_option("out_dir", gen_out, "Output directory");

  auto* depth = app.add_subcommand("depth", "Depth for one 3-frame window");
  std::string depth_manifest, depth_out;
  int frame_index = -1;
  depth->add_option("--manifest", depth_manifest, "Sequence manifest")
      ->required();
  depth->add_option("--frame", frame_index, "Center frame index")->required();
  depth->add_option("out_dir", depth_out, "Output directory");

  auto* bench = app.add_subcommand("bench", "Pose-noise robustness benchmark");
  std::string bench_manifest, bench_out, levels_csv;
  bench->add_option("--manifest", bench_manifest, "Sequence manifest")
      ->required();
  bench->add_option("--levels", levels_csv,
                    "Comma-separated noise levels (numbers or 'identity')");
  bench->add_option("out_dir", bench_out, "Output directory");

  auto* eval = app.add_subcommand("eval", "Metrics between two depth PFMs");
  std::string eval_pred, eval_gt;
  double eval_min = 0.5, eval_max = 100.0;
  eval->add_option("pred", eval_pred, "Predicted depth PFM")->required();
  eval->add_option("gt", eval_gt, "Ground-truth depth PFM")->required();
  eval->add_option("--min-depth", eval_min, "Evaluation cap (default 0.5)");
  eval->add_option("--max-depth", eval_max, "Evaluation cap (default 100)");

  auto* report = app.add_subcommand("report", "Regenerate plot.svg from CSV");
  std::string report_input, report_out;
  report->add_option("--input", report_input, "Existing report.csv")
      ->required();
  report->add_option("out_dir", report_out, "Output directory");

  app.require_subcommand(1);

  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const std::string& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()),
              const_cast<char**>(cargs.data()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  set_default_jobs(jobs);
  try {
    if (!levels_csv.empty()) overrides.push_back({"noise.levels", levels_csv});
    const RunConfig config =
        load_run_config(config_path, overrides, seed_flag);
    auto out_or = [&](const std::string& cli_dir) -> fs::path {
      if (!cli_dir.empty()) return cli_dir;
      if (config.output_dir) return *config.output_dir;
      throw UsageError("missing output directory");
    };
    if (gen->parsed()) return cmd_gen(config, suite, spec_path, out_or(gen_out));
    if (depth->parsed())
      return cmd_depth(config, depth_manifest, frame_index, out_or(depth_out));
    if (bench->parsed())
      return cmd_bench(config, bench_manifest, out_or(bench_out));
    if (eval->parsed()) return cmd_eval(eval_pred, eval_gt, eval_min, eval_max);
    if (report->parsed()) return cmd_report(report_input, out_or(report_out));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
