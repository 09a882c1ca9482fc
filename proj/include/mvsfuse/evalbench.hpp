#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mvsfuse/fusion.hpp"
#include "mvsfuse/image.hpp"
#include "mvsfuse/mono_prior.hpp"
#include "mvsfuse/plane_sweep.hpp"
#include "mvsfuse/pose_bench.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace mvsfuse {

struct MetricSet {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  std::size_t n_pixels = 0;
};

// AbsRel = mean |d - d*| / d*, SqRel = mean (d - d*)^2 / d*,
// RMSE = sqrt(mean (d - d*)^2), over pixels where both maps are valid and
// gt lies in [min_depth, max_depth]. Throws NoValidPixels when empty.
MetricSet depth_metrics(const DepthMap& pred, const DepthMap& gt,
                        double min_depth, double max_depth);

// True where |pred - gt| < gt (relative error below 1) and both are valid.
std::vector<std::uint8_t> valid_mask(const DepthMap& pred, const DepthMap& gt);

// Mean |conf - (1 - |pred - gt| / gt)| over the valid mask; the calibration
// gap of a confidence map against its ideal target.
double confidence_calibration(const ConfidenceMap& conf, const DepthMap& pred,
                              const DepthMap& gt);

// Robustness-aware relative error: mean + population standard deviation of
// the AbsRel values across all noise levels.
double r_rel(const std::vector<double>& abs_rels);

struct PipelineConfig {
  SweepConfig sweep;
  FusionParams fusion;
  double prior_conf_threshold = 0.5;
  double eval_min_depth = 0.5;
  double eval_max_depth = 100.0;
};

struct WindowResult {
  DepthMap d_s, d_m, d_fuse;
  ConfidenceMap m_s, m_m, m_w, weight;
};

// One 3-frame sample end to end: multi-view sweep, prior scale alignment
// against the confident multi-view pixels (kept unaligned when anchors are
// insufficient, e.g. the identity-pose setting), warping confidence, fusion.
WindowResult estimate_window(const Image& ref, const std::vector<Image>& srcs,
                             const std::vector<Pose>& rel_poses,
                             const CameraIntrinsics& k,
                             const PriorDepth& raw_prior,
                             const PipelineConfig& config);

struct NoiseSpec {
  std::vector<NoiseLevel> levels;
  std::uint64_t seed = 0;
};

NoiseSpec default_noise_spec();  // {0, 0.01, 0.025, 0.05, identity}

struct LevelRow {
  NoiseLevel level;
  MetricSet d_s, d_m, d_fuse;
  double mean_weight = 0.0;
  double mean_mw = 0.0;
};

struct BenchmarkReport {
  std::vector<LevelRow> rows;
  double r_rel_dm = 0.0;
  double r_rel_dfuse = 0.0;
  std::string config_json;  // resolved config snapshot, may be empty
  std::uint64_t seed = 0;
};

// Supplies the raw (unaligned) prior for a frame.
using PriorProvider = std::function<PriorDepth(int frame_index)>;

// Synth-prior provider: per-frame seed derived from (seed, frame index).
PriorProvider synth_prior_provider(const Sequence& seq, double scale,
                                   double smooth_err_amp,
                                   double smooth_err_scale,
                                   std::uint64_t seed);

// The full robustness protocol: for every level, perturb the poses, run the
// pipeline on every 3-frame sample, pool per-level metrics over pixels, and
// reduce the AbsRel columns to R-Rel for d_m and d_fuse. Samples are
// processed concurrently and reduced in sample order, so reports are
// bit-identical for any worker count.
BenchmarkReport run_benchmark(const Sequence& seq, const PriorProvider& prior,
                              const PipelineConfig& config,
                              const NoiseSpec& noise);

struct ReportPaths {
  std::filesystem::path report_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path plot_svg;
};

// report.csv: level,branch,abs_rel,sq_rel,rmse,n_pixels,mean_weight,mean_mw
// summary.csv: branch,r_rel. plot.svg: AbsRel vs level, one polyline per
// branch. Numbers are printed with 9 significant digits.
ReportPaths write_report(const BenchmarkReport& report,
                         const std::filesystem::path& dir);

// Regenerates plot.svg from an existing report.csv.
std::filesystem::path regenerate_plot(const std::filesystem::path& report_csv,
                                      const std::filesystem::path& dir);

}  // namespace mvsfuse
