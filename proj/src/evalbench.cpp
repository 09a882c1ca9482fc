#include "mvsfuse/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/parallel.hpp"
#include "mvsfuse/rng.hpp"

namespace mvsfuse {

namespace {

struct MetricAccum {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  std::size_t n = 0;

  void add(const DepthMap& pred, const DepthMap& gt, double min_depth,
           double max_depth) {
    for (int y = 0; y < gt.height; ++y) {
      for (int x = 0; x < gt.width; ++x) {
        if (!gt.is_valid(x, y) || !pred.is_valid(x, y)) continue;
        const double g = gt.at(x, y);
        if (g < min_depth || g > max_depth) continue;
        const double d = static_cast<double>(pred.at(x, y)) - g;
        abs_rel += std::abs(d) / g;
        sq_rel += d * d / g;
        sq += d * d;
        ++n;
      }
    }
  }

  MetricSet finalize() const {
    if (n == 0) throw NoValidPixels("depth_metrics: no evaluated pixels");
    MetricSet m;
    m.abs_rel = abs_rel / static_cast<double>(n);
    m.sq_rel = sq_rel / static_cast<double>(n);
    m.rmse = std::sqrt(sq / static_cast<double>(n));
    m.n_pixels = n;
    return m;
  }
};

}  // namespace

MetricSet depth_metrics(const DepthMap& pred, const DepthMap& gt,
                        double min_depth, double max_depth) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DimensionMismatch("depth_metrics: map sizes differ");
  MetricAccum acc;
  acc.add(pred, gt, min_depth, max_depth);
  return acc.finalize();
}

std::vector<std::uint8_t> valid_mask(const DepthMap& pred,
                                     const DepthMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DimensionMismatch("valid_mask: map sizes differ");
  std::vector<std::uint8_t> mask(gt.pixel_count(), 0);
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      if (!gt.is_valid(x, y) || !pred.is_valid(x, y)) continue;
      if (std::abs(static_cast<double>(pred.at(x, y)) - gt.at(x, y)) <
          gt.at(x, y))
        mask[gt.index(x, y)] = 1;
    }
  return mask;
}

double confidence_calibration(const ConfidenceMap& conf, const DepthMap& pred,
                              const DepthMap& gt) {
  if (conf.width != gt.width || conf.height != gt.height)
    throw DimensionMismatch("confidence_calibration: map sizes differ");
  const std::vector<std::uint8_t> mask = valid_mask(pred, gt);
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      if (!mask[gt.index(x, y)] || !conf.is_valid(x, y)) continue;
      const double target =
          1.0 - std::abs(static_cast<double>(pred.at(x, y)) - gt.at(x, y)) /
                    gt.at(x, y);
      sum += std::abs(static_cast<double>(conf.at(x, y)) - target);
      ++n;
    }
  if (n == 0) throw EmptyMask("confidence_calibration: empty valid mask");
  return sum / static_cast<double>(n);
}

double r_rel(const std::vector<double>& abs_rels) {
  if (abs_rels.empty()) throw EmptyList("r_rel: empty list");
  double mu = 0.0;
  for (double v : abs_rels) mu += v;
  mu /= static_cast<double>(abs_rels.size());
  double var = 0.0;
  for (double v : abs_rels) var += (v - mu) * (v - mu);
  var /= static_cast<double>(abs_rels.size());
  return mu + std::sqrt(var);
}

WindowResult estimate_window(const Image& ref, const std::vector<Image>& srcs,
                             const std::vector<Pose>& rel_poses,
                             const CameraIntrinsics& k,
                             const PriorDepth& raw_prior,
                             const PipelineConfig& config) {
  MultiViewResult mv = multi_view_depth(ref, srcs, rel_poses, k, config.sweep);

  PriorDepth prior = raw_prior;
  try {
    prior = align_scale(raw_prior, mv.d_m, mv.m_m, config.prior_conf_threshold);
  } catch (const InsufficientAnchors&) {
    // Degenerate matching (identity poses, textureless scenes) offers no
    // scale anchor; the prior is used as delivered.
  }

  WindowResult out;
  out.m_w = warping_confidence(ref, srcs, mv.d_m, rel_poses, k,
                               config.fusion.ssim_radius,
                               config.fusion.reduce);
  FusionResult fr = fuse(prior.depth, mv.d_m, prior.confidence, mv.m_m,
                         out.m_w, config.fusion);
  out.d_s = std::move(prior.depth);
  out.m_s = std::move(prior.confidence);
  out.d_m = std::move(mv.d_m);
  out.m_m = std::move(mv.m_m);
  out.d_fuse = std::move(fr.d_fuse);
  out.weight = std::move(fr.weight);
  return out;
}

NoiseSpec default_noise_spec() {
  NoiseSpec spec;
  spec.levels = {NoiseLevel::none(), NoiseLevel::coefficient(0.01),
                 NoiseLevel::coefficient(0.025), NoiseLevel::coefficient(0.05),
                 NoiseLevel::identity()};
  spec.seed = 1;
  return spec;
}

PriorProvider synth_prior_provider(const Sequence& seq, double scale,
                                   double smooth_err_amp,
                                   double smooth_err_scale,
                                   std::uint64_t seed) {
  std::vector<DepthMap> gts;
  gts.reserve(seq.frames.size());
  for (const Frame& f : seq.frames) gts.push_back(f.gt_depth);
  return [gts = std::move(gts), scale, smooth_err_amp, smooth_err_scale,
          seed](int frame_index) {
    SynthPriorSpec spec;
    spec.scale = scale;
    spec.smooth_err_amp = smooth_err_amp;
    spec.smooth_err_scale = smooth_err_scale;
    spec.seed = hash_mix(seed, static_cast<std::uint64_t>(frame_index));
    return synth_prior(gts[static_cast<std::size_t>(frame_index)], spec);
  };
}

namespace {

struct SampleStats {
  MetricAccum d_s, d_m, d_fuse;
  double weight_sum = 0.0;
  std::size_t weight_n = 0;
  double mw_sum = 0.0;
  std::size_t mw_n = 0;
};

}  // namespace

BenchmarkReport run_benchmark(const Sequence& seq, const PriorProvider& prior,
                              const PipelineConfig& config,
                              const NoiseSpec& noise) {
  if (seq.frames.size() < 3)
    throw InvalidRange("run_benchmark: need at least 3 frames");
  for (const Frame& f : seq.frames)
    if (f.gt_depth.width == 0)
      throw InvalidSpec("run_benchmark: sequence lacks ground-truth depth");

  BenchmarkReport report;
  report.seed = noise.seed;
  for (std::size_t li = 0; li < noise.levels.size(); ++li) {
    const NoiseLevel& level = noise.levels[li];
    NoiseAssignment assignment{hash_mix(noise.seed, li)};
    const std::vector<BenchSample> samples =
        apply_noise_level(seq, level, assignment);

    std::vector<SampleStats> stats(samples.size());
    parallel_for(samples.size(), [&](std::size_t si) {
      const BenchSample& s = samples[si];
      const Frame& ref = seq.frames[static_cast<std::size_t>(s.ref_index)];
      std::vector<Image> srcs;
      srcs.reserve(s.src_indices.size());
      for (int idx : s.src_indices)
        srcs.push_back(seq.frames[static_cast<std::size_t>(idx)].image);
      const PriorDepth raw = prior(s.ref_index);
      const WindowResult w = estimate_window(ref.image, srcs, s.rel_poses,
                                             seq.intrinsics, raw, config);
      SampleStats& st = stats[si];
      st.d_s.add(w.d_s, ref.gt_depth, config.eval_min_depth,
                 config.eval_max_depth);
      st.d_m.add(w.d_m, ref.gt_depth, config.eval_min_depth,
                 config.eval_max_depth);
      st.d_fuse.add(w.d_fuse, ref.gt_depth, config.eval_min_depth,
                    config.eval_max_depth);
      for (std::size_t i = 0; i < w.weight.data.size(); ++i)
        if (w.weight.valid[i]) {
          st.weight_sum += w.weight.data[i];
          ++st.weight_n;
        }
      for (std::size_t i = 0; i < w.m_w.data.size(); ++i)
        if (w.m_w.valid[i]) {
          st.mw_sum += w.m_w.data[i];
          ++st.mw_n;
        }
    });

    // Reduce in sample-index order.
    SampleStats total;
    for (const SampleStats& st : stats) {
      auto merge = [](MetricAccum& a, const MetricAccum& b) {
        a.abs_rel += b.abs_rel;
        a.sq_rel += b.sq_rel;
        a.sq += b.sq;
        a.n += b.n;
      };
      merge(total.d_s, st.d_s);
      merge(total.d_m, st.d_m);
      merge(total.d_fuse, st.d_fuse);
      total.weight_sum += st.weight_sum;
      total.weight_n += st.weight_n;
      total.mw_sum += st.mw_sum;
      total.mw_n += st.mw_n;
    }
    LevelRow row;
    row.level = level;
    row.d_s = total.d_s.finalize();
    row.d_m = total.d_m.finalize();
    row.d_fuse = total.d_fuse.finalize();
    row.mean_weight =
        total.weight_n ? total.weight_sum / static_cast<double>(total.weight_n)
                       : 0.0;
    row.mean_mw =
        total.mw_n ? total.mw_sum / static_cast<double>(total.mw_n) : 0.0;
    report.rows.push_back(row);
  }

  std::vector<double> dm_abs, dfuse_abs;
  for (const LevelRow& row : report.rows) {
    dm_abs.push_back(row.d_m.abs_rel);
    dfuse_abs.push_back(row.d_fuse.abs_rel);
  }
  report.r_rel_dm = r_rel(dm_abs);
  report.r_rel_dfuse = r_rel(dfuse_abs);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct PlotSeries {
  std::string name;
  std::vector<double> abs_rel;
};

void write_svg(const std::vector<std::string>& level_labels,
               const std::vector<PlotSeries>& series,
               const std::filesystem::path& path) {
  const int w = 640, h = 400;
  const double ml = 70, mr = 130, mt = 30, mb = 50;
  double y_max = 0.0;
  for (const auto& s : series)
    for (double v : s.abs_rel) y_max = std::max(y_max, v);
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.1;
  const std::size_t nx = level_labels.size();
  auto px = [&](std::size_t i) {
    return ml + (nx > 1 ? (w - ml - mr) * static_cast<double>(i) /
                              static_cast<double>(nx - 1)
                        : 0.0);
  };
  auto py = [&](double v) { return h - mb - (h - mt - mb) * v / y_max; };

  static const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + (w - ml - mr) / 2) << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">noise level</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + (h - mt - mb) / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + (h - mt - mb) / 2) << ")\">AbsRel</text>\n";
  for (std::size_t i = 0; i < nx; ++i) {
    svg << "<text x=\"" << px(i) << "\" y=\"" << h - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"12\">" << level_labels[i]
        << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = y_max * t / 4.0;
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(v) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << kColors[s % 4]
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].abs_rel.size(); ++i)
      svg << px(i) << "," << py(series[s].abs_rel[i]) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << w - mr + 10 << "\" y=\"" << mt + 18 * (s + 1)
        << "\" font-size=\"12\" fill=\"" << kColors[s % 4] << "\">"
        << series[s].name << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << svg.str();
}

}  // namespace

ReportPaths write_report(const BenchmarkReport& report,
                         const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  ReportPaths paths;
  paths.report_csv = dir / "report.csv";
  paths.summary_csv = dir / "summary.csv";
  paths.plot_svg = dir / "plot.svg";

  {
    std::ofstream out(paths.report_csv);
    if (!out) throw IoError("cannot write " + paths.report_csv.string());
    out << "level,branch,abs_rel,sq_rel,rmse,n_pixels,mean_weight,mean_mw\n";
    for (const LevelRow& row : report.rows) {
      auto line = [&](const char* branch, const MetricSet& m) {
        out << row.level.label() << "," << branch << "," << fmt(m.abs_rel)
            << "," << fmt(m.sq_rel) << "," << fmt(m.rmse) << "," << m.n_pixels
            << "," << fmt(row.mean_weight) << "," << fmt(row.mean_mw) << "\n";
      };
      line("d_s", row.d_s);
      line("d_m", row.d_m);
      line("d_fuse", row.d_fuse);
    }
  }
  {
    std::ofstream out(paths.summary_csv);
    if (!out) throw IoError("cannot write " + paths.summary_csv.string());
    out << "branch,r_rel\n";
    out << "d_m," << fmt(report.r_rel_dm) << "\n";
    out << "d_fuse," << fmt(report.r_rel_dfuse) << "\n";
  }
  {
    // Plot the same 9-digit values the CSV carries, so a plot regenerated
    // from report.csv is byte-identical.
    std::vector<std::string> labels;
    PlotSeries s_ds{"d_s", {}}, s_dm{"d_m", {}}, s_df{"d_fuse", {}};
    for (const LevelRow& row : report.rows) {
      labels.push_back(row.level.label());
      s_ds.abs_rel.push_back(std::stod(fmt(row.d_s.abs_rel)));
      s_dm.abs_rel.push_back(std::stod(fmt(row.d_m.abs_rel)));
      s_df.abs_rel.push_back(std::stod(fmt(row.d_fuse.abs_rel)));
    }
    write_svg(labels, {s_ds, s_dm, s_df}, paths.plot_svg);
  }
  return paths;
}

std::filesystem::path regenerate_plot(const std::filesystem::path& report_csv,
                                      const std::filesystem::path& dir) {
  std::ifstream in(report_csv);
  if (!in) throw IoError("cannot open " + report_csv.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "level,branch,abs_rel,sq_rel,rmse,n_pixels,mean_weight,mean_mw")
    throw MalformedHeader("unexpected report.csv header");
  std::vector<std::string> labels;
  PlotSeries s_ds{"d_s", {}}, s_dm{"d_m", {}}, s_df{"d_fuse", {}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8)
      throw MalformedHeader("unexpected report.csv row: " + line);
    const double abs_rel = std::stod(cells[2]);
    if (cells[1] == "d_s") {
      labels.push_back(cells[0]);
      s_ds.abs_rel.push_back(abs_rel);
    } else if (cells[1] == "d_m") {
      s_dm.abs_rel.push_back(abs_rel);
    } else if (cells[1] == "d_fuse") {
      s_df.abs_rel.push_back(abs_rel);
    }
  }
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / "plot.svg";
  write_svg(labels, {s_ds, s_dm, s_df}, path);
  return path;
}

}  // namespace mvsfuse
