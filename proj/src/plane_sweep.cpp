#include "mvsfuse/plane_sweep.hpp"

#include <algorithm>
#include <cmath>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/parallel.hpp"

namespace mvsfuse {

double HypothesisSet::local_spacing(double d) const {
  if (bins.size() < 2) return 0.0;
  const auto it = std::lower_bound(bins.begin(), bins.end(), d);
  std::size_t k = static_cast<std::size_t>(it - bins.begin());
  if (k >= bins.size() - 1) k = bins.size() - 2;
  return bins[k + 1] - bins[k];
}

HypothesisSet sample_hypotheses(double d_min, double d_max, int n) {
  if (!(d_min > 0.0) || d_max < d_min)
    throw InvalidRange("sample_hypotheses: need 0 < d_min <= d_max");
  if (n < 2 && !(n == 1 && d_min == d_max))
    throw InvalidRange("sample_hypotheses: n must be >= 2 (1 only when d_min == d_max)");
  if (d_min == d_max && n != 1)
    throw InvalidRange("sample_hypotheses: degenerate range requires n == 1");
  HypothesisSet hyp;
  hyp.d_min = d_min;
  hyp.d_max = d_max;
  hyp.bins.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    hyp.bins[0] = d_min;
    return hyp;
  }
  const double log_min = std::log(d_min);
  const double log_max = std::log(d_max);
  for (int k = 0; k < n; ++k)
    hyp.bins[static_cast<std::size_t>(k)] =
        std::exp(log_min + k * (log_max - log_min) / (n - 1));
  hyp.bins.front() = d_min;
  hyp.bins.back() = d_max;
  return hyp;
}

namespace {

// Mean squared difference over the patch. Caller guarantees validity.
double patch_ssd(const Image& a, const Image& b, int x, int y, int r) {
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double d = static_cast<double>(a.at(x + dx, y + dy)) -
                       static_cast<double>(b.at(x + dx, y + dy));
      sum += d * d;
    }
  const int n = (2 * r + 1) * (2 * r + 1);
  return sum / n;
}

// 1 - normalized cross correlation, in [0, 2]. Zero-variance patches score
// the neutral cost 1.
double patch_ncc(const Image& a, const Image& b, int x, int y, int r) {
  double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double va = a.at(x + dx, y + dy);
      const double vb = b.at(x + dx, y + dy);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
    }
  const int n = (2 * r + 1) * (2 * r + 1);
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  constexpr double kEps = 1e-12;
  if (va < kEps || vb < kEps) return 1.0;
  const double ncc = (sab - sa * sb / n) / std::sqrt(va * vb);
  return 1.0 - std::clamp(ncc, -1.0, 1.0);
}

bool patch_valid(const Image& img, int x, int y, int r) {
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (!img.is_valid(x + dx, y + dy)) return false;
  return true;
}

}  // namespace

CostVolume build_cost_volume(const Image& ref, const std::vector<Image>& srcs,
                             const std::vector<Pose>& rel_poses,
                             const CameraIntrinsics& k,
                             const HypothesisSet& hyp, CostKind cost,
                             int patch_radius) {
  if (srcs.empty()) throw NoSources("build_cost_volume: no source views");
  if (rel_poses.size() != srcs.size())
    throw DimensionMismatch("build_cost_volume: poses/sources count mismatch");
  if (ref.width != k.width || ref.height != k.height)
    throw DimensionMismatch("build_cost_volume: ref size mismatch");
  for (const Image& s : srcs)
    if (s.width != ref.width || s.height != ref.height)
      throw DimensionMismatch("build_cost_volume: source size mismatch");

  CostVolume vol;
  vol.width = ref.width;
  vol.height = ref.height;
  vol.n_bins = hyp.count();
  vol.cost.assign(static_cast<std::size_t>(vol.width) * vol.height *
                      vol.n_bins,
                  0.0f);
  vol.valid_count.assign(vol.cost.size(), 0);

  const int r = patch_radius;
  parallel_for(static_cast<std::size_t>(vol.n_bins), [&](std::size_t bin) {
    DepthMap plane(vol.width, vol.height,
                   static_cast<float>(hyp.bins[bin]));
    std::vector<Image> warped;
    warped.reserve(srcs.size());
    for (std::size_t s = 0; s < srcs.size(); ++s)
      warped.push_back(warp_source_to_ref(srcs[s], plane, rel_poses[s], k, k));
    for (int y = r; y < vol.height - r; ++y) {
      for (int x = r; x < vol.width - r; ++x) {
        if (!patch_valid(ref, x, y, r)) continue;
        double sum = 0.0;
        int n = 0;
        for (const Image& w : warped) {
          if (!patch_valid(w, x, y, r)) continue;
          sum += (cost == CostKind::SsdPatch) ? patch_ssd(ref, w, x, y, r)
                                              : patch_ncc(ref, w, x, y, r);
          ++n;
        }
        if (n == 0) continue;
        const std::size_t idx = vol.index(x, y, static_cast<int>(bin));
        vol.cost[idx] = static_cast<float>(sum / n);
        vol.valid_count[idx] = static_cast<std::uint16_t>(n);
      }
    }
  });
  return vol;
}

CostVolume aggregate(const CostVolume& volume, int radius) {
  if (radius < 0) throw InvalidRange("aggregate: negative radius");
  if (radius == 0) return volume;
  CostVolume out = volume;
  const int w = volume.width;
  const int h = volume.height;
  parallel_for(static_cast<std::size_t>(volume.n_bins), [&](std::size_t bin) {
    // Summed-area tables over valid cells, one per bin slice.
    const std::size_t base = static_cast<std::size_t>(bin) * h * w;
    std::vector<double> sum((w + 1) * (h + 1), 0.0);
    std::vector<int> cnt((w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = base + static_cast<std::size_t>(y) * w + x;
        const bool ok = volume.valid_count[i] > 0;
        const std::size_t a = static_cast<std::size_t>(y + 1) * (w + 1) + x + 1;
        const std::size_t b = static_cast<std::size_t>(y) * (w + 1) + x + 1;
        const std::size_t c = static_cast<std::size_t>(y + 1) * (w + 1) + x;
        const std::size_t d = static_cast<std::size_t>(y) * (w + 1) + x;
        sum[a] = (ok ? volume.cost[i] : 0.0) + sum[b] + sum[c] - sum[d];
        cnt[a] = (ok ? 1 : 0) + cnt[b] + cnt[c] - cnt[d];
      }
    }
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - radius);
      const int y1 = std::min(h - 1, y + radius);
      for (int x = 0; x < w; ++x) {
        const std::size_t i = base + static_cast<std::size_t>(y) * w + x;
        if (volume.valid_count[i] == 0) continue;
        const int x0 = std::max(0, x - radius);
        const int x1 = std::min(w - 1, x + radius);
        auto rect = [&](const auto& t) {
          return t[static_cast<std::size_t>(y1 + 1) * (w + 1) + x1 + 1] -
                 t[static_cast<std::size_t>(y0) * (w + 1) + x1 + 1] -
                 t[static_cast<std::size_t>(y1 + 1) * (w + 1) + x0] +
                 t[static_cast<std::size_t>(y0) * (w + 1) + x0];
        };
        const double s = rect(sum);
        const int n = rect(cnt);
        out.cost[i] = static_cast<float>(s / n);
      }
    }
  });
  return out;
}

double auto_temperature(const CostVolume& volume) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < volume.cost.size(); ++i) {
    if (volume.valid_count[i] == 0) continue;
    sum += volume.cost[i];
    ++n;
  }
  const double mean = n ? sum / static_cast<double>(n) : 0.0;
  return std::max(1e-12, 0.05 * mean);
}

ProbabilityVolume cost_to_probability(const CostVolume& volume,
                                      double temperature) {
  if (!(temperature > 0.0))
    throw NonPositiveTemperature("cost_to_probability: temperature <= 0");
  ProbabilityVolume out;
  out.width = volume.width;
  out.height = volume.height;
  out.n_bins = volume.n_bins;
  out.p.assign(volume.cost.size(), 0.0f);
  out.valid_count = volume.valid_count;
  out.pixel_valid.assign(static_cast<std::size_t>(out.width) * out.height, 0);

  const std::size_t plane = static_cast<std::size_t>(out.width) * out.height;
  parallel_for(static_cast<std::size_t>(out.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < out.width; ++x) {
      const std::size_t px = static_cast<std::size_t>(y) * out.width + x;
      double min_cost = 0.0;
      bool any = false;
      for (int b = 0; b < out.n_bins; ++b) {
        const std::size_t i = px + plane * static_cast<std::size_t>(b);
        if (volume.valid_count[i] == 0) continue;
        if (!any || volume.cost[i] < min_cost) min_cost = volume.cost[i];
        any = true;
      }
      if (!any) continue;
      double norm = 0.0;
      for (int b = 0; b < out.n_bins; ++b) {
        const std::size_t i = px + plane * static_cast<std::size_t>(b);
        if (volume.valid_count[i] == 0) continue;
        const double e = std::exp(-(volume.cost[i] - min_cost) / temperature);
        out.p[i] = static_cast<float>(e);
        norm += e;
      }
      for (int b = 0; b < out.n_bins; ++b) {
        const std::size_t i = px + plane * static_cast<std::size_t>(b);
        if (volume.valid_count[i] == 0) continue;
        out.p[i] = static_cast<float>(out.p[i] / norm);
      }
      out.pixel_valid[px] = 1;
    }
  });
  return out;
}

DepthMap regress_depth(const ProbabilityVolume& p, const HypothesisSet& hyp) {
  if (p.n_bins != hyp.count())
    throw DimensionMismatch("regress_depth: bin count mismatch");
  DepthMap out(p.width, p.height);
  const std::size_t plane = static_cast<std::size_t>(p.width) * p.height;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t px = static_cast<std::size_t>(y) * p.width + x;
      if (!p.pixel_valid[px]) continue;
      double d = 0.0;
      for (int b = 0; b < p.n_bins; ++b)
        d += hyp.bins[static_cast<std::size_t>(b)] *
             static_cast<double>(p.p[px + plane * static_cast<std::size_t>(b)]);
      out.data[px] = static_cast<float>(d);
    }
  }
  return out;
}

ConfidenceMap matching_confidence(const ProbabilityVolume& p, int window) {
  if (window < 0) throw InvalidRange("matching_confidence: negative window");
  ConfidenceMap out(p.width, p.height, 0.0f, false);
  const std::size_t plane = static_cast<std::size_t>(p.width) * p.height;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t px = static_cast<std::size_t>(y) * p.width + x;
      if (!p.pixel_valid[px]) continue;
      int best = -1;
      float best_p = -1.0f;
      for (int b = 0; b < p.n_bins; ++b) {
        const std::size_t i = px + plane * static_cast<std::size_t>(b);
        if (p.valid_count[i] == 0) continue;
        if (p.p[i] > best_p) {  // ties keep the lowest bin index
          best_p = p.p[i];
          best = b;
        }
      }
      double mass = 0.0;
      const int b0 = std::max(0, best - window);
      const int b1 = std::min(p.n_bins - 1, best + window);
      for (int b = b0; b <= b1; ++b)
        mass += p.p[px + plane * static_cast<std::size_t>(b)];
      out.set(x, y, static_cast<float>(std::clamp(mass, 0.0, 1.0)), true);
    }
  }
  return out;
}

MultiViewResult multi_view_depth(const Image& ref,
                                 const std::vector<Image>& srcs,
                                 const std::vector<Pose>& rel_poses,
                                 const CameraIntrinsics& k,
                                 const SweepConfig& config) {
  if (srcs.empty()) throw NoSources("multi_view_depth: no source views");
  if (ref.width % 4 != 0 || ref.height % 4 != 0)
    throw DimensionMismatch("multi_view_depth: input not divisible by 4");

  const Image ref_q = downsample_box(to_gray(ref), 4);
  std::vector<Image> srcs_q;
  srcs_q.reserve(srcs.size());
  for (const Image& s : srcs) srcs_q.push_back(downsample_box(to_gray(s), 4));
  const CameraIntrinsics k_q = k.scaled(0.25);

  MultiViewResult out;
  out.hypotheses = sample_hypotheses(config.d_min, config.d_max, config.n_bins);
  CostVolume vol = build_cost_volume(ref_q, srcs_q, rel_poses, k_q,
                                     out.hypotheses, config.cost,
                                     config.patch_radius);
  vol = aggregate(vol, config.aggregate_radius);
  const double temp =
      config.temperature ? *config.temperature : auto_temperature(vol);
  out.prob = cost_to_probability(vol, temp);
  const DepthMap d_q = regress_depth(out.prob, out.hypotheses);
  const ConfidenceMap m_q = matching_confidence(out.prob, config.window);
  out.d_m = upsample_bilinear(d_q, ref.width, ref.height);
  out.m_m = upsample_bilinear(m_q, ref.width, ref.height);
  return out;
}

}  // namespace mvsfuse
