#include "mvsfuse/mono_prior.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvsfuse/dataset_io.hpp"
#include "mvsfuse/errors.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace mvsfuse {

PriorDepth synth_prior(const DepthMap& gt, const SynthPriorSpec& spec) {
  if (!(spec.scale > 0.0))
    throw InvalidSpec("synth_prior: scale must be positive");
  if (spec.smooth_err_amp < 0.0 || !(spec.smooth_err_scale > 0.0))
    throw InvalidSpec("synth_prior: malformed error field spec");

  PriorDepth out;
  out.depth = DepthMap(gt.width, gt.height);
  out.confidence = ConfidenceMap(gt.width, gt.height, 0.0f, false);
  out.scale_resolved = false;
  const double amp = spec.smooth_err_amp;
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      if (!gt.is_valid(x, y)) continue;
      double f = 0.0;
      if (amp > 0.0) {
        const double n = value_noise2(spec.seed, x / spec.smooth_err_scale,
                                      y / spec.smooth_err_scale, 2);
        f = amp * (2.0 * n - 1.0);
      }
      out.depth.at(x, y) =
          static_cast<float>(gt.at(x, y) * spec.scale * (1.0 + f));
      const double conf = amp > 0.0 ? 1.0 - std::abs(f) / amp : 1.0;
      out.confidence.set(x, y, static_cast<float>(std::clamp(conf, 0.0, 1.0)),
                         true);
    }
  }
  return out;
}

PriorDepth align_scale(const PriorDepth& prior, const DepthMap& anchor,
                       const ConfidenceMap& anchor_conf,
                       double conf_threshold) {
  if (prior.depth.width != anchor.width ||
      prior.depth.height != anchor.height ||
      anchor_conf.width != anchor.width || anchor_conf.height != anchor.height)
    throw DimensionMismatch("align_scale: map sizes differ");

  std::vector<double> ratios;
  ratios.reserve(anchor.pixel_count());
  for (int y = 0; y < anchor.height; ++y)
    for (int x = 0; x < anchor.width; ++x) {
      if (!prior.depth.is_valid(x, y) || !anchor.is_valid(x, y)) continue;
      if (!anchor_conf.is_valid(x, y) || anchor_conf.at(x, y) < conf_threshold)
        continue;
      ratios.push_back(static_cast<double>(anchor.at(x, y)) /
                       prior.depth.at(x, y));
    }
  if (ratios.size() < 100)
    throw InsufficientAnchors("align_scale: only " +
                              std::to_string(ratios.size()) +
                              " qualifying pixels");
  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
  double scale = ratios[mid];
  if (ratios.size() % 2 == 0) {
    const double hi = ratios[mid];
    std::nth_element(ratios.begin(), ratios.begin() + (mid - 1),
                     ratios.begin() + mid);
    scale = 0.5 * (ratios[mid - 1] + hi);
  }

  PriorDepth out = prior;
  for (std::size_t i = 0; i < out.depth.data.size(); ++i)
    if (std::isfinite(out.depth.data[i]) && out.depth.data[i] > 0.0f)
      out.depth.data[i] = static_cast<float>(out.depth.data[i] * scale);
  out.scale_resolved = true;
  return out;
}

PriorDepth load_prior(
    const std::filesystem::path& depth_pfm,
    const std::optional<std::filesystem::path>& confidence_pfm) {
  PriorDepth out;
  out.depth = read_pfm(depth_pfm);
  if (confidence_pfm) {
    out.confidence = read_pfm_confidence(*confidence_pfm);
    if (out.confidence.width != out.depth.width ||
        out.confidence.height != out.depth.height)
      throw DimensionMismatch("load_prior: confidence size differs from depth");
  } else {
    out.confidence =
        ConfidenceMap(out.depth.width, out.depth.height, 0.5f, true);
  }
  out.scale_resolved = false;
  return out;
}

}  // namespace mvsfuse
