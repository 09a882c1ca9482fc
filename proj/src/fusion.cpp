#include "mvsfuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/ssim.hpp"

namespace mvsfuse {

ConfidenceMap warping_confidence(const Image& ref,
                                 const std::vector<Image>& srcs,
                                 const DepthMap& d_m,
                                 const std::vector<Pose>& rel_poses,
                                 const CameraIntrinsics& k, int ssim_radius,
                                 FusionParams::Reduce reduce) {
  if (srcs.empty()) throw NoSources("warping_confidence: no source views");
  if (rel_poses.size() != srcs.size())
    throw DimensionMismatch("warping_confidence: poses/sources mismatch");
  const Image ref_gray = to_gray(ref);

  ConfidenceMap out(ref.width, ref.height, 0.0f, false);
  std::vector<double> acc(out.pixel_count(), 0.0);
  std::vector<int> cnt(out.pixel_count(), 0);
  for (std::size_t s = 0; s < srcs.size(); ++s) {
    const Image warped =
        warp_source_to_ref(to_gray(srcs[s]), d_m, rel_poses[s], k, k);
    const SsimMap ssim = ssim_map(ref_gray, warped, ssim_radius);
    for (std::size_t i = 0; i < ssim.score.size(); ++i) {
      if (!ssim.valid[i]) continue;
      if (reduce == FusionParams::Reduce::Mean) {
        acc[i] += ssim.score[i];
      } else {
        acc[i] = cnt[i] ? std::min(acc[i], static_cast<double>(ssim.score[i]))
                        : ssim.score[i];
      }
      ++cnt[i];
    }
  }
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * out.width + x;
      if (cnt[i] == 0) continue;
      const double s = (reduce == FusionParams::Reduce::Mean)
                           ? acc[i] / cnt[i]
                           : acc[i];
      out.set(x, y, static_cast<float>(std::clamp(0.5 * (1.0 + s), 0.0, 1.0)),
              true);
    }
  return out;
}

FusionResult fuse(const DepthMap& d_s, const DepthMap& d_m,
                  const ConfidenceMap& m_s, const ConfidenceMap& m_m,
                  const ConfidenceMap& m_w, const FusionParams& params) {
  const int w = d_m.width, h = d_m.height;
  if (d_s.width != w || d_s.height != h || m_s.width != w || m_s.height != h ||
      m_m.width != w || m_m.height != h || m_w.width != w || m_w.height != h)
    throw DimensionMismatch("fuse: map sizes differ");

  FusionResult out;
  out.d_fuse = DepthMap(w, h);
  out.m_w = m_w;
  out.weight = ConfidenceMap(w, h, 0.0f, false);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool has_m = d_m.is_valid(x, y);
      const bool has_s = d_s.is_valid(x, y);
      const double mw = m_w.is_valid(x, y) ? m_w.at(x, y) : 0.0;
      const double mm = m_m.is_valid(x, y) ? m_m.at(x, y) : 0.0;
      if (!has_m && !has_s) continue;
      if (!has_s) {
        if (mw >= params.floor) {
          out.d_fuse.at(x, y) = d_m.at(x, y);
          out.weight.set(x, y, 1.0f, true);
        }
        continue;
      }
      double weight = 0.0;
      if (has_m) {
        const double trust = mm * mw;
        weight = (mw >= params.floor)
                     ? std::clamp(std::pow(trust, params.gamma), 0.0, 1.0)
                     : 0.0;
        const double ds = d_s.at(x, y);
        const double dm = d_m.at(x, y);
        const double ms = m_s.is_valid(x, y) ? m_s.at(x, y) : 0.0;
        if (std::abs(ds - dm) / ds > 1.0 && ms > trust) weight = 0.0;
      }
      const double fused =
          weight * (has_m ? d_m.at(x, y) : 0.0) + (1.0 - weight) * d_s.at(x, y);
      out.d_fuse.at(x, y) = static_cast<float>(fused);
      out.weight.set(x, y, static_cast<float>(weight), true);
    }
  }
  return out;
}

std::vector<std::uint8_t> dynamic_mask(
    const Image& prev, const Image& cur, const Image& next,
    const std::vector<std::uint8_t>& candidate_mask, const DepthMap& depth,
    const Pose& cur_to_prev, const Pose& cur_to_next,
    const CameraIntrinsics& k, double threshold, int ssim_radius) {
  const std::size_t n = cur.pixel_count();
  if (candidate_mask.size() != n || depth.width != cur.width ||
      depth.height != cur.height)
    throw DimensionMismatch("dynamic_mask: size mismatch");

  const Image cur_gray = to_gray(cur);
  const Image warped_prev =
      warp_source_to_ref(to_gray(prev), depth, cur_to_prev, k, k);
  const Image warped_next =
      warp_source_to_ref(to_gray(next), depth, cur_to_next, k, k);
  const SsimMap s_prev = ssim_map(cur_gray, warped_prev, ssim_radius);
  const SsimMap s_next = ssim_map(cur_gray, warped_next, ssim_radius);

  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!candidate_mask[i]) continue;
    // An invalid warp offers no photometric support; treat as score -1.
    const double a = s_prev.valid[i] ? s_prev.score[i] : -1.0;
    const double b = s_next.valid[i] ? s_next.score[i] : -1.0;
    if (std::min(a, b) < threshold) out[i] = 1;
  }
  return out;
}

}  // namespace mvsfuse
