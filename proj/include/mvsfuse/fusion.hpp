#pragma once

#include <cstdint>
#include <vector>

#include "mvsfuse/geometry.hpp"
#include "mvsfuse/image.hpp"

namespace mvsfuse {

struct FusionParams {
  int ssim_radius = 3;     // (2r+1)^2 SSIM window, default 7x7
  double gamma = 1.0;      // exponent on m_m * m_w
  double floor = 0.3;      // minimum m_w for any multi-view contribution
  enum class Reduce { Mean, Min } reduce = Reduce::Mean;
  double dynamic_threshold = 0.7;
};

struct FusionResult {
  DepthMap d_fuse;
  ConfidenceMap m_w;
  ConfidenceMap weight;  // blend weight, 1 = pure multi-view
};

// Warping-consistency confidence: every source is warped into the reference
// view with the multi-view depth, scored with windowed SSIM against the
// reference, reduced over sources, and mapped to (1 + SSIM) / 2. Pixels with
// no valid warp are invalid.
ConfidenceMap warping_confidence(const Image& ref,
                                 const std::vector<Image>& srcs,
                                 const DepthMap& d_m,
                                 const std::vector<Pose>& rel_poses,
                                 const CameraIntrinsics& k,
                                 int ssim_radius,
                                 FusionParams::Reduce reduce =
                                     FusionParams::Reduce::Mean);

// Gated convex blend of the two branches:
//   raw    = (m_m * m_w)^gamma
//   weight = 0 where d_m is invalid, raw where m_w >= floor, else 0
//   d_fuse = weight * d_m + (1 - weight) * d_s
// m_s breaks ties against grossly disagreeing multi-view depth: where
// |d_s - d_m| / d_s > 1 and m_s > m_m * m_w the weight is forced to 0.
// Pixels with invalid d_s take d_m outright when m_w >= floor.
FusionResult fuse(const DepthMap& d_s, const DepthMap& d_m,
                  const ConfidenceMap& m_s, const ConfidenceMap& m_m,
                  const ConfidenceMap& m_w, const FusionParams& params);

// Flags candidate pixels whose warped neighbors disagree with the current
// frame: prev and next are warped to cur with the given depth and relative
// poses (cur -> prev, cur -> next); a pixel is dynamic when the smaller of
// the two SSIM scores falls below threshold. Pixels with no valid warp count
// as failing the check.
std::vector<std::uint8_t> dynamic_mask(
    const Image& prev, const Image& cur, const Image& next,
    const std::vector<std::uint8_t>& candidate_mask, const DepthMap& depth,
    const Pose& cur_to_prev, const Pose& cur_to_next,
    const CameraIntrinsics& k, double threshold, int ssim_radius = 3);

}  // namespace mvsfuse
