#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvsfuse/geometry.hpp"
#include "mvsfuse/image.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace mvsfuse {

// One benchmark noise setting: an exact pose ("none"), a disturbance
// coefficient delta, or the degenerate identity-pose case.
struct NoiseLevel {
  enum class Kind { None, Coefficient, Identity };
  Kind kind = Kind::None;
  double delta = 0.0;

  static NoiseLevel none() { return {}; }
  static NoiseLevel coefficient(double delta);  // delta 0 collapses to none
  static NoiseLevel identity() { return {Kind::Identity, 0.0}; }

  std::string label() const;
  static NoiseLevel parse(const std::string& label);
};

// Per-sample disturbance signs: exactly half +1 and half -1 (odd counts give
// the extra +1), assigned by a seeded shuffle.
struct NoiseAssignment {
  std::uint64_t seed = 0;
  std::vector<int> signs(std::size_t n_samples) const;
};

// Scales the Euler-angle and translation views of a relative pose by coeff.
Pose perturb_pose(const Pose& rel, double coeff);

// One benchmark sample: a 3-frame window centered at ref_index. For the
// identity level the source indices point at the reference frame itself and
// the relative poses are identity.
struct BenchSample {
  int ref_index = 0;
  std::vector<int> src_indices;
  std::vector<Pose> rel_poses;  // ref -> src, after noise
  double coeff = 1.0;           // disturbance applied to this sample
};

// Builds the per-sample relative poses for a noise level. Requires at least
// 3 frames (each sample needs both neighbors).
std::vector<BenchSample> apply_noise_level(const Sequence& seq,
                                           const NoiseLevel& level,
                                           const NoiseAssignment& assignment);

struct PoseVote {
  Pose chosen;
  bool chose_candidate = false;
  double score_input = 0.0;
  double score_candidate = 0.0;
};

// SSIM vote between two candidate relative poses: the source is warped to
// the reference with d_s under each pose and the pose with the higher mean
// SSIM over jointly-valid pixels wins. Scores within 1e-6 count as a tie,
// which keeps the input. Requires d_s valid on at least 10% of pixels.
PoseVote correct_pose(const Image& ref, const Image& src, const DepthMap& d_s,
                      const Pose& pose_input, const Pose& pose_candidate,
                      const CameraIntrinsics& k, int ssim_radius = 3);

// Absolute trajectory error: RMSE of camera positions, optionally after the
// closed-form least-squares rigid alignment (rotation + translation, no
// scale) of the estimated positions onto the ground truth.
double ate(const std::vector<Pose>& est_cam_to_world,
           const std::vector<Pose>& gt_cam_to_world, bool align);

}  // namespace mvsfuse
