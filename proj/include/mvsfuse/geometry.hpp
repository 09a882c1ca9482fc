#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvsfuse/image.hpp"

namespace mvsfuse {

// Pinhole camera. Pixel centers sit at integer coordinates; the optical axis
// projects to (cx, cy).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Scales every field by s exactly (quarter-resolution processing uses
  // s = 0.25; width and height must scale to integers).
  CameraIntrinsics scaled(double s) const;
};

// Rigid SE(3) transform. As a relative pose it maps reference-camera
// coordinates to source-camera coordinates.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return Pose{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  bool is_identity() const {
    return rotation == Eigen::Matrix3d::Identity() &&
           translation == Eigen::Vector3d::Zero();
  }
};

// compose(a, b): the transform that applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

// Relative pose mapping ref-camera coordinates to src-camera coordinates,
// from camera-to-world poses of the two frames.
Pose relative_pose(const Pose& world_from_ref, const Pose& world_from_src);

// Euler view of a pose: intrinsic Z-Y-X (yaw, pitch, roll), radians.
struct EulerPose {
  Eigen::Vector3d angles = Eigen::Vector3d::Zero();  // (yaw, pitch, roll)
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

Pose euler_to_pose(const EulerPose& e);
// Throws GimbalLock when |pitch| is within 1e-6 of pi/2.
EulerPose pose_to_euler(const Pose& p);

// Pinhole projection of a camera-frame point. Throws NonPositiveDepth when
// point.z() <= 0.
Eigen::Vector2d project(const Eigen::Vector3d& point,
                        const CameraIntrinsics& k);
// Back-projects a pixel at the given depth. Throws NonPositiveDepth when
// depth <= 0.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth,
                          const CameraIntrinsics& k);

// Warps a source image into the reference view: each reference pixel with
// valid depth is lifted to 3D, mapped through rel_pose (ref -> src) and
// sampled bilinearly in the source. Pixels that land behind the source
// camera, out of bounds, or on invalid source pixels come back invalid.
// When src_z_out is given it receives the source-camera z of each warped
// point (0 where the warp is invalid), which callers use for occlusion tests.
Image warp_source_to_ref(const Image& src, const DepthMap& depth,
                         const Pose& rel_pose, const CameraIntrinsics& k_ref,
                         const CameraIntrinsics& k_src,
                         DepthMap* src_z_out = nullptr);

}  // namespace mvsfuse
