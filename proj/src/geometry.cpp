#include "mvsfuse/geometry.hpp"

#include <cmath>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/parallel.hpp"

namespace mvsfuse {

CameraIntrinsics CameraIntrinsics::scaled(double s) const {
  CameraIntrinsics out;
  out.fx = fx * s;
  out.fy = fy * s;
  out.cx = cx * s;
  out.cy = cy * s;
  out.width = static_cast<int>(std::lround(width * s));
  out.height = static_cast<int>(std::lround(height * s));
  return out;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Pose relative_pose(const Pose& world_from_ref, const Pose& world_from_src) {
  return compose(inverse(world_from_src), world_from_ref);
}

Pose euler_to_pose(const EulerPose& e) {
  const double cz = std::cos(e.angles[0]), sz = std::sin(e.angles[0]);
  const double cy = std::cos(e.angles[1]), sy = std::sin(e.angles[1]);
  const double cx = std::cos(e.angles[2]), sx = std::sin(e.angles[2]);
  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  Pose p;
  p.rotation << cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
      sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
      -sy, cy * sx, cy * cx;
  p.translation = e.translation;
  return p;
}

EulerPose pose_to_euler(const Pose& p) {
  const Eigen::Matrix3d& r = p.rotation;
  const double sy = -r(2, 0);
  const double pitch = std::asin(std::clamp(sy, -1.0, 1.0));
  constexpr double kHalfPi = 1.5707963267948966;
  if (std::abs(pitch) > kHalfPi - 1e-6)
    throw GimbalLock("pose_to_euler: pitch within 1e-6 of +-pi/2");
  EulerPose e;
  e.angles[0] = std::atan2(r(1, 0), r(0, 0));
  e.angles[1] = pitch;
  e.angles[2] = std::atan2(r(2, 1), r(2, 2));
  e.translation = p.translation;
  return e;
}

Eigen::Vector2d project(const Eigen::Vector3d& point,
                        const CameraIntrinsics& k) {
  if (point.z() <= 0.0)
    throw NonPositiveDepth("project: point has non-positive depth");
  return {k.fx * point.x() / point.z() + k.cx,
          k.fy * point.y() / point.z() + k.cy};
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth,
                          const CameraIntrinsics& k) {
  if (depth <= 0.0)
    throw NonPositiveDepth("unproject: non-positive depth");
  return {(pixel.x() - k.cx) * depth / k.fx,
          (pixel.y() - k.cy) * depth / k.fy, depth};
}

Image warp_source_to_ref(const Image& src, const DepthMap& depth,
                         const Pose& rel_pose, const CameraIntrinsics& k_ref,
                         const CameraIntrinsics& k_src, DepthMap* src_z_out) {
  if (depth.width != k_ref.width || depth.height != k_ref.height)
    throw DimensionMismatch("warp_source_to_ref: depth does not match k_ref");
  if (src.width != k_src.width || src.height != k_src.height)
    throw DimensionMismatch("warp_source_to_ref: src does not match k_src");

  Image out(k_ref.width, k_ref.height, src.channels, 0.0f, false);
  if (src_z_out) *src_z_out = DepthMap(k_ref.width, k_ref.height);

  if (rel_pose.is_identity() && k_ref.fx == k_src.fx && k_ref.fy == k_src.fy &&
      k_ref.cx == k_src.cx && k_ref.cy == k_src.cy &&
      k_ref.width == k_src.width && k_ref.height == k_src.height) {
    // Identity reprojection: every valid-depth pixel samples itself.
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        if (!depth.is_valid(x, y) || !src.is_valid(x, y)) continue;
        for (int c = 0; c < src.channels; ++c)
          out.at(x, y, c) = src.at(x, y, c);
        out.set_valid(x, y, true);
        if (src_z_out) src_z_out->at(x, y) = depth.at(x, y);
      }
    }
    return out;
  }

  const Eigen::Matrix3d r = rel_pose.rotation;
  const Eigen::Vector3d t = rel_pose.translation;
  parallel_for(static_cast<std::size_t>(out.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < out.width; ++x) {
      if (!depth.is_valid(x, y)) continue;
      const double d = depth.at(x, y);
      const Eigen::Vector3d p_ref{(x - k_ref.cx) * d / k_ref.fx,
                                  (y - k_ref.cy) * d / k_ref.fy, d};
      const Eigen::Vector3d p_src = r * p_ref + t;
      if (p_src.z() <= 0.0) continue;
      const double u = k_src.fx * p_src.x() / p_src.z() + k_src.cx;
      const double v = k_src.fy * p_src.y() / p_src.z() + k_src.cy;
      const auto s = bilinear_sample(src, u, v);
      if (!s) continue;
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = (*s)[c];
      out.set_valid(x, y, true);
      if (src_z_out) src_z_out->at(x, y) = static_cast<float>(p_src.z());
    }
  });
  return out;
}

}  // namespace mvsfuse
