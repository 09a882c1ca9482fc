#include "mvsfuse/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/parallel.hpp"
#include "mvsfuse/rng.hpp"

namespace mvsfuse {

namespace {

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = hash_mix(seed, (static_cast<std::uint64_t>(ix) << 32) ^
                                       static_cast<std::uint32_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double noise_octave(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smoothstep(x - fx);
  const double ty = smoothstep(y - fy);
  const double v00 = lattice_value(seed, ix, iy);
  const double v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  double u = 0.0;
  double v = 0.0;
};

bool intersect_local(const Primitive& prim, const Eigen::Vector3d& o,
                     const Eigen::Vector3d& d, Hit& hit) {
  constexpr double kEps = 1e-9;
  switch (prim.kind) {
    case Primitive::Kind::Plane: {
      if (std::abs(d.z()) < 1e-12) return false;
      const double t = -o.z() / d.z();
      if (t <= kEps) return false;
      const double px = o.x() + t * d.x();
      const double py = o.y() + t * d.y();
      if (std::abs(px) > 0.5 * prim.size.x() ||
          std::abs(py) > 0.5 * prim.size.y())
        return false;
      hit = {t, px, py};
      return true;
    }
    case Primitive::Kind::Box: {
      const Eigen::Vector3d half = 0.5 * prim.size;
      double tmin = -std::numeric_limits<double>::infinity();
      double tmax = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
          if (std::abs(o[a]) > half[a]) return false;
          continue;
        }
        double t0 = (-half[a] - o[a]) / d[a];
        double t1 = (half[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return false;
      }
      const double t = (tmin > kEps) ? tmin : tmax;
      if (t <= kEps) return false;
      const Eigen::Vector3d p = o + t * d;
      // Texture axes: the two coordinates orthogonal to the hit face.
      int face = 0;
      double best = -1.0;
      for (int a = 0; a < 3; ++a) {
        const double r = half[a] > 0 ? std::abs(p[a]) / half[a] : 0.0;
        if (r > best) {
          best = r;
          face = a;
        }
      }
      const int ua = (face + 1) % 3;
      const int va = (face + 2) % 3;
      hit = {t, p[ua], p[va]};
      return true;
    }
    case Primitive::Kind::Sphere: {
      const double r = prim.size.x();
      const double a = d.dot(d);
      const double b = 2.0 * o.dot(d);
      const double c = o.dot(o) - r * r;
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) return false;
      const double sq = std::sqrt(disc);
      double t = (-b - sq) / (2.0 * a);
      if (t <= kEps) t = (-b + sq) / (2.0 * a);
      if (t <= kEps) return false;
      const Eigen::Vector3d p = o + t * d;
      hit = {t, r * std::atan2(p.y(), p.x()),
             r * std::asin(std::clamp(p.z() / r, -1.0, 1.0))};
      return true;
    }
  }
  return false;
}

float shade(const Texture& tex, std::uint64_t seed, double u, double v) {
  switch (tex.kind) {
    case Texture::Kind::Checker: {
      const auto iu = static_cast<std::int64_t>(std::floor(u / tex.cell_size));
      const auto iv = static_cast<std::int64_t>(std::floor(v / tex.cell_size));
      return ((iu + iv) & 1) ? 0.8f : 0.25f;
    }
    case Texture::Kind::ValueNoise:
      return static_cast<float>(
          0.15 + 0.7 * value_noise2(seed, u / tex.scale, v / tex.scale,
                                    tex.octaves));
    case Texture::Kind::Uniform:
      return static_cast<float>(std::clamp(tex.value, 0.0, 1.0));
  }
  return 0.0f;
}

struct FramePrim {
  Primitive prim;
  Pose world_to_local;
  std::uint64_t seed;
  bool dynamic;
};

std::vector<FramePrim> frame_primitives(const SceneSpec& spec, int frame) {
  std::vector<FramePrim> out;
  out.reserve(spec.primitives.size() + 1);
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& p = spec.primitives[i];
    out.push_back({p, inverse(p.pose), hash_mix(spec.seed, i + 1), false});
  }
  if (spec.dynamic) {
    Primitive p = spec.dynamic->primitive;
    p.pose.translation += spec.dynamic->velocity * static_cast<double>(frame);
    out.push_back({p, inverse(p.pose),
                   hash_mix(spec.seed, spec.primitives.size() + 1), true});
  }
  return out;
}

struct TraceResult {
  int index = -1;  // index into the FramePrim list
  Hit hit;
};

TraceResult trace(const std::vector<FramePrim>& prims,
                  const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  TraceResult best;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Eigen::Vector3d o = prims[i].world_to_local.apply(origin);
    const Eigen::Vector3d d = prims[i].world_to_local.rotation * dir;
    Hit h;
    if (!intersect_local(prims[i].prim, o, d, h)) continue;
    if (best.index < 0 || h.t < best.hit.t) {
      best.index = static_cast<int>(i);
      best.hit = h;
    }
  }
  return best;
}

void validate(const SceneSpec& spec) {
  if (spec.frames < 1)
    throw InvalidSceneSpec("scene spec: frames must be >= 1");
  if (static_cast<int>(spec.trajectory.size()) != spec.frames)
    throw InvalidSceneSpec("scene spec: trajectory length must equal frames");
  if (spec.intrinsics.width < 1 || spec.intrinsics.height < 1 ||
      spec.intrinsics.fx <= 0.0 || spec.intrinsics.fy <= 0.0)
    throw InvalidSceneSpec("scene spec: malformed intrinsics");
  if (spec.primitives.empty() && !spec.dynamic)
    throw InvalidSceneSpec("scene spec: no primitives");
  for (int f = 0; f < spec.frames; ++f) {
    const Pose world_to_cam = inverse(spec.trajectory[f]);
    const auto prims = frame_primitives(spec, f);
    for (std::size_t i = 0; i < prims.size(); ++i) {
      const Primitive& prim = prims[i].prim;
      const Eigen::Vector3d c = world_to_cam.apply(prim.pose.translation);
      // A primitive counts as in front when any part of its bounding sphere
      // reaches the z > 0 half space (enclosing geometry surrounds the
      // camera, so the center alone is not decisive).
      double radius = 0.0;
      switch (prim.kind) {
        case Primitive::Kind::Plane:
          radius = 0.5 * std::hypot(prim.size.x(), prim.size.y());
          break;
        case Primitive::Kind::Box:
          radius = 0.5 * prim.size.norm();
          break;
        case Primitive::Kind::Sphere:
          radius = prim.size.x();
          break;
      }
      if (c.z() + radius <= 0.0)
        throw InvalidSceneSpec("scene spec: primitive behind camera in frame " +
                               std::to_string(f));
    }
  }
}

}  // namespace

double value_noise2(std::uint64_t seed, double x, double y, int octaves) {
  if (octaves < 1) octaves = 1;
  double sum = 0.0;
  double amp = 1.0;
  double norm = 0.0;
  double fx = x, fy = y;
  for (int o = 0; o < octaves; ++o) {
    sum += amp * noise_octave(hash_mix(seed, 0x5eed + o), fx, fy);
    norm += amp;
    amp *= 0.5;
    fx *= 2.0;
    fy *= 2.0;
  }
  return sum / norm;
}

Sequence generate(const SceneSpec& spec) {
  validate(spec);
  Sequence seq;
  seq.intrinsics = spec.intrinsics;
  seq.frames.resize(spec.frames);

  const int w = spec.intrinsics.width;
  const int h = spec.intrinsics.height;
  for (int f = 0; f < spec.frames; ++f) {
    Frame& frame = seq.frames[f];
    frame.cam_to_world = spec.trajectory[f];
    frame.image = Image(w, h, 1, 0.0f, false);
    frame.gt_depth = DepthMap(w, h);
    frame.dynamic_mask.assign(static_cast<std::size_t>(w) * h, 0);

    const auto prims = frame_primitives(spec, f);
    const Eigen::Vector3d origin = frame.cam_to_world.translation;
    const Eigen::Matrix3d cam_rot = frame.cam_to_world.rotation;
    const CameraIntrinsics& k = spec.intrinsics;

    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        // Direction with unit camera-z so the ray parameter equals depth.
        const Eigen::Vector3d d_cam{(x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0};
        const TraceResult tr = trace(prims, origin, cam_rot * d_cam);
        if (tr.index < 0) continue;
        const FramePrim& fp = prims[static_cast<std::size_t>(tr.index)];
        frame.image.at(x, y) =
            shade(fp.prim.texture, fp.seed, tr.hit.u, tr.hit.v);
        frame.image.set_valid(x, y, true);
        frame.gt_depth.at(x, y) = static_cast<float>(tr.hit.t);
        if (fp.dynamic)
          frame.dynamic_mask[static_cast<std::size_t>(y) * w + x] = 1;
      }
    });

    std::size_t hits = 0;
    for (auto v : frame.image.valid) hits += v != 0;
    if (hits == 0)
      throw EmptyScene("frame " + std::to_string(f) + " sees no geometry");
  }
  return seq;
}

PixelHit trace_pixel(const SceneSpec& spec, int frame, int x, int y) {
  validate(spec);
  if (frame < 0 || frame >= spec.frames)
    throw InvalidSceneSpec("trace_pixel: frame out of range");
  const Pose& c2w = spec.trajectory[frame];
  const CameraIntrinsics& k = spec.intrinsics;
  const Eigen::Vector3d d_cam{(x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0};
  const Eigen::Vector3d dir = c2w.rotation * d_cam;
  const auto prims = frame_primitives(spec, frame);
  const TraceResult tr = trace(prims, c2w.translation, dir);
  PixelHit out;
  if (tr.index < 0) return out;
  out.prim_index =
      prims[static_cast<std::size_t>(tr.index)].dynamic ? -2 : tr.index;
  out.depth = tr.hit.t;
  out.world_point = c2w.translation + tr.hit.t * dir;
  return out;
}

namespace {

CameraIntrinsics suite_intrinsics() {
  CameraIntrinsics k;
  k.width = 320;
  k.height = 240;
  k.fx = 450.0;
  k.fy = 450.0;
  k.cx = 159.5;
  k.cy = 119.5;
  return k;
}

Texture noise_texture(double scale, int octaves) {
  Texture t;
  t.kind = Texture::Kind::ValueNoise;
  t.scale = scale;
  t.octaves = octaves;
  return t;
}

Texture uniform_texture(double value) {
  Texture t;
  t.kind = Texture::Kind::Uniform;
  t.value = value;
  return t;
}

Primitive plane_through(const Eigen::Vector3d& center,
                        const Eigen::Vector3d& normal, double sx, double sy,
                        const Texture& tex) {
  Primitive p;
  p.kind = Primitive::Kind::Plane;
  p.size = {sx, sy, 0.0};
  p.texture = tex;
  const Eigen::Vector3d z = normal.normalized();
  Eigen::Vector3d up =
      std::abs(z.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = (up - up.dot(z) * z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  p.pose.rotation.col(0) = x;
  p.pose.rotation.col(1) = y;
  p.pose.rotation.col(2) = z;
  p.pose.translation = center;
  return p;
}

// The inside of a large textured sphere: a smooth concave backdrop with
// full frustum coverage, no depth discontinuities, and gentle slant. The
// sphere is rolled a quarter turn so the texture poles sit outside the
// visible region.
std::vector<Primitive> bowl_primitives(double noise_scale) {
  Primitive bowl;
  bowl.kind = Primitive::Kind::Sphere;
  bowl.size = {4.3, 4.3, 4.3};
  EulerPose e;
  e.angles = {0.0, 0.0, -1.5707963267948966};
  e.translation = {0.0, 0.0, 1.2};
  bowl.pose = euler_to_pose(e);
  bowl.texture =
      noise_scale > 0.0 ? noise_texture(noise_scale, 2) : uniform_texture(0.5);
  return {bowl};
}

std::vector<Pose> linear_trajectory(int frames, const Eigen::Vector3d& start,
                                    const Eigen::Vector3d& step,
                                    double pan_step) {
  std::vector<Pose> traj(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    EulerPose e;
    e.angles = {0.0, pan_step * f, 0.0};  // pan about the camera y axis
    e.translation = start + step * static_cast<double>(f);
    traj[static_cast<std::size_t>(f)] = euler_to_pose(e);
  }
  return traj;
}

}  // namespace

std::vector<NamedSpec> standard_suite() {
  std::vector<NamedSpec> suite;

  {
    SceneSpec spec;
    spec.intrinsics = suite_intrinsics();
    spec.frames = 10;
    spec.seed = 1001;
    spec.primitives = bowl_primitives(0.15);
    const Eigen::Vector3d step =
        0.3 * Eigen::Vector3d{std::cos(0.19), 0.0, std::sin(0.19)};
    spec.trajectory =
        linear_trajectory(10, {-4.5 * step.x(), 0.0, 0.0}, step, 0.004);
    suite.push_back({"textured_translate", spec});
  }
  {
    SceneSpec spec;
    spec.intrinsics = suite_intrinsics();
    spec.frames = 10;
    spec.seed = 1002;
    spec.primitives = bowl_primitives(0.0);
    spec.trajectory = linear_trajectory(10, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.25}, 0.0);
    suite.push_back({"low_texture", spec});
  }
  {
    SceneSpec spec;
    spec.intrinsics = suite_intrinsics();
    spec.frames = 10;
    spec.seed = 1003;
    spec.primitives = bowl_primitives(0.35);
    DynamicPrimitive dyn;
    dyn.primitive.kind = Primitive::Kind::Box;
    dyn.primitive.size = {2.0, 1.4, 1.4};
    // Diagonal crossing: the vertical motion component cannot be explained
    // by any depth hypothesis, so the object stays photometrically
    // detectable instead of aliasing onto a false depth.
    dyn.primitive.pose.translation = {-2.0, -0.8, 4.2};
    dyn.primitive.texture = noise_texture(0.18, 2);
    dyn.velocity = {0.4, 0.17, 0.0};
    spec.dynamic = dyn;
    const Eigen::Vector3d step =
        0.3 * Eigen::Vector3d{std::cos(0.19), 0.0, std::sin(0.19)};
    spec.trajectory =
        linear_trajectory(10, {-4.5 * step.x(), 0.0, 0.0}, step, 0.004);
    suite.push_back({"dynamic_car", spec});
  }
  {
    SceneSpec spec;
    spec.intrinsics = suite_intrinsics();
    spec.frames = 10;
    spec.seed = 1004;
    spec.primitives = bowl_primitives(0.35);
    spec.trajectory.assign(10, Pose::identity());
    suite.push_back({"stopped", spec});
  }
  return suite;
}

SceneSpec standard_spec(const std::string& name) {
  for (auto& named : standard_suite())
    if (named.name == name) return named.spec;
  throw InvalidSceneSpec("unknown standard scene: " + name);
}

}  // namespace mvsfuse
