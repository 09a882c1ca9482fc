#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvsfuse/geometry.hpp"
#include "mvsfuse/image.hpp"

namespace mvsfuse {

// Surface albedo. Checker alternates two fixed albedos on a cell_size grid;
// value_noise is a seeded lattice noise (fully determined by the scene seed
// and primitive index); uniform is a constant.
struct Texture {
  enum class Kind { Checker, ValueNoise, Uniform };
  Kind kind = Kind::Uniform;
  double cell_size = 1.0;  // checker, meters
  double scale = 1.0;      // value_noise base cell, meters
  int octaves = 3;         // value_noise
  double value = 0.5;      // uniform
};

struct Primitive {
  enum class Kind { Plane, Box, Sphere };
  Kind kind = Kind::Plane;
  Pose pose;               // primitive local frame -> world
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  // plane: rectangle size.x() by size.y() in the local xy plane;
  // box: full extents; sphere: radius = size.x().
  Texture texture;
};

struct DynamicPrimitive {
  Primitive primitive;     // pose at frame 0
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/frame, world
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::optional<DynamicPrimitive> dynamic;
  std::vector<Pose> trajectory;  // camera-to-world, one per frame
  CameraIntrinsics intrinsics;
  int frames = 0;
  std::uint64_t seed = 0;
};

struct Frame {
  Image image;
  DepthMap gt_depth;
  Pose cam_to_world;
  std::vector<std::uint8_t> dynamic_mask;  // row-major, nonzero = dynamic
};

struct Sequence {
  std::vector<Frame> frames;
  CameraIntrinsics intrinsics;
};

// First-hit result of a single ray cast, exposed for consistency checks.
struct PixelHit {
  int prim_index = -1;   // index into primitives; -1 none; -2 dynamic
  double depth = 0.0;    // camera-frame z of the hit
  Eigen::Vector3d world_point = Eigen::Vector3d::Zero();
};

// Renders the sequence by nearest-hit ray casting with flat albedo.
// Identical spec (including seed) gives a bit-identical Sequence. Throws
// InvalidSceneSpec on malformed specs and EmptyScene when a frame sees no
// geometry at all.
Sequence generate(const SceneSpec& spec);

// Casts the ray through pixel center (x, y) of the given frame.
PixelHit trace_pixel(const SceneSpec& spec, int frame, int x, int y);

struct NamedSpec {
  std::string name;
  SceneSpec spec;
};

// Fixed benchmark scenes: "textured_translate", "low_texture",
// "dynamic_car", "stopped".
std::vector<NamedSpec> standard_suite();
SceneSpec standard_spec(const std::string& name);

// Seeded 2D lattice value noise in [0, 1]; octave amplitudes halve.
double value_noise2(std::uint64_t seed, double x, double y, int octaves);

}  // namespace mvsfuse
