#pragma once

#include <filesystem>
#include <string>

#include "mvsfuse/image.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace mvsfuse {

// PFM, grayscale "Pf". Written little-endian (scale line "-1.0"), rows
// bottom-to-top per the format. Both endiannesses are accepted on read.
// Round trips are bit-exact, including non-positive (invalid) entries.
void write_pfm(const DepthMap& map, const std::filesystem::path& path);
DepthMap read_pfm(const std::filesystem::path& path);

// Confidence maps share the PFM container; invalid pixels are stored as -1
// and anything negative or non-finite reads back as invalid.
void write_pfm(const ConfidenceMap& map, const std::filesystem::path& path);
ConfidenceMap read_pfm_confidence(const std::filesystem::path& path);

// 8-bit PNG, 1 or 3 channels, values quantized by round(v * 255). The read
// image is valid everywhere.
void write_image(const Image& img, const std::filesystem::path& path);
Image read_image(const std::filesystem::path& path);

// Binary masks as 8-bit grayscale PNG, nonzero = set.
void write_mask(const std::vector<std::uint8_t>& mask, int width, int height,
                const std::filesystem::path& path);
std::vector<std::uint8_t> read_mask(const std::filesystem::path& path,
                                    int* width = nullptr,
                                    int* height = nullptr);

// Writes images/depths/masks plus manifest.json into dir; returns the
// manifest path. Loading is strict: schema violations name the offending
// field, rotations are checked against SO(3) to 1e-6, referenced files must
// exist. Prior depth paths referenced by the manifest are loadable through
// mono_prior.
std::filesystem::path save_sequence(const Sequence& seq,
                                    const std::filesystem::path& dir);

struct LoadedFrame {
  Image image;
  DepthMap gt_depth;             // empty (width 0) when absent
  Pose cam_to_world;
  std::vector<std::uint8_t> dynamic_mask;  // empty when absent
  std::string prior_depth_path;  // empty when absent; resolved path
};

struct LoadedSequence {
  std::vector<LoadedFrame> frames;
  CameraIntrinsics intrinsics;

  // View as a scene_synth Sequence (frames lacking gt keep an empty map).
  Sequence to_sequence() const;
};

LoadedSequence load_sequence(const std::filesystem::path& manifest_path);

}  // namespace mvsfuse
