#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace mvsfuse {

// Row-major floating-point image with 1 or 3 channels, values in [0, 1],
// and an explicit per-pixel validity grid.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;       // size width*height*channels
  std::vector<std::uint8_t> valid;  // size width*height, nonzero = valid

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f, bool all_valid = true)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill),
        valid(static_cast<std::size_t>(w) * h, all_valid ? 1 : 0) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  bool is_valid(int x, int y) const {
    return valid[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set_valid(int x, int y, bool v) {
    valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// Depth map in meters. Validity is implicit: entries that are non-positive
// or non-finite are invalid.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, meters

  DepthMap() = default;
  DepthMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float at(int x, int y) const { return data[index(x, y)]; }
  float& at(int x, int y) { return data[index(x, y)]; }
  bool is_valid(int x, int y) const {
    const float d = at(x, y);
    return std::isfinite(d) && d > 0.0f;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// Per-pixel confidence in [0, 1] with an explicit validity grid.
struct ConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> valid;

  ConfidenceMap() = default;
  ConfidenceMap(int w, int h, float fill = 0.0f, bool all_valid = true)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill),
        valid(static_cast<std::size_t>(w) * h, all_valid ? 1 : 0) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float at(int x, int y) const { return data[index(x, y)]; }
  float& at(int x, int y) { return data[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  void set(int x, int y, float v, bool ok = true) {
    data[index(x, y)] = v;
    valid[index(x, y)] = ok ? 1 : 0;
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// Value of one bilinear sample; channels beyond the image's channel count
// are zero.
struct SampleValue {
  std::array<float, 3> v{0.0f, 0.0f, 0.0f};
  float operator[](int c) const { return v[static_cast<std::size_t>(c)]; }
};

// Bilinear sample at a continuous coordinate, pixel centers at integers.
// Integer coordinates return the stored pixel exactly. A sample touching any
// out-of-bounds or invalid pixel yields nullopt; there is no clamping.
std::optional<SampleValue> bilinear_sample(const Image& img, double u,
                                           double v);

// Grayscale view: mean over channels. 1-channel images are returned as-is.
Image to_gray(const Image& img);

// Box downsample by an integer factor. Output pixel valid iff the whole
// factor x factor block is valid. Dimensions must be divisible by factor.
Image downsample_box(const Image& img, int factor);
DepthMap downsample_box(const DepthMap& map, int factor);

// Bilinear upsample back to (out_width, out_height) under the coordinate
// convention of CameraIntrinsics::scaled: full-res pixel u maps to
// u * (w_small / w_out) in the small grid. Samples are edge-clamped; an
// output pixel is invalid if any touched source pixel is invalid.
DepthMap upsample_bilinear(const DepthMap& map, int out_width, int out_height);
ConfidenceMap upsample_bilinear(const ConfidenceMap& map, int out_width,
                                int out_height);

}  // namespace mvsfuse
