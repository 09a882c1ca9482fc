#include "mvsfuse/image.hpp"

#include <algorithm>

#include "mvsfuse/errors.hpp"

namespace mvsfuse {

std::optional<SampleValue> bilinear_sample(const Image& img, double u,
                                           double v) {
  const double x0d = std::floor(u);
  const double y0d = std::floor(v);
  const double fx = u - x0d;
  const double fy = v - y0d;
  const int x0 = static_cast<int>(x0d);
  const int y0 = static_cast<int>(y0d);
  // At exact integer coordinates only one pixel per axis is touched.
  const int x1 = (fx == 0.0) ? x0 : x0 + 1;
  const int y1 = (fy == 0.0) ? y0 : y0 + 1;
  if (x0 < 0 || y0 < 0 || x1 >= img.width || y1 >= img.height)
    return std::nullopt;
  if (!img.is_valid(x0, y0) || !img.is_valid(x1, y0) ||
      !img.is_valid(x0, y1) || !img.is_valid(x1, y1))
    return std::nullopt;

  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  SampleValue out;
  for (int c = 0; c < img.channels; ++c) {
    const double s = w00 * img.at(x0, y0, c) + w10 * img.at(x1, y0, c) +
                     w01 * img.at(x0, y1, c) + w11 * img.at(x1, y1, c);
    out.v[static_cast<std::size_t>(c)] = static_cast<float>(s);
  }
  return out;
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image gray(img.width, img.height, 1);
  gray.valid = img.valid;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float sum = 0.0f;
      for (int c = 0; c < img.channels; ++c) sum += img.at(x, y, c);
      gray.at(x, y) = sum / static_cast<float>(img.channels);
    }
  }
  return gray;
}

Image downsample_box(const Image& img, int factor) {
  if (factor < 1 || img.width % factor != 0 || img.height % factor != 0)
    throw DimensionMismatch("downsample_box: dimensions not divisible by factor");
  const int w = img.width / factor;
  const int h = img.height / factor;
  Image out(w, h, img.channels);
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool ok = true;
      for (int c = 0; c < img.channels; ++c) {
        float sum = 0.0f;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            sum += img.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = sum * inv;
      }
      for (int dy = 0; dy < factor && ok; ++dy)
        for (int dx = 0; dx < factor && ok; ++dx)
          ok = img.is_valid(x * factor + dx, y * factor + dy);
      out.set_valid(x, y, ok);
    }
  }
  return out;
}

DepthMap downsample_box(const DepthMap& map, int factor) {
  if (factor < 1 || map.width % factor != 0 || map.height % factor != 0)
    throw DimensionMismatch("downsample_box: dimensions not divisible by factor");
  const int w = map.width / factor;
  const int h = map.height / factor;
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float sum = 0.0f;
      bool ok = true;
      for (int dy = 0; dy < factor && ok; ++dy)
        for (int dx = 0; dx < factor && ok; ++dx) {
          if (!map.is_valid(x * factor + dx, y * factor + dy)) {
            ok = false;
            break;
          }
          sum += map.at(x * factor + dx, y * factor + dy);
        }
      out.at(x, y) = ok ? sum / static_cast<float>(factor * factor) : 0.0f;
    }
  }
  return out;
}

namespace {

// Shared kernel for edge-clamped bilinear upsampling of scalar grids.
template <typename GetValid, typename GetValue, typename PutPixel>
void upsample_grid(int in_w, int in_h, int out_w, int out_h,
                   const GetValid& in_valid, const GetValue& in_value,
                   const PutPixel& put) {
  const double sx = static_cast<double>(in_w) / out_w;
  const double sy = static_cast<double>(in_h) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double v = y * sy;
    int y0 = static_cast<int>(std::floor(v));
    double fy = v - y0;
    if (y0 >= in_h - 1) { y0 = in_h - 1; fy = 0.0; }
    const int y1 = (fy == 0.0) ? y0 : y0 + 1;
    for (int x = 0; x < out_w; ++x) {
      const double u = x * sx;
      int x0 = static_cast<int>(std::floor(u));
      double fx = u - x0;
      if (x0 >= in_w - 1) { x0 = in_w - 1; fx = 0.0; }
      const int x1 = (fx == 0.0) ? x0 : x0 + 1;
      if (!in_valid(x0, y0) || !in_valid(x1, y0) || !in_valid(x0, y1) ||
          !in_valid(x1, y1)) {
        put(x, y, 0.0f, false);
        continue;
      }
      const double s = (1.0 - fx) * (1.0 - fy) * in_value(x0, y0) +
                       fx * (1.0 - fy) * in_value(x1, y0) +
                       (1.0 - fx) * fy * in_value(x0, y1) +
                       fx * fy * in_value(x1, y1);
      put(x, y, static_cast<float>(s), true);
    }
  }
}

}  // namespace

DepthMap upsample_bilinear(const DepthMap& map, int out_width,
                           int out_height) {
  DepthMap out(out_width, out_height);
  upsample_grid(
      map.width, map.height, out_width, out_height,
      [&](int x, int y) { return map.is_valid(x, y); },
      [&](int x, int y) { return static_cast<double>(map.at(x, y)); },
      [&](int x, int y, float v, bool ok) { out.at(x, y) = ok ? v : 0.0f; });
  return out;
}

ConfidenceMap upsample_bilinear(const ConfidenceMap& map, int out_width,
                                int out_height) {
  ConfidenceMap out(out_width, out_height);
  upsample_grid(
      map.width, map.height, out_width, out_height,
      [&](int x, int y) { return map.is_valid(x, y); },
      [&](int x, int y) { return static_cast<double>(map.at(x, y)); },
      [&](int x, int y, float v, bool ok) {
        out.set(x, y, ok ? std::clamp(v, 0.0f, 1.0f) : 0.0f, ok);
      });
  return out;
}

}  // namespace mvsfuse
