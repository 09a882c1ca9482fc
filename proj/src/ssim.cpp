#include "mvsfuse/ssim.hpp"

#include <algorithm>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/parallel.hpp"

namespace mvsfuse {

SsimMap ssim_map(const Image& a, const Image& b, int radius) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionMismatch("ssim_map: image sizes differ");
  if (a.channels != 1 || b.channels != 1)
    throw DimensionMismatch("ssim_map: expects single-channel images");
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;

  SsimMap out;
  out.width = a.width;
  out.height = a.height;
  out.score.assign(a.pixel_count(), 0.0f);
  out.valid.assign(a.pixel_count(), 0);

  parallel_for(static_cast<std::size_t>(a.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < a.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * a.width + x;
      if (!a.is_valid(x, y) || !b.is_valid(x, y)) continue;
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      int n = 0;
      const int y0 = std::max(0, y - radius), y1 = std::min(a.height - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(a.width - 1, x + radius);
      for (int wy = y0; wy <= y1; ++wy) {
        for (int wx = x0; wx <= x1; ++wx) {
          if (!a.is_valid(wx, wy) || !b.is_valid(wx, wy)) continue;
          const double va = a.at(wx, wy);
          const double vb = b.at(wx, wy);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
          ++n;
        }
      }
      if (n < 4) continue;
      const double inv = 1.0 / n;
      const double ma = sa * inv;
      const double mb = sb * inv;
      const double va = std::max(0.0, saa * inv - ma * ma);
      const double vb = std::max(0.0, sbb * inv - mb * mb);
      const double cov = sab * inv - ma * mb;
      const double s = ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                       ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      out.score[idx] = static_cast<float>(std::clamp(s, -1.0, 1.0));
      out.valid[idx] = 1;
    }
  });
  return out;
}

double mean_ssim(const SsimMap& map, std::size_t* count) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < map.score.size(); ++i) {
    if (!map.valid[i]) continue;
    sum += map.score[i];
    ++n;
  }
  if (count) *count = n;
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace mvsfuse
