#pragma once

#include <cstdint>
#include <vector>

#include "mvsfuse/image.hpp"

namespace mvsfuse {

// Per-pixel structural similarity in [-1, 1].
struct SsimMap {
  int width = 0;
  int height = 0;
  std::vector<float> score;
  std::vector<std::uint8_t> valid;

  float at(int x, int y) const {
    return score[static_cast<std::size_t>(y) * width + x];
  }
  bool is_valid(int x, int y) const {
    return valid[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

// Windowed SSIM between two single-channel images of equal size, window
// (2*radius+1)^2, standard constants C1 = 0.01^2, C2 = 0.03^2 on the [0,1]
// intensity range. Statistics are taken over the jointly-valid pixels of
// each window; a pixel is invalid when it is itself invalid in either image
// or fewer than 4 window samples are available.
SsimMap ssim_map(const Image& a, const Image& b, int radius);

// Mean score over valid pixels; returns 0 with *count = 0 if none.
double mean_ssim(const SsimMap& map, std::size_t* count = nullptr);

}  // namespace mvsfuse
