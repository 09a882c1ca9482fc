#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "mvsfuse/image.hpp"

namespace mvsfuse {

// Single-view depth prior with per-pixel confidence. The depth may carry an
// unresolved global scale until align_scale has run.
struct PriorDepth {
  DepthMap depth;
  ConfidenceMap confidence;
  bool scale_resolved = false;
};

struct SynthPriorSpec {
  double scale = 1.0;            // global scale factor, > 0
  double smooth_err_amp = 0.0;   // relative amplitude of the error field
  double smooth_err_scale = 24;  // error field correlation length, pixels
  std::uint64_t seed = 0;
};

// Emulates a monocular network from ground truth: correct structure, global
// scale error, smooth local error. depth = gt * scale * (1 + f) with a
// seeded band-limited field |f| <= smooth_err_amp; confidence is
// 1 - |f| / smooth_err_amp. Deterministic by seed.
PriorDepth synth_prior(const DepthMap& gt, const SynthPriorSpec& spec);

// Median-ratio scale alignment against anchor pixels whose confidence is at
// least conf_threshold. Needs at least 100 qualifying pixels.
PriorDepth align_scale(const PriorDepth& prior, const DepthMap& anchor,
                       const ConfidenceMap& anchor_conf,
                       double conf_threshold);

// Loads a prior from PFM files; confidence defaults to a uniform 0.5 when no
// confidence file is given. scale_resolved starts false.
PriorDepth load_prior(const std::filesystem::path& depth_pfm,
                      const std::optional<std::filesystem::path>&
                          confidence_pfm = std::nullopt);

}  // namespace mvsfuse
