#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvsfuse/geometry.hpp"
#include "mvsfuse/image.hpp"

namespace mvsfuse {

// Depth hypotheses, log-uniform from d_min to d_max.
struct HypothesisSet {
  std::vector<double> bins;
  double d_min = 0.0;
  double d_max = 0.0;

  int count() const { return static_cast<int>(bins.size()); }
  // bins[k+1] - bins[k] around the bin nearest to depth d.
  double local_spacing(double d) const;
};

// bins[k] = exp(log d_min + k * (log d_max - log d_min) / (n - 1)).
// n = 1 is allowed only for d_min == d_max.
HypothesisSet sample_hypotheses(double d_min, double d_max, int n);

// Per-pixel-per-bin matching cost. valid_count tracks how many source views
// contributed to each cell; cells with valid_count 0 carry no information.
struct CostVolume {
  int width = 0;
  int height = 0;
  int n_bins = 0;
  std::vector<float> cost;                 // bin-major slices
  std::vector<std::uint16_t> valid_count;  // same layout

  std::size_t index(int x, int y, int bin) const {
    return (static_cast<std::size_t>(bin) * height + y) * width + x;
  }
};

// Per-pixel distribution over bins; sums to 1 over bins with valid_count > 0
// wherever pixel_valid.
struct ProbabilityVolume {
  int width = 0;
  int height = 0;
  int n_bins = 0;
  std::vector<float> p;                    // bin-major slices
  std::vector<std::uint16_t> valid_count;  // copied from the cost volume
  std::vector<std::uint8_t> pixel_valid;   // any valid bin

  std::size_t index(int x, int y, int bin) const {
    return (static_cast<std::size_t>(bin) * height + y) * width + x;
  }
  std::size_t pixel_index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

enum class CostKind { SsdPatch, NccPatch };

// Plane sweep: for every hypothesis depth each source is warped with a
// constant reference depth (fronto-parallel plane) and patch costs against
// the reference are averaged over the sources whose full (2r+1)^2 patch is
// valid. Inputs are at processing resolution with intrinsics already scaled.
CostVolume build_cost_volume(const Image& ref, const std::vector<Image>& srcs,
                             const std::vector<Pose>& rel_poses,
                             const CameraIntrinsics& k,
                             const HypothesisSet& hyp, CostKind cost,
                             int patch_radius);

// Per-bin spatial box mean over cells with valid_count > 0; radius 0 returns
// the input unchanged. Cell validity is preserved, never widened.
CostVolume aggregate(const CostVolume& volume, int radius);

// Softmax of -cost/temperature per pixel over the valid bins.
ProbabilityVolume cost_to_probability(const CostVolume& volume,
                                      double temperature);

// Scale-free temperature: 0.05 * mean cost over valid cells.
double auto_temperature(const CostVolume& volume);

// Soft-argmin depth: per-pixel probability-weighted sum of bin depths.
DepthMap regress_depth(const ProbabilityVolume& p, const HypothesisSet& hyp);

// Probability mass within +-window bins of the per-pixel argmax.
ConfidenceMap matching_confidence(const ProbabilityVolume& p, int window);

struct SweepConfig {
  double d_min = 1.0;
  double d_max = 100.0;
  int n_bins = 128;
  CostKind cost = CostKind::SsdPatch;
  int patch_radius = 1;
  int aggregate_radius = 2;
  std::optional<double> temperature;  // nullopt = auto
  int window = 1;
};

struct MultiViewResult {
  DepthMap d_m;             // full input resolution
  ConfidenceMap m_m;        // full input resolution
  ProbabilityVolume prob;   // processing (quarter) resolution
  HypothesisSet hypotheses;
};

// Full multi-view branch: quarter-resolution sweep, box aggregation,
// softmax, soft-argmin, matching confidence, bilinear upsample back to the
// input resolution. Image dimensions must be divisible by 4.
MultiViewResult multi_view_depth(const Image& ref,
                                 const std::vector<Image>& srcs,
                                 const std::vector<Pose>& rel_poses,
                                 const CameraIntrinsics& k,
                                 const SweepConfig& config);

}  // namespace mvsfuse
