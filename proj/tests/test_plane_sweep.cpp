#include <doctest.h>

#include <cmath>
#include <vector>

#include "mvsfuse/errors.hpp"
#include "mvsfuse/plane_sweep.hpp"
#include "mvsfuse/rng.hpp"
#include "mvsfuse/scene_synth.hpp"

using namespace mvsfuse;

namespace {

CameraIntrinsics test_k(int w, int h, double f) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = (w - 1) / 2.0;
  k.cy = (h - 1) / 2.0;
  k.width = w;
  k.height = h;
  return k;
}

// Three-camera lateral rig looking at a fronto-parallel noise plane.
Sequence plane_rig(double plane_z, double baseline, int w, int h, double f,
                   std::uint64_t seed) {
  SceneSpec spec;
  spec.intrinsics = test_k(w, h, f);
  spec.frames = 3;
  spec.seed = seed;
  spec.trajectory.assign(3, Pose::identity());
  spec.trajectory[0].translation = {-baseline, 0.0, 0.0};
  spec.trajectory[2].translation = {baseline, 0.0, 0.0};
  Primitive p;
  p.kind = Primitive::Kind::Plane;
  p.pose.translation = {0.0, 0.0, plane_z};
  p.size = {200.0, 200.0, 0.0};
  p.texture.kind = Texture::Kind::ValueNoise;
  p.texture.scale = 0.4;
  p.texture.octaves = 3;
  spec.primitives = {p};
  return generate(spec);
}

ProbabilityVolume random_probability_volume(int w, int h, int n_bins,
                                            Rng& rng) {
  CostVolume vol;
  vol.width = w;
  vol.height = h;
  vol.n_bins = n_bins;
  vol.cost.resize(static_cast<std::size_t>(w) * h * n_bins);
  vol.valid_count.assign(vol.cost.size(), 1);
  for (float& c : vol.cost) c = static_cast<float>(rng.uniform());
  return cost_to_probability(vol, 0.3);
}

}  // namespace

TEST_CASE("log-uniform hypothesis sampling") {
  SUBCASE("(1, 4, 3) gives {1, 2, 4}") {
    const HypothesisSet hyp = sample_hypotheses(1.0, 4.0, 3);
    REQUIRE(hyp.count() == 3);
    CHECK(hyp.bins[0] == 1.0);
    CHECK(hyp.bins[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(hyp.bins[2] == 4.0);
  }
  SUBCASE("degenerate single bin") {
    const HypothesisSet hyp = sample_hypotheses(2.0, 2.0, 1);
    REQUIRE(hyp.count() == 1);
    CHECK(hyp.bins[0] == 2.0);
  }
  SUBCASE("128 bins over [1, 256] have constant ratio 256^(1/127)") {
    const HypothesisSet hyp = sample_hypotheses(1.0, 256.0, 128);
    REQUIRE(hyp.count() == 128);
    CHECK(hyp.bins.front() == 1.0);
    CHECK(hyp.bins.back() == 256.0);
    const double expected = std::pow(256.0, 1.0 / 127.0);
    for (int k = 0; k + 1 < 128; ++k) {
      const double ratio = hyp.bins[k + 1] / hyp.bins[k];
      CHECK(std::abs(ratio - expected) < 1e-9);
    }
  }
  SUBCASE("invalid ranges throw") {
    CHECK_THROWS_AS(sample_hypotheses(0.0, 4.0, 3), InvalidRange);
    CHECK_THROWS_AS(sample_hypotheses(4.0, 1.0, 3), InvalidRange);
    CHECK_THROWS_AS(sample_hypotheses(1.0, 4.0, 1), InvalidRange);
    CHECK_THROWS_AS(sample_hypotheses(2.0, 2.0, 5), InvalidRange);
  }
}

TEST_CASE("matching the reference against itself gives zero cost") {
  const Sequence seq = plane_rig(5.0, 0.3, 64, 48, 150.0, 9);
  const Image& ref = seq.frames[1].image;
  const HypothesisSet hyp = sample_hypotheses(2.0, 10.0, 5);
  const CostVolume vol = build_cost_volume(
      ref, {ref}, {Pose::identity()}, seq.intrinsics, hyp,
      CostKind::SsdPatch, 1);
  for (int b = 0; b < vol.n_bins; ++b)
    for (int y = 1; y < vol.height - 1; ++y)
      for (int x = 1; x < vol.width - 1; ++x) {
        REQUIRE(vol.valid_count[vol.index(x, y, b)] == 1);
        CHECK(vol.cost[vol.index(x, y, b)] == 0.0f);
      }
}

TEST_CASE("cost volume argmin matches a brute-force oracle on a plane") {
  const double plane_z = 5.0;
  const Sequence seq = plane_rig(plane_z, 0.3, 100, 80, 250.0, 10);
  const CameraIntrinsics& k = seq.intrinsics;
  const Image& ref = seq.frames[1].image;
  const std::vector<Image> srcs = {seq.frames[0].image, seq.frames[2].image};
  const std::vector<Pose> rels = {
      relative_pose(seq.frames[1].cam_to_world, seq.frames[0].cam_to_world),
      relative_pose(seq.frames[1].cam_to_world, seq.frames[2].cam_to_world)};
  const HypothesisSet hyp = sample_hypotheses(4.0, 6.25, 3);
  CHECK(hyp.bins[1] == doctest::Approx(5.0).epsilon(1e-12));

  const CostVolume vol =
      build_cost_volume(ref, srcs, rels, k, hyp, CostKind::SsdPatch, 1);

  // Independent oracle: warp with the geometry primitives directly and
  // accumulate patch SSD per bin.
  std::size_t checked = 0, argmin_correct = 0, agree = 0;
  for (int y = 2; y < k.height - 2; y += 3) {
    for (int x = 2; x < k.width - 2; x += 3) {
      double oracle_cost[3];
      bool usable = true;
      for (int b = 0; b < 3 && usable; ++b) {
        double sum = 0.0;
        int n_src = 0;
        for (std::size_t s = 0; s < srcs.size(); ++s) {
          double patch = 0.0;
          bool ok = true;
          for (int dy = -1; dy <= 1 && ok; ++dy)
            for (int dx = -1; dx <= 1 && ok; ++dx) {
              const Eigen::Vector3d p = rels[s].apply(
                  unproject({double(x + dx), double(y + dy)}, hyp.bins[b], k));
              if (p.z() <= 0.0) {
                ok = false;
                break;
              }
              const Eigen::Vector2d uv = project(p, k);
              const auto sample = bilinear_sample(srcs[s], uv.x(), uv.y());
              if (!sample) {
                ok = false;
                break;
              }
              const double d = (*sample)[0] - ref.at(x + dx, y + dy);
              patch += d * d;
            }
          if (ok) {
            sum += patch / 9.0;
            ++n_src;
          }
        }
        if (n_src != 2) usable = false;
        oracle_cost[b] = n_src ? sum / n_src : 0.0;
      }
      if (!usable) continue;
      int oracle_arg = 0;
      for (int b = 1; b < 3; ++b)
        if (oracle_cost[b] < oracle_cost[oracle_arg]) oracle_arg = b;
      int impl_arg = 0;
      float best = vol.cost[vol.index(x, y, 0)];
      bool impl_ok = vol.valid_count[vol.index(x, y, 0)] == 2;
      for (int b = 1; b < 3; ++b) {
        impl_ok = impl_ok && vol.valid_count[vol.index(x, y, b)] == 2;
        if (vol.cost[vol.index(x, y, b)] < best) {
          best = vol.cost[vol.index(x, y, b)];
          impl_arg = b;
        }
      }
      if (!impl_ok) continue;
      ++checked;
      agree += impl_arg == oracle_arg;
      argmin_correct += impl_arg == 1;
      // Costs themselves agree with the oracle.
      for (int b = 0; b < 3; ++b)
        CHECK(vol.cost[vol.index(x, y, b)] ==
              doctest::Approx(oracle_cost[b]).epsilon(1e-4));
    }
  }
  REQUIRE(checked > 400);
  CHECK(static_cast<double>(agree) / checked == doctest::Approx(1.0));
  CHECK(static_cast<double>(argmin_correct) / checked >= 0.99);
}

TEST_CASE("textureless images give bin-constant cost") {
  const CameraIntrinsics k = test_k(40, 30, 100.0);
  Image flat(40, 30, 1, 0.5f);
  Pose rel;
  rel.translation = {0.1, 0.0, 0.0};
  const HypothesisSet hyp = sample_hypotheses(2.0, 8.0, 6);
  const CostVolume vol =
      build_cost_volume(flat, {flat}, {rel}, k, hyp, CostKind::SsdPatch, 1);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) {
      double ref_cost = -1.0;
      for (int b = 0; b < 6; ++b) {
        if (vol.valid_count[vol.index(x, y, b)] == 0) continue;
        if (ref_cost < 0.0) ref_cost = vol.cost[vol.index(x, y, b)];
        CHECK(std::abs(vol.cost[vol.index(x, y, b)] - ref_cost) < 1e-9);
      }
    }
}

TEST_CASE("cost volume input validation") {
  const CameraIntrinsics k = test_k(16, 16, 50.0);
  Image img(16, 16, 1, 0.5f);
  const HypothesisSet hyp = sample_hypotheses(1.0, 4.0, 3);
  CHECK_THROWS_AS(
      build_cost_volume(img, {}, {}, k, hyp, CostKind::SsdPatch, 1),
      NoSources);
  Image small(8, 8, 1, 0.5f);
  CHECK_THROWS_AS(build_cost_volume(img, {small}, {Pose::identity()}, k, hyp,
                                    CostKind::SsdPatch, 1),
                  DimensionMismatch);
}

TEST_CASE("aggregation") {
  CostVolume vol;
  vol.width = 9;
  vol.height = 9;
  vol.n_bins = 2;
  vol.cost.assign(9 * 9 * 2, 0.0f);
  vol.valid_count.assign(vol.cost.size(), 1);

  SUBCASE("radius 0 is identity") {
    vol.cost[vol.index(4, 4, 0)] = 9.0f;
    const CostVolume out = aggregate(vol, 0);
    CHECK(out.cost == vol.cost);
  }
  SUBCASE("constant volumes are unchanged") {
    for (float& c : vol.cost) c = 0.7f;
    const CostVolume out = aggregate(vol, 3);
    for (std::size_t i = 0; i < out.cost.size(); ++i)
      CHECK(out.cost[i] == doctest::Approx(0.7f).epsilon(1e-6));
  }
  SUBCASE("an impulse spreads to the box mean") {
    vol.cost[vol.index(4, 4, 0)] = 9.0f;
    const CostVolume out = aggregate(vol, 1);
    for (int y = 3; y <= 5; ++y)
      for (int x = 3; x <= 5; ++x)
        CHECK(out.cost[out.index(x, y, 0)] == doctest::Approx(1.0f));
    CHECK(out.cost[out.index(6, 4, 0)] == 0.0f);
    CHECK(out.cost[out.index(4, 4, 1)] == 0.0f);
  }
  SUBCASE("invalid cells do not contribute and stay invalid") {
    vol.valid_count[vol.index(4, 4, 0)] = 0;
    vol.cost[vol.index(4, 4, 0)] = 100.0f;
    vol.cost[vol.index(3, 4, 0)] = 8.0f;
    const CostVolume out = aggregate(vol, 1);
    CHECK(out.valid_count[out.index(4, 4, 0)] == 0);
    // 8 valid neighbors around (3,4) plus itself, the invalid cell excluded.
    CHECK(out.cost[out.index(3, 4, 0)] == doctest::Approx(1.0f));
  }
}

TEST_CASE("softmax probabilities") {
  SUBCASE("flat cost gives uniform probability") {
    CostVolume vol;
    vol.width = 4;
    vol.height = 3;
    vol.n_bins = 8;
    vol.cost.assign(4 * 3 * 8, 0.25f);
    vol.valid_count.assign(vol.cost.size(), 1);
    const ProbabilityVolume p = cost_to_probability(vol, 0.7);
    for (std::size_t i = 0; i < p.p.size(); ++i)
      CHECK(p.p[i] == doctest::Approx(1.0 / 8.0).epsilon(1e-6));
  }
  SUBCASE("winning bin mass matches the closed form") {
    const int n = 16;
    CostVolume vol;
    vol.width = 1;
    vol.height = 1;
    vol.n_bins = n;
    vol.cost.assign(n, 10.0f);
    vol.cost[5] = 0.0f;
    vol.valid_count.assign(n, 1);
    const ProbabilityVolume p = cost_to_probability(vol, 1.0);
    const double expected = 1.0 / (1.0 + (n - 1) * std::exp(-10.0));
    CHECK(p.p[5] == doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("probabilities sum to one on random volumes") {
    Rng rng(31);
    const ProbabilityVolume p = random_probability_volume(7, 5, 24, rng);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) {
        double sum = 0.0;
        for (int b = 0; b < 24; ++b) sum += p.p[p.index(x, y, b)];
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
  }
  SUBCASE("bins without support are excluded") {
    CostVolume vol;
    vol.width = 1;
    vol.height = 1;
    vol.n_bins = 4;
    vol.cost.assign(4, 0.0f);
    vol.valid_count.assign(4, 1);
    vol.valid_count[2] = 0;
    const ProbabilityVolume p = cost_to_probability(vol, 1.0);
    CHECK(p.p[2] == 0.0f);
    CHECK(p.p[0] == doctest::Approx(1.0 / 3.0));
    // A pixel with no valid bin at all is invalid.
    vol.valid_count.assign(4, 0);
    const ProbabilityVolume q = cost_to_probability(vol, 1.0);
    CHECK_FALSE(q.pixel_valid[0]);
  }
  SUBCASE("non-positive temperature throws") {
    CostVolume vol;
    vol.width = 1;
    vol.height = 1;
    vol.n_bins = 2;
    vol.cost.assign(2, 0.0f);
    vol.valid_count.assign(2, 1);
    CHECK_THROWS_AS(cost_to_probability(vol, 0.0), NonPositiveTemperature);
    CHECK_THROWS_AS(cost_to_probability(vol, -1.0), NonPositiveTemperature);
  }
}

TEST_CASE("soft-argmin depth regression") {
  SUBCASE("one-hot distribution returns the bin depth") {
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = 3;
    p.p = {0.0f, 1.0f, 0.0f};
    p.valid_count.assign(3, 1);
    p.pixel_valid = {1};
    const HypothesisSet hyp = sample_hypotheses(1.0, 4.0, 3);
    const DepthMap d = regress_depth(p, hyp);
    CHECK(d.at(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("explicit weighted sum") {
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = 3;
    p.p = {0.5f, 0.0f, 0.5f};
    p.valid_count.assign(3, 1);
    p.pixel_valid = {1};
    const HypothesisSet hyp = sample_hypotheses(1.0, 4.0, 3);
    const DepthMap d = regress_depth(p, hyp);
    CHECK(d.at(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("brute-force oracle and range invariant on random volumes") {
    Rng rng(33);
    const HypothesisSet hyp = sample_hypotheses(0.8, 60.0, 24);
    for (int trial = 0; trial < 100; ++trial) {
      const ProbabilityVolume p = random_probability_volume(5, 4, 24, rng);
      const DepthMap d = regress_depth(p, hyp);
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
          double expected = 0.0;
          for (int b = 0; b < 24; ++b)
            expected += hyp.bins[b] * static_cast<double>(p.p[p.index(x, y, b)]);
          // The map stores single precision; the regression arithmetic is
          // checked at that storage precision.
          CHECK(std::abs(static_cast<double>(d.at(x, y)) -
                         static_cast<double>(static_cast<float>(expected))) <
                1e-9 * 60.0);
          CHECK(d.at(x, y) >= hyp.d_min - 1e-9);
          CHECK(d.at(x, y) <= hyp.d_max + 1e-9);
        }
    }
  }
  SUBCASE("bin count mismatch throws") {
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = 3;
    p.p.assign(3, 0.33f);
    p.valid_count.assign(3, 1);
    p.pixel_valid = {1};
    CHECK_THROWS_AS(regress_depth(p, sample_hypotheses(1.0, 4.0, 5)),
                    DimensionMismatch);
  }
}

TEST_CASE("matching confidence") {
  SUBCASE("one-hot distribution is fully confident") {
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = 5;
    p.p = {0.0f, 0.0f, 1.0f, 0.0f, 0.0f};
    p.valid_count.assign(5, 1);
    p.pixel_valid = {1};
    const ConfidenceMap m = matching_confidence(p, 1);
    CHECK(m.at(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("near-uniform distribution with interior argmax gives ~3/N") {
    const int n = 20;
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = n;
    p.p.assign(n, 1.0f / n);
    p.p[10] += 1e-4f;  // pin the argmax to an interior bin
    p.valid_count.assign(n, 1);
    p.pixel_valid = {1};
    const ConfidenceMap m = matching_confidence(p, 1);
    CHECK(m.at(0, 0) == doctest::Approx(3.0 / n).epsilon(1e-2));
  }
  SUBCASE("window 0 is just the argmax mass") {
    ProbabilityVolume p;
    p.width = 1;
    p.height = 1;
    p.n_bins = 4;
    p.p = {0.1f, 0.6f, 0.2f, 0.1f};
    p.valid_count.assign(4, 1);
    p.pixel_valid = {1};
    const ConfidenceMap m = matching_confidence(p, 0);
    CHECK(m.at(0, 0) == doctest::Approx(0.6));
  }
}

TEST_CASE("multi-view depth on a textured plane is one-bin accurate") {
  const double plane_z = 5.0;
  const Sequence seq = plane_rig(plane_z, 0.3, 160, 120, 180.0, 12);
  SweepConfig cfg;
  cfg.d_min = 2.0;
  cfg.d_max = 20.0;
  cfg.n_bins = 64;
  const std::vector<Pose> rels = {
      relative_pose(seq.frames[1].cam_to_world, seq.frames[0].cam_to_world),
      relative_pose(seq.frames[1].cam_to_world, seq.frames[2].cam_to_world)};
  const MultiViewResult mv = multi_view_depth(
      seq.frames[1].image, {seq.frames[0].image, seq.frames[2].image}, rels,
      seq.intrinsics, cfg);

  const double spacing = mv.hypotheses.local_spacing(plane_z);
  std::size_t n = 0, good = 0;
  for (int y = 16; y < 120 - 16; ++y)
    for (int x = 16; x < 160 - 16; ++x) {
      if (!mv.d_m.is_valid(x, y)) continue;
      ++n;
      good += std::abs(mv.d_m.at(x, y) - plane_z) <= spacing;
    }
  REQUIRE(n > 5000);
  CHECK(static_cast<double>(good) / n >= 0.95);

  // Matching confidence dwarfs the textureless analogue: the same rig with
  // uniform walls leaves the distribution near-flat.
  auto mean_conf = [](const ConfidenceMap& m) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (int y = 16; y < m.height - 16; ++y)
      for (int x = 16; x < m.width - 16; ++x)
        if (m.is_valid(x, y)) {
          sum += m.at(x, y);
          ++cnt;
        }
    return sum / static_cast<double>(cnt);
  };
  const double textured_conf = mean_conf(mv.m_m);

  Image flat(160, 120, 1, 0.5f);
  const MultiViewResult mv_flat = multi_view_depth(
      flat, {flat, flat}, rels, seq.intrinsics, cfg);
  const double flat_conf = mean_conf(mv_flat.m_m);
  CHECK(textured_conf > 0.35);
  CHECK(flat_conf < 0.1);
  CHECK(textured_conf > 5.0 * flat_conf);
}

TEST_CASE("identity-pose setting collapses to the distribution mean") {
  const Sequence seq = plane_rig(5.0, 0.3, 160, 120, 180.0, 13);
  SweepConfig cfg;
  cfg.d_min = 2.0;
  cfg.d_max = 20.0;
  cfg.n_bins = 64;
  const Image& ref = seq.frames[1].image;
  const MultiViewResult mv =
      multi_view_depth(ref, {ref, ref}, {Pose::identity(), Pose::identity()},
                       seq.intrinsics, cfg);
  // Flat costs: depth near the mean of the bins, confidence collapses.
  double bin_mean = 0.0;
  for (double b : mv.hypotheses.bins) bin_mean += b;
  bin_mean /= mv.hypotheses.count();
  double mm_sum = 0.0;
  std::size_t mm_n = 0;
  for (int y = 8; y < 112; ++y)
    for (int x = 8; x < 152; ++x) {
      if (mv.d_m.is_valid(x, y))
        CHECK(mv.d_m.at(x, y) == doctest::Approx(bin_mean).epsilon(0.02));
      if (mv.m_m.is_valid(x, y)) {
        mm_sum += mv.m_m.at(x, y);
        ++mm_n;
      }
    }
  REQUIRE(mm_n > 1000);
  CHECK(mm_sum / mm_n < 0.2);
}

TEST_CASE("vanishing temperature recovers the argmin bin") {
  SUBCASE("constructed volumes with a clear margin") {
    Rng rng(41);
    const HypothesisSet hyp = sample_hypotheses(1.0, 50.0, 32);
    CostVolume vol;
    vol.width = 6;
    vol.height = 4;
    vol.n_bins = 32;
    vol.cost.resize(6 * 4 * 32);
    vol.valid_count.assign(vol.cost.size(), 1);
    std::vector<int> argmin(6 * 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x) {
        const int target = static_cast<int>(rng.below(32));
        argmin[y * 6 + x] = target;
        for (int b = 0; b < 32; ++b)
          vol.cost[vol.index(x, y, b)] =
              b == target ? 0.0f
                          : static_cast<float>(0.05 + rng.uniform());
      }
    const ProbabilityVolume p = cost_to_probability(vol, 1e-3);
    const DepthMap d = regress_depth(p, hyp);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x) {
        const double bin = hyp.bins[static_cast<std::size_t>(argmin[y * 6 + x])];
        CHECK(std::abs(d.at(x, y) - bin) < hyp.local_spacing(bin));
      }
  }
  SUBCASE("real matching volume") {
    const Sequence seq = plane_rig(5.0, 0.3, 80, 64, 120.0, 14);
    const HypothesisSet hyp = sample_hypotheses(2.0, 20.0, 48);
    const std::vector<Pose> rels = {
        relative_pose(seq.frames[1].cam_to_world, seq.frames[0].cam_to_world),
        relative_pose(seq.frames[1].cam_to_world, seq.frames[2].cam_to_world)};
    const CostVolume vol =
        build_cost_volume(seq.frames[1].image,
                          {seq.frames[0].image, seq.frames[2].image}, rels,
                          seq.intrinsics, hyp, CostKind::SsdPatch, 1);
    const ProbabilityVolume p = cost_to_probability(vol, 1e-3);
    const DepthMap d = regress_depth(p, hyp);
    for (int y = 4; y < 60; y += 5)
      for (int x = 4; x < 76; x += 5) {
        // Find the argmin and its margin over the runner-up.
        int best = -1;
        double c0 = 0.0, c1 = 0.0;
        for (int b = 0; b < 48; ++b) {
          if (vol.valid_count[vol.index(x, y, b)] == 0) continue;
          const double c = vol.cost[vol.index(x, y, b)];
          if (best < 0 || c < c0) {
            c1 = best < 0 ? c : c0;
            c0 = c;
            best = b;
          } else if (c < c1) {
            c1 = c;
          }
        }
        if (best < 0) continue;
        // Margin large against the temperature; 20 * T makes the tail mass
        // negligible.
        if (c1 - c0 < 0.02) continue;
        const double bin = hyp.bins[static_cast<std::size_t>(best)];
        CHECK(std::abs(d.at(x, y) - bin) < hyp.local_spacing(bin));
      }
  }
}

TEST_CASE("ncc cost is shift invariant under brightness offsets") {
  const Sequence seq = plane_rig(5.0, 0.3, 64, 48, 120.0, 15);
  const CameraIntrinsics& k = seq.intrinsics;
  Image brightened = seq.frames[0].image;
  for (float& v : brightened.data) v = std::min(1.0f, v * 0.8f + 0.15f);
  const std::vector<Pose> rels = {
      relative_pose(seq.frames[1].cam_to_world, seq.frames[0].cam_to_world)};
  const HypothesisSet hyp = sample_hypotheses(4.0, 6.25, 3);
  const CostVolume vol =
      build_cost_volume(seq.frames[1].image, {brightened}, rels, k, hyp,
                        CostKind::NccPatch, 2);
  // The correct bin still wins for most interior pixels.
  std::size_t n = 0, correct = 0;
  for (int y = 4; y < 44; ++y)
    for (int x = 4; x < 60; ++x) {
      int best = -1;
      float c0 = 0.0f;
      bool all_valid = true;
      for (int b = 0; b < 3; ++b) {
        if (vol.valid_count[vol.index(x, y, b)] == 0) {
          all_valid = false;
          break;
        }
        const float c = vol.cost[vol.index(x, y, b)];
        if (best < 0 || c < c0) {
          c0 = c;
          best = b;
        }
      }
      if (!all_valid) continue;
      ++n;
      correct += best == 1;
    }
  REQUIRE(n > 1000);
  CHECK(static_cast<double>(correct) / n >= 0.95);
}
