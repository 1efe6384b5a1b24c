// Copyright 2026 The glicnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "glicnn/backbones.hpp"
#include "glicnn/errors.hpp"
#include "glicnn/patch_grid.hpp"
#include "glicnn/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace glicnn::backbone {
namespace {

Volume random_volume(Extent3 shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  Volume v;
  v.shape = shape;
  v.voxels.resize(shape.voxels());
  for (float& x : v.voxels) x = u(rng);
  return v;
}

BackboneConfig tiny_config() {
  BackboneConfig c;
  c.global_stem_channels = 4;
  c.global_growth = 2;
  c.global_transition_channels = 4;
  c.local_channels1 = 3;
  c.local_channels2 = 4;
  c.fc_hidden = 5;
  return c;
}

TEST(PatchGridTest, EightPatchesOnA32Cube) {
  PatchGrid grid({32, 32, 32}, {16, 16, 16});
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid.counts(), (Extent3{2, 2, 2}));
  for (const auto& o : grid.origins()) {
    EXPECT_TRUE(o.d == 0 || o.d == 16);
    EXPECT_TRUE(o.h == 0 || o.h == 16);
    EXPECT_TRUE(o.w == 0 || o.w == 16);
  }
  EXPECT_EQ(grid.origins()[5], (Extent3{16, 0, 16}));
  EXPECT_EQ(grid.name(5), "patch_1_0_1");
  EXPECT_EQ(grid.patch_of(20, 3, 31), 5u);
}

TEST(PatchGridTest, NonDivisibleShapeIsAConfigError) {
  EXPECT_THROW(PatchGrid({32, 32, 32}, {15, 15, 15}), ConfigError);
  EXPECT_THROW(PatchGrid({32, 32, 32}, {16, 16, 0}), ConfigError);
}

TEST(PatchGridTest, ReassemblyIsBitwiseEqual) {
  PatchGrid grid({8, 12, 16}, {4, 6, 8});
  const Volume v = random_volume({8, 12, 16}, 3);
  const auto patches = extract_patches(v, grid);
  ASSERT_EQ(patches.size(), 8u);
  const Volume back = assemble_patches(patches, grid);
  EXPECT_EQ(back.shape, v.shape);
  EXPECT_EQ(back.voxels, v.voxels);
}

TEST(PatchGridTest, PatchesAreADisjointExactCover) {
  PatchGrid grid({8, 8, 12}, {4, 4, 4});
  std::vector<int> hits(8 * 8 * 12, 0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto& o = grid.origins()[p];
    for (std::size_t z = 0; z < 4; ++z)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) ++hits[((o.d + z) * 8 + o.h + y) * 12 + o.w + x];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(PatchGridTest, ShapeMismatchIsRejected) {
  PatchGrid grid({8, 8, 8}, {4, 4, 4});
  EXPECT_THROW(extract_patches(random_volume({8, 8, 4}, 1), grid), ShapeError);
}

TEST(PatchGridTest, NamesFromJson) {
  PatchGrid grid({8, 8, 8}, {4, 4, 4});
  grid.apply_names_json(R"({"0": "hippocampus_l", "7": "amygdala_r"})");
  EXPECT_EQ(grid.name(0), "hippocampus_l");
  EXPECT_EQ(grid.name(7), "amygdala_r");
  EXPECT_EQ(grid.name(1), "patch_0_0_1");
  EXPECT_THROW(grid.apply_names_json(R"({"8": "x"})"), ConfigError);
  EXPECT_THROW(grid.apply_names_json("[1,2]"), ConfigError);

  testing::TempDir dir;
  {
    std::ofstream(dir / "names.json") << grid.names_json();
  }
  PatchGrid other({8, 8, 8}, {4, 4, 4});
  other.load_names(dir / "names.json");
  EXPECT_EQ(other.names(), grid.names());
}

TEST(BackboneSetTest, ZeroVolumeGivesZeroFeatures) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 1);
  EXPECT_EQ(set.feature_count(), 9u);
  Volume v;
  v.shape = {16, 16, 16};
  v.voxels.assign(v.shape.voxels(), 0.0f);
  for (double x : forward_features(set, v).values) EXPECT_EQ(x, 0.0);
}

TEST(BackboneSetTest, DeterministicForSameSeedAndVolume) {
  const BackboneSet a(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 5);
  const BackboneSet b(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 5);
  const Volume v = random_volume({16, 16, 16}, 2);
  const auto fa = forward_features(a, v);
  EXPECT_EQ(fa.values, forward_features(a, v).values);
  EXPECT_EQ(fa.values, forward_features(b, v).values);
  for (double x : fa.values) EXPECT_TRUE(std::isfinite(x));
}

TEST(BackboneSetTest, LocalBackbonesAreIndependentUnlessShared) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 5);
  EXPECT_EQ(set.distinct_local_count(), 8u);
  EXPECT_NE(set.local(0).parameters()[0].value, set.local(1).parameters()[0].value);
  auto shared_cfg = tiny_config();
  shared_cfg.share_local_weights = true;
  BackboneSet shared(PatchGrid({16, 16, 16}, {8, 8, 8}), shared_cfg, 5);
  EXPECT_EQ(shared.distinct_local_count(), 1u);
  EXPECT_EQ(&shared.local(3), &shared.local(0));
}

TEST(BackboneSetTest, SwappingPatchesSwapsLocalFeaturesWhenWeightsAreCopies) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 7);
  set.copy_first_local_to_all();
  const Volume v = random_volume({16, 16, 16}, 4);
  auto patches = extract_patches(v, set.grid());
  std::swap(patches[2].voxels, patches[6].voxels);
  const Volume swapped = assemble_patches(patches, set.grid());
  const auto f = forward_features(set, v).values;
  const auto g = forward_features(set, swapped).values;
  for (std::size_t p = 0; p < 8; ++p) {
    const std::size_t q = p == 2 ? 6 : p == 6 ? 2 : p;
    EXPECT_EQ(g[1 + p], f[1 + q]) << "patch " << p;
  }
}

TEST(BackboneSetTest, EditingOnePatchOnlyMovesItsFeatureAndTheGlobalOne) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 8);
  const Volume v = random_volume({16, 16, 16}, 5);
  const auto base = forward_features(set, v).values;
  for (std::size_t j = 0; j < set.grid().size(); ++j) {
    Volume w = v;
    const auto& o = set.grid().origins()[j];
    for (std::size_t z = 0; z < 8; ++z)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) w.at(o.d + z, o.h + y, o.w + x) += 0.5f;
    const auto f = forward_features(set, w).values;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i == 0 || i == j + 1) continue;
      EXPECT_EQ(f[i], base[i]) << "feature " << i << " moved after editing patch " << j;
    }
    EXPECT_NE(f[j + 1], base[j + 1]);
  }
}

TEST(BackboneSetTest, ShapeMismatchIsRejected) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 1);
  EXPECT_THROW(forward_features(set, random_volume({16, 16, 8}, 1)), ShapeError);
}

TEST(BackboneSetTest, PatchExtentsMustAllowTwoPoolings) {
  EXPECT_THROW(BackboneSet(PatchGrid({12, 12, 12}, {6, 6, 6}), tiny_config(), 1), ConfigError);
}

TEST(FeatureTraceTest, MatchesForwardAndReachesEveryBackbone) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 9);
  const Volume v = random_volume({16, 16, 16}, 6);
  auto trace = trace_features(set, v);
  const auto f = forward_features(set, v).values;
  ASSERT_EQ(trace.features().size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(trace.features()[i], f[i], 1e-5 * (1 + std::abs(f[i])));

  std::vector<nn::Tensor> grads;
  const std::vector<double> ones(f.size(), 1.0);
  trace.backward(ones, grads);
  const auto params = set.parameters();
  ASSERT_EQ(grads.size(), params.size());
  auto nonzero = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t)
      for (float g : grads[t].values())
        if (g != 0.0f) return true;
    return false;
  };
  EXPECT_TRUE(nonzero(0, set.parameter_offset_of_local(0))) << "global backbone";
  for (std::size_t j = 0; j < 8; ++j) {
    const std::size_t end = j + 1 < 8 ? set.parameter_offset_of_local(j + 1) : params.size();
    EXPECT_TRUE(nonzero(set.parameter_offset_of_local(j), end)) << "local backbone " << j;
  }
}

TEST(FeatureTraceTest, GradientMatchesFiniteDifferenceOfForward) {
  BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 10);
  const Volume v = random_volume({16, 16, 16}, 7);
  auto trace = trace_features(set, v);
  std::vector<double> coeff(set.feature_count());
  for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] = 0.3 + 0.1 * static_cast<double>(i);
  std::vector<nn::Tensor> grads;
  trace.backward(coeff, grads);

  auto objective = [&](const BackboneSet& s) {
    const auto f = forward_features(s, v).values;
    double o = 0;
    for (std::size_t i = 0; i < f.size(); ++i) o += coeff[i] * f[i];
    return o;
  };
  // A handful of weights in the global and the first local backbone.
  std::mt19937_64 rng(3);
  const std::size_t tensors[] = {0, 1, set.parameter_offset_of_local(0), set.parameter_offset_of_local(0) + 2};
  for (std::size_t t : tensors) {
    for (int trial = 0; trial < 3; ++trial) {
      BackboneSet plus = set, minus = set;
      const std::size_t i = rng() % grads[t].size();
      const float h = 1e-2f;
      plus.parameters()[t]->value[i] += h;
      minus.parameters()[t]->value[i] -= h;
      const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
      EXPECT_NEAR(grads[t][i], fd, 2e-2 * std::max(1.0, std::abs(fd))) << "tensor " << t << " element " << i;
    }
  }
}

TEST(DenseHeadTest, ZeroFeaturesWithZeroBiasGiveHalfProbability) {
  DenseHead head(HeadKind::fully_connected, 9, 6, 3);
  const std::vector<double> zeros(9, 0.0);
  EXPECT_EQ(head.forward(zeros), 0.0);
}

TEST(DenseHeadTest, IdentityLinearUnitReturnsTheFeature) {
  DenseHead head(HeadKind::linear, 1, 1, 3);
  head.parameters()[0].value[0] = 1.0f;
  const std::vector<double> x{0.625};
  EXPECT_EQ(head.forward(x), 0.625);
  const std::vector<double> wrong(2, 0.0);
  EXPECT_THROW(head.forward(wrong), ShapeError);
}

TEST(DenseHeadTest, GlcnnLogitIsReproducible) {
  const BackboneSet set(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 11);
  const DenseHead head(HeadKind::fully_connected, set.feature_count(), 5, 11);
  const Volume v = random_volume({16, 16, 16}, 8);
  const double a = glcnn_forward(set, head, v);
  const BackboneSet set2(PatchGrid({16, 16, 16}, {8, 8, 8}), tiny_config(), 11);
  const DenseHead head2(HeadKind::fully_connected, set2.feature_count(), 5, 11);
  EXPECT_EQ(a, glcnn_forward(set2, head2, v));
  EXPECT_TRUE(std::isfinite(a));
}

}  // namespace
}  // namespace glicnn::backbone
