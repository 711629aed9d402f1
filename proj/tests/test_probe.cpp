#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "pimns/errors.hpp"
#include "pimns/probe.hpp"

namespace pimns {
namespace {

std::size_t naive_count(const std::vector<float>& v) {
  std::size_t n = 0;
  for (float x : v) {
    if (std::signbit(x) || x == 0.0f) continue;
    ++n;
  }
  return n;
}

TEST(CountActivated, ZerosOfEitherSignAreNotActivated) {
  const std::vector<float> v{0.0f, -0.0f, 1e-30f, -1e-30f, std::numeric_limits<float>::denorm_min(), 3.0f};
  EXPECT_EQ(count_activated(v), 3u);
}

TEST(CountActivated, AgreesWithNaiveRecountOnRandomVectors) {
  std::mt19937_64 rng(21);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::uniform_int_distribution<int> coin(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> v(1 + trial % 97);
    for (auto& x : v) {
      const int c = coin(rng);
      x = c == 0 ? 0.0f : c == 1 ? -0.0f : g(rng);
    }
    EXPECT_EQ(count_activated(v), naive_count(v));
  }
}

TEST(CountActivated, RejectsNonFinite) {
  const std::vector<float> v{1.0f, std::numeric_limits<float>::quiet_NaN()};
  EXPECT_THROW(count_activated(v), InvalidValueError);
}

TEST(Accumulator, IgnoresPromptAndCountsGenerationSteps) {
  ActivationAccumulator acc(2, 3);
  const std::vector<float> a{1.0f, -1.0f, 0.0f}, b{0.5f, 0.5f, -0.0f};
  EXPECT_FALSE(acc.ingest(0, a, Phase::Prompt));
  auto r0 = acc.ingest(0, a, Phase::Generation);
  auto r1 = acc.ingest(1, b, Phase::Generation);
  ASSERT_TRUE(r0 && r1);
  EXPECT_EQ(r0->activated, 1u);
  EXPECT_EQ(r1->activated, 2u);
  EXPECT_EQ(r1->total, 3u);
  EXPECT_EQ(acc.generated_tokens(), 1);
  EXPECT_EQ(acc.record_count(), 2);
  EXPECT_EQ(acc.activated_sum(), 3);
  EXPECT_EQ(acc.count(0, 0), 1);
  EXPECT_EQ(acc.count(1, 1), 1);
  EXPECT_EQ(acc.count(0, 2), 0);
}

TEST(Accumulator, RejectsWrongShapeAndLayer) {
  ActivationAccumulator acc(2, 3);
  const std::vector<float> two{1.0f, 2.0f}, three{1.0f, 2.0f, 3.0f};
  EXPECT_THROW(acc.ingest(0, two, Phase::Generation), ShapeError);
  EXPECT_THROW(acc.ingest(2, three, Phase::Generation), ConfigError);
}

ActivationAccumulator random_acc(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  ActivationAccumulator acc(3, 16);
  std::vector<float> v(16);
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t l = 0; l < 3; ++l) {
      for (auto& x : v) x = g(rng);
      acc.ingest(l, v, Phase::Generation);
    }
  return acc;
}

TEST(Accumulator, MergeIsAssociativeCommutativeWithIdentity) {
  const auto a = random_acc(1, 4), b = random_acc(2, 5), c = random_acc(3, 6);
  EXPECT_EQ(merge(a, b), merge(b, a));
  EXPECT_EQ(merge(merge(a, b), c), merge(a, merge(b, c)));
  EXPECT_EQ(merge(ActivationAccumulator{}, a), a);
  EXPECT_EQ(merge(a, ActivationAccumulator{}), a);
  EXPECT_THROW(merge(a, ActivationAccumulator(2, 16)), ConfigError);
}

TEST(Accumulator, ProportionMatchesTotalsAndStaysInRange) {
  const auto acc = random_acc(9, 10);
  const ActivationSummary s = summarize(acc);
  EXPECT_DOUBLE_EQ(s.proportion, 100.0 * double(acc.activated_sum()) / double(10 * 3 * 16));
  EXPECT_GE(s.proportion, 0.0);
  EXPECT_LE(s.proportion, 100.0);
  double mean = 0;
  for (double p : s.layer_proportions) mean += p / 3.0;
  EXPECT_NEAR(mean, s.proportion, 1e-9);
  for (auto c : acc.counts()) EXPECT_LE(c, acc.generated_tokens());
}

TEST(Summary, EmptyRunIsAnError) { EXPECT_THROW(summarize(ActivationAccumulator(2, 4)), EmptyRunError); }

TEST(Summary, RankingSortsByCountThenId) {
  const auto acc = ActivationAccumulator::from_counts(2, 3, {5, 1, 5, 0, 7, 1}, 20, 10);
  const auto s = summarize(acc);
  const std::vector<RankedNeuron> expect{{{1, 1}, 7}, {{0, 0}, 5}, {{0, 2}, 5}, {{0, 1}, 1}, {{1, 2}, 1}, {{1, 0}, 0}};
  EXPECT_EQ(s.ranking, expect);
}

TEST(TopFraction, TakesCeilingAndValidatesFraction) {
  const auto s = summarize(random_acc(4, 3));  // 48 neurons
  EXPECT_EQ(top_fraction(s, 0.01).size(), 1u);
  EXPECT_EQ(top_fraction(s, 0.5).size(), 24u);
  EXPECT_EQ(top_fraction(s, 1.0).size(), 48u);
  EXPECT_EQ(top_fraction(s, 0.1).size(), 5u);  // ceil(4.8)
  EXPECT_THROW(top_fraction(s, 0.0), ArgumentError);
  EXPECT_THROW(top_fraction(s, 1.5), ArgumentError);
}

TEST(Heatmap, MatchesCounts) {
  const auto acc = random_acc(5, 2);
  const auto h = layer_heatmap(acc);
  ASSERT_EQ(h.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t n = 0; n < 16; ++n) EXPECT_EQ(h[l][n], acc.count(l, n));
}

TEST(Probe, GeneratedTokensEqualEmittedTokens) {
  const ModelBundle b = init_random(micro_config(), 4);
  ActivationAccumulator acc(2, 64);
  AccumulatorSink sink(acc);
  GenerationParams p;
  p.max_new_tokens = 9;
  const auto r = generate(b, "Das ist ein Test.", p, &sink);
  EXPECT_EQ(acc.generated_tokens(), static_cast<std::int64_t>(r.generated_ids.size()));
  EXPECT_EQ(acc.record_count(), 2 * 9);
}

ModelBundle micro(ActivationKind k, std::uint64_t seed) {
  ModelConfig c = micro_config();
  c.activation = k;
  return init_random(c, seed);
}

TEST(Prune, ReluIsExactlyUnchanged) {
  GenerationParams p;
  p.max_new_tokens = 16;
  const PruneReport r = prune_and_compare(micro(ActivationKind::ReLU, 2), "Hello world", p);
  ASSERT_EQ(r.steps.size(), 16u);
  EXPECT_EQ(r.tail_bound, 0.0);
  for (const auto& s : r.steps) {
    EXPECT_EQ(s.logit_delta, 0.0);
    EXPECT_EQ(s.mlp_delta, 0.0);
    EXPECT_TRUE(s.within_bound);
  }
}

TEST(Prune, GatedDeltaStaysWithinAnalyticBound) {
  GenerationParams p;
  p.max_new_tokens = 16;
  for (auto k : {ActivationKind::SwiGLU, ActivationKind::GEGLU}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const PruneReport r = prune_and_compare(micro(k, seed), "Ein kleiner Test", p);
      ASSERT_EQ(r.steps.size(), 16u);
      EXPECT_EQ(r.tail_bound, negative_tail_bound(k));
      EXPECT_TRUE(r.all_within_bound()) << to_string(k) << " seed " << seed;
      EXPECT_GT(r.max_mlp_delta(), 0.0);
      for (const auto& s : r.steps) EXPECT_LE(s.mlp_delta, s.mlp_bound);
    }
  }
}

TEST(Prune, ClampingBoundHoldsForRandomGatedLayers) {
  std::mt19937_64 rng(17);
  std::normal_distribution<float> g(0.0f, 1.0f);
  auto rand = [&](std::size_t r, std::size_t c, float scale) {
    Tensor2D t(r, c);
    for (auto& v : t.data()) v = g(rng) * scale;
    return t;
  };
  for (int trial = 0; trial < 100; ++trial) {
    for (auto k : {ActivationKind::SwiGLU, ActivationKind::GEGLU}) {
      MlpWeights w{rand(16, 32, 0.25f), rand(16, 32, 0.25f), rand(32, 16, 0.18f)};
      const Tensor2D x = rand(1, 16, 1.0f);
      MlpTrace t = mlp_trace(x, w, k);
      const Tensor2D full = mlp_down(t.post_sigma, t.gate, w);
      double bound = 0;
      for (std::size_t j = 0; j < 32; ++j) {
        if (t.post_sigma(0, j) > 0.0f) continue;
        double norm = 0;
        for (std::size_t c = 0; c < 16; ++c) norm += std::pow(double((*t.gate)(0, j)) * w.w_down(j, c), 2);
        bound += std::sqrt(norm);
        t.post_sigma(0, j) = 0.0f;
      }
      bound *= negative_tail_bound(k);
      const Tensor2D clamped = mlp_down(t.post_sigma, t.gate, w);
      for (std::size_t c = 0; c < 16; ++c) EXPECT_LE(std::abs(double(full(0, c)) - clamped(0, c)), bound + 1e-6);
    }
  }
}

TEST(Prune, ZeroNewTokensGivesEmptyReport) {
  GenerationParams p;
  p.max_new_tokens = 0;
  EXPECT_TRUE(prune_and_compare(micro(ActivationKind::SwiGLU, 1), "abc", p).steps.empty());
}

}  // namespace
}  // namespace pimns
