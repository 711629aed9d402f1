#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pimns/errors.hpp"
#include "pimns/metrics.hpp"

namespace pimns {
namespace {

std::vector<std::vector<std::string>> single(const std::vector<std::string>& refs) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : refs) out.push_back({r});
  return out;
}

TEST(Bleu, IdenticalCorpusScoresExactlyHundred) {
  const std::vector<std::string> h{"the quick brown fox jumps", "a b", "over the lazy dog today ok"};
  EXPECT_EQ(bleu(h, single(h)), 100.0);
}

TEST(Bleu, NoSharedUnigramScoresZero) {
  const std::vector<std::string> h{"alpha beta gamma delta"};
  EXPECT_EQ(bleu(h, single({"one two three four"})), 0.0);
}

TEST(Bleu, ShortHypothesisWithSmoothedFourGram) {
  // p1..p3 are 3/3, 2/2, 1/1; the 4-gram order has no candidates so its
  // add-one precision is 1/(0+1). Brevity penalty exp(1 - 4/3).
  const std::vector<std::string> h{"the cat sat"};
  const double expected = 100.0 * std::exp(1.0 - 4.0 / 3.0);
  EXPECT_NEAR(bleu(h, single({"the cat sat down"})), expected, 1e-9);
  EXPECT_NEAR(expected, 71.65313105737893, 1e-9);
}

TEST(Bleu, ClippedCountsAndSmoothingOnPartialMatch) {
  // hyp: "the the the the" vs ref "the cat": p1 = 1/4 (clipped), p2..p4 have no
  // matches over 3, 2, 1 candidates.
  const double p = 0.25 * (1.0 / 4) * (1.0 / 3) * (1.0 / 2);
  const double expected = 100.0 * std::pow(p, 0.25);
  EXPECT_NEAR(bleu(std::vector<std::string>{"the the the the"}, single({"the cat"})), expected, 1e-9);
}

TEST(Bleu, ClosestReferenceLengthDrivesBrevity) {
  const std::vector<std::string> h{"a b c"};
  const std::vector<std::vector<std::string>> refs{{"a b c d e f g", "a b c"}};
  EXPECT_EQ(bleu(h, refs), 100.0);
}

TEST(Bleu, WhitespaceIsNormalizedByTokenization) {
  const std::vector<std::string> h{"  the   cat\tsat  "};
  EXPECT_EQ(bleu(h, single({"the cat sat"})), bleu(std::vector<std::string>{"the cat sat"}, single({"the cat sat"})));
}

TEST(Bleu, CorpusOrderDoesNotMatter) {
  std::vector<std::string> h{"the cat sat on the mat", "a dog barked", "it rains today", "we go home now please"};
  std::vector<std::string> r{"the cat sat on a mat", "the dog barked loudly", "it is raining today", "we go home now"};
  const double base = bleu(h, single(r));
  std::vector<std::size_t> idx{0, 1, 2, 3};
  std::mt19937 rng(3);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::string> hp, rp;
    for (auto i : idx) {
      hp.push_back(h[i]);
      rp.push_back(r[i]);
    }
    EXPECT_DOUBLE_EQ(bleu(hp, single(rp)), base);
  }
  EXPECT_GT(base, 0.0);
  EXPECT_LT(base, 100.0);
}

TEST(Bleu, RejectsMismatchedInputs) {
  const std::vector<std::string> h{"a", "b"};
  EXPECT_THROW(bleu(h, single({"a"})), ArgumentError);
  EXPECT_THROW(bleu(std::vector<std::string>{"a"}, std::vector<std::vector<std::string>>{{}}), ArgumentError);
}

TEST(Accuracy, DefaultNormalizer) {
  EXPECT_EQ(default_normalize("Yes."), "yes");
  EXPECT_EQ(default_normalize("  No!\n"), "no");
  EXPECT_EQ(default_normalize("TRUE"), "yes");
  EXPECT_EQ(default_normalize("false"), "no");
  EXPECT_EQ(default_normalize("Entailment."), "entailment");
  EXPECT_EQ(default_normalize("not_entailment"), "not_entailment");
}

TEST(Accuracy, CountsNormalizedMatches) {
  const std::vector<std::string> labels{"yes", "no", "entailment", "neutral"};
  EXPECT_EQ(accuracy(labels, labels), 100.0);
  EXPECT_EQ(accuracy(std::vector<std::string>{"Yes.", "No", "entailment", "contradiction"}, labels), 75.0);
  EXPECT_EQ(accuracy(std::vector<std::string>{"Yes."}, std::vector<std::string>{"yes"}), 100.0);
}

TEST(Accuracy, PluggableNormalizerAndErrors) {
  const Normalizer exact = [](std::string_view s) { return std::string(s); };
  EXPECT_EQ(accuracy(std::vector<std::string>{"Yes."}, std::vector<std::string>{"yes"}, exact), 0.0);
  EXPECT_THROW(accuracy(std::vector<std::string>{"a"}, std::vector<std::string>{}), ArgumentError);
}

}  // namespace
}  // namespace pimns
