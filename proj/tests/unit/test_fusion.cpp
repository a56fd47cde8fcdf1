#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "segfuse/error.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/segments.hpp"

namespace segfuse {
namespace {

constexpr ClassId kMinority = 3;

void fill_block(LabelMask& m, int r0, int c0, int r1, int c1, ClassId v) {
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) m.set(r, c, v);
  }
}

TEST(LabelCandidates, Examples) {
  LabelMask ml(8, 8, ClassId{0});
  fill_block(ml, 1, 1, 2, 2, kMinority);  // fully inside gt object
  fill_block(ml, 1, 5, 2, 6, kMinority);  // touches gt with one pixel
  fill_block(ml, 5, 1, 6, 2, kMinority);  // over background
  LabelMask gt(8, 8, ClassId{0});
  fill_block(gt, 0, 0, 3, 3, kMinority);
  gt.set(2, 6, kMinority);
  const auto segs = connected_components(ml, kMinority);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(label_candidates(segs, gt, kMinority), (std::vector<int>{1, 1, 0}));
}

struct Fixture {
  LabelMask bayes{8, 8, ClassId{0}};
  LabelMask ml{8, 8, ClassId{0}};
  Fixture() {
    fill_block(bayes, 6, 0, 7, 7, 1);
    fill_block(ml, 6, 0, 7, 7, 1);
    fill_block(ml, 0, 0, 1, 2, kMinority);
    fill_block(ml, 3, 4, 4, 7, kMinority);
    fill_block(bayes, 0, 6, 0, 7, kMinority);
    fill_block(ml, 0, 6, 0, 7, kMinority);
  }
};

TEST(Fuse, AllFalseIsBayes) {
  const Fixture f;
  const auto candidates = disagreement_set(f.ml, f.bayes, kMinority);
  ASSERT_EQ(candidates.size(), 2u);
  const std::vector<CandidateVerdict> none{{0, false, -1.0}, {1, false, -1.0}};
  EXPECT_EQ(fuse(f.bayes, candidates, none, kMinority), f.bayes);
  EXPECT_EQ(fuse(f.bayes, f.ml, none, kMinority), f.bayes);
}

TEST(Fuse, AllTrueOverwritesEveryCandidate) {
  const Fixture f;
  const auto candidates = disagreement_set(f.ml, f.bayes, kMinority);
  const std::vector<CandidateVerdict> all{{0, true, 1.0}, {1, true, 1.0}};
  LabelMask expected = f.bayes;
  for (const Segment& s : candidates) {
    for (const Pixel& p : s.pixels) expected.set(p.row, p.col, kMinority);
  }
  EXPECT_EQ(fuse(f.bayes, candidates, all, kMinority), expected);
  // Here every ML minority pixel is either shared with Bayes or a candidate.
  EXPECT_EQ(fuse(f.bayes, f.ml, all, kMinority), f.ml);
}

TEST(Fuse, MixedVerdictsArePixelwiseUnion) {
  const Fixture f;
  const auto candidates = disagreement_set(f.ml, f.bayes, kMinority);
  const LabelMask only_first = fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{0, true, 1}, {1, false, -1}}, kMinority);
  const LabelMask only_second = fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{1, true, 1}, {0, false, -1}}, kMinority);
  const LabelMask both = fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{0, true, 1}, {1, true, 1}}, kMinority);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool changed = only_first.at(r, c) != f.bayes.at(r, c) || only_second.at(r, c) != f.bayes.at(r, c);
      EXPECT_EQ(both.at(r, c), changed ? kMinority : f.bayes.at(r, c)) << r << "," << c;
    }
  }
}

TEST(Fuse, VerdictsMustCoverCandidatesExactlyOnce) {
  const Fixture f;
  const auto candidates = disagreement_set(f.ml, f.bayes, kMinority);
  EXPECT_THROW(fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{0, true, 1}}, kMinority), ValidationError);
  EXPECT_THROW(fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{0, true, 1}, {0, false, 1}}, kMinority),
               ValidationError);
  EXPECT_THROW(fuse(f.bayes, candidates, std::vector<CandidateVerdict>{{0, true, 1}, {1, true, 1}, {2, true, 1}},
                    kMinority),
               ValidationError);
}

TEST(Fuse, ChangesOnlyKeptCandidatePixelsOnRandomMasks) {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const LabelMask bayes = testing::random_mask(rng, 12, 12, 4);
    const LabelMask ml = testing::random_mask(rng, 12, 12, 4);
    const auto candidates = disagreement_set(ml, bayes, kMinority);
    std::vector<CandidateVerdict> verdicts;
    for (std::size_t k = 0; k < candidates.size(); ++k) verdicts.push_back({k, coin(rng), 0.0});
    const LabelMask fused = fuse(bayes, candidates, verdicts, kMinority);
    LabelMask expected = bayes;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (!verdicts[k].keep) continue;
      for (const Pixel& p : candidates[k].pixels) expected.set(p.row, p.col, kMinority);
    }
    ASSERT_EQ(fused, expected);
  }
}

}  // namespace
}  // namespace segfuse
