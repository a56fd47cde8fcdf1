#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "segfuse/decision.hpp"
#include "segfuse/error.hpp"
#include "segfuse/evaluation.hpp"
#include "segfuse/synth.hpp"

namespace segfuse {
namespace {

SegmentCounts counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  SegmentCounts c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  return c;
}

TEST(SegmentConfusion, OverlapWithOneOfTwoObjects) {
  LabelMask gt(6, 6, ClassId{0});
  gt.set(1, 1, 2);
  gt.set(4, 4, 2);
  LabelMask pred(6, 6, ClassId{0});
  pred.set(1, 1, 2);
  pred.set(1, 2, 2);
  const SegmentCounts c = segment_confusion(pred, gt, 2);
  EXPECT_EQ(c.tp, 1);
  EXPECT_EQ(c.fp, 0);
  EXPECT_EQ(c.fn, 1);
}

TEST(SegmentConfusion, PerfectAndSpurious) {
  std::mt19937_64 rng(1);
  const LabelMask gt = testing::random_mask(rng, 8, 8, 3);
  const SegmentCounts same = segment_confusion(gt, gt, 1);
  EXPECT_EQ(same.fp, 0);
  EXPECT_EQ(same.fn, 0);

  LabelMask pred(4, 4, ClassId{0});
  pred.set(2, 2, 1);
  const SegmentCounts c = segment_confusion(pred, LabelMask(4, 4, ClassId{0}), 1);
  EXPECT_EQ(c.tp, 0);
  EXPECT_EQ(c.fp, 1);
  EXPECT_EQ(c.fn, 0);
}

TEST(SegmentConfusion, MatchesOracleOnRandomMasks) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelMask pred = testing::random_mask(rng, 10, 10, 4);
    const LabelMask gt = testing::random_mask(rng, 10, 10, 4, 0.05);
    const SegmentCounts c = segment_confusion(pred, gt, 3);
    const auto o = testing::counts_oracle(pred, gt, 3);
    ASSERT_EQ(c.tp, o.tp);
    ASSERT_EQ(c.fp, o.fp);
    ASSERT_EQ(c.fn, o.fn);
  }
}

// FP and FN of Bayes, ML and fusion for one network on the street-scene
// benchmark, and the published extra-FP-per-removed-FN ratios.
TEST(Delta, PublishedStreetSceneValues) {
  const SegmentCounts bayes = counts(0, 865, 839);
  struct Row {
    std::int64_t fp, fn;
    double expected;
  };
  for (const Row& r : {Row{1988, 571, 4.190}, Row{2352, 533, 4.860}, Row{2827, 496, 5.720}, Row{3155, 485, 6.469},
                       Row{4885, 476, 11.074}, Row{1167, 720, 2.538}, Row{1169, 670, 1.799}, Row{1247, 611, 1.676},
                       Row{1329, 586, 1.834}, Row{1606, 553, 2.590}}) {
    const auto d = delta(counts(0, r.fp, r.fn), bayes);
    ASSERT_TRUE(d.has_value());
    EXPECT_NEAR(*d, r.expected, 1e-3) << r.fp << "/" << r.fn;
  }
}

TEST(Delta, PublishedImageClassificationValue) {
  const auto d = delta(counts(0, 169, 253), counts(0, 21, 585));
  ASSERT_TRUE(d.has_value());
  EXPECT_NEAR(*d, 0.446, 5e-4);
  EXPECT_NEAR(*d, 0.45, 5e-3);
}

TEST(Delta, UndefinedWithoutFnChange) {
  EXPECT_FALSE(delta(counts(3, 4, 5), counts(3, 1, 5)).has_value());
}

TEST(F1, Arithmetic) {
  EXPECT_DOUBLE_EQ(f1_score(counts(2, 1, 1)), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1_score(counts(0, 3, 2)), 0.0);
  EXPECT_DOUBLE_EQ(f1_score(counts(0, 0, 0)), 0.0);
  std::mt19937_64 rng(3);
  const LabelMask gt = testing::random_mask(rng, 8, 8, 3);
  const ClassificationScores s = classification_scores(gt, gt, 1);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
  EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
}

TEST(Iou, Examples) {
  std::mt19937_64 rng(4);
  const LabelMask gt = testing::random_mask(rng, 8, 8, 3);
  EXPECT_DOUBLE_EQ(miou(gt, gt, 3), 1.0);

  LabelMask complement = gt;
  LabelMask two = testing::random_mask(rng, 8, 8, 2);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) complement.set(r, c, 1 - two.at(r, c));
  }
  EXPECT_DOUBLE_EQ(miou(complement, two, 2), 0.0);

  LabelMask left(4, 4, ClassId{0});
  LabelMask top(4, 4, ClassId{0});
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 2; ++c) {
      left.set(r, c, 1);
      top.set(c, r, 1);
    }
  }
  IouAccumulator acc(2);
  acc.add(top, left);
  EXPECT_DOUBLE_EQ(acc.iou(1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(acc.iou(0), 1.0 / 3.0);
}

TEST(Iou, IgnoreAndAbsentClasses) {
  const LabelMask gt(1, 4, {0, 0, kIgnoreLabel, kIgnoreLabel});
  const LabelMask pred(1, 4, {0, 0, 2, 1});
  EXPECT_DOUBLE_EQ(miou(pred, gt, 3), 1.0);
  EXPECT_DOUBLE_EQ(pixel_accuracy(pred, gt), 1.0);
}

TEST(Risks, ClosedForms) {
  const ProbTensor one_hot(1, 3, 3, {1, 0, 0, 0, 0, 1, 0, 1, 0});
  const LikelihoodField lf(1, 3, 3, {1, 0, 0, 0, 0, 1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(empirical_risks(one_hot, lf, testing::argmax_oracle(one_hot)).symmetric, 0.0);

  const ProbTensor uniform(2, 2, 4, std::vector<float>(16, 0.25f));
  const LikelihoodField ulf(2, 2, 4, std::vector<double>(16, 0.25));
  std::mt19937_64 rng(5);
  EXPECT_NEAR(empirical_risks(uniform, ulf, testing::random_mask(rng, 2, 2, 4)).symmetric, 0.75, 1e-7);
}

TEST(Risks, BayesMinimizesSymmetricRisk) {
  std::mt19937_64 rng(6);
  const ProbTensor probs = testing::random_probs(rng, 8, 8, 4);
  const LikelihoodField lf(8, 8, 4, std::vector<double>(probs.data().begin(), probs.data().end()));
  const LabelMask bayes = bayes_decision(probs);
  const double best = empirical_risks(probs, lf, bayes).symmetric;
  EXPECT_NEAR(best, testing::risk_oracle(probs, bayes), 1e-6);
  for (int trial = 0; trial < 1000; ++trial) {
    ASSERT_LE(best, empirical_risks(probs, lf, testing::random_mask(rng, 8, 8, 4)).symmetric + 1e-12);
  }
}

TEST(MetricsCsv, Format) {
  MetricsReport a;
  a.rule = "bayes";
  a.counts = counts(3, 1, 2);
  a.f1 = 2.0 / 3.0;
  a.miou = 0.5;
  a.accuracy = 1.0;
  MetricsReport b = a;
  b.alpha = 0.975;
  b.rule = "adjusted";
  b.delta = 11.07434;
  std::ostringstream out;
  write_metrics_csv(out, std::vector<MetricsReport>{a, b});
  EXPECT_EQ(out.str(),
            "alpha,rule,tp,fp,fn,delta,f1,miou,accuracy\n"
            "0.000000,bayes,3,1,2,nan,0.666667,0.500000,1.000000\n"
            "0.975000,adjusted,3,1,2,11.074340,0.666667,0.500000,1.000000\n");
}

std::vector<LabeledFrame> synthetic_corpus(int frames, std::uint64_t seed) {
  SceneSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.minority_pixel_fraction = 0.04;
  spec.seed = seed;
  std::vector<LabeledFrame> out;
  for (int i = 0; i < frames; ++i) {
    SyntheticFrame f = generate_scene(spec, static_cast<std::uint64_t>(i));
    out.push_back({"f" + std::to_string(1000 + i), std::move(f.probs), std::move(f.gt)});
  }
  return out;
}

PriorField priors_for(const std::vector<LabeledFrame>& corpus) {
  std::vector<LabelMask> masks;
  for (const auto& f : corpus) masks.push_back(f.gt);
  return estimate_priors(masks, corpus.front().probs.classes(), PriorMode::kPositional);
}

TEST(Sweep, AlphaZeroRowIsBayes) {
  const auto corpus = synthetic_corpus(10, 1);
  const auto priors = priors_for(synthetic_corpus(40, 2));
  const SweepResult r = alpha_sweep(corpus, priors, std::vector<double>{0.0}, 3, std::nullopt);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].counts, r.bayes.counts);
  EXPECT_EQ(r.rows[0].miou, r.bayes.miou);
  EXPECT_EQ(r.rows[0].f1, r.bayes.f1);
}

TEST(Sweep, MoreAlphaTradesFnForFp) {
  const auto corpus = synthetic_corpus(30, 3);
  const auto priors = priors_for(synthetic_corpus(60, 4));
  const SweepResult r = alpha_sweep(corpus, priors, std::vector<double>{0.0, 1.0}, 3, std::nullopt, 4);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_LE(r.rows[1].counts.fn, r.rows[0].counts.fn);
  EXPECT_GE(r.rows[1].counts.fp, r.rows[0].counts.fp);
}

TEST(Sweep, DuplicateAlphasAreKeptAndJobsDoNotMatter) {
  const auto corpus = synthetic_corpus(8, 5);
  const auto priors = priors_for(synthetic_corpus(20, 6));
  const std::vector<double> alphas{0.5, 0.5};
  MetaPipelineConfig meta;
  meta.folds = 2;
  const SweepResult a = alpha_sweep(corpus, priors, alphas, 3, meta, 1);
  const SweepResult b = alpha_sweep(corpus, priors, alphas, 3, meta, 4);
  ASSERT_EQ(a.rows.size(), 4u);
  std::ostringstream sa, sb;
  write_metrics_csv(sa, a.rows);
  write_metrics_csv(sb, b.rows);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.rows[0].counts, a.rows[2].counts);
  EXPECT_EQ(a.rows[1].counts, a.rows[3].counts);
}

CandidateTable random_table(std::mt19937_64& rng, int frames) {
  CandidateTable t(std::vector<std::string>{"a", "b", "c"});
  std::uniform_int_distribution<int> rows(1, 6);
  std::normal_distribution<double> normal;
  for (int f = 0; f < frames; ++f) {
    const int n = rows(rng);
    for (int k = 0; k < n; ++k) {
      t.frame_ids.push_back("frame" + std::to_string(f));
      t.segment_ids.push_back(static_cast<std::size_t>(k));
      t.class_ids.push_back(3);
      const std::vector<double> x{normal(rng), normal(rng), normal(rng)};
      t.features.append_row(x);
      t.labels.push_back(x[0] + 0.3 * normal(rng) > 0 ? 1 : 0);
    }
  }
  return t;
}

CandidateTable permuted(const CandidateTable& t, const std::vector<std::size_t>& order) {
  CandidateTable out(t.schema);
  for (std::size_t i : order) {
    out.frame_ids.push_back(t.frame_ids[i]);
    out.segment_ids.push_back(t.segment_ids[i]);
    out.class_ids.push_back(t.class_ids[i]);
    out.features.append_row(t.features.row(i));
    out.labels.push_back(t.labels[i]);
  }
  return out;
}

using VerdictKey = std::pair<std::string, std::size_t>;

std::map<VerdictKey, std::tuple<int, bool, double>> by_key(const std::vector<OutOfFoldVerdict>& v) {
  std::map<VerdictKey, std::tuple<int, bool, double>> out;
  for (const auto& x : v) out[{x.frame_id, x.segment_id}] = {x.fold, x.keep, x.score};
  return out;
}

TEST(CrossValidate, PartitionAndGrouping) {
  std::mt19937_64 rng(7);
  const CandidateTable t = random_table(rng, 12);
  const auto v = cross_validate(t, 4, GbtConfig{}, 11);
  ASSERT_EQ(v.size(), t.rows());
  std::map<std::string, int> fold_of;
  std::vector<int> frames_per_fold(4, 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v[i].frame_id, t.frame_ids[i]);
    EXPECT_EQ(v[i].segment_id, t.segment_ids[i]);
    ASSERT_GE(v[i].fold, 0);
    ASSERT_LT(v[i].fold, 4);
    const auto [it, inserted] = fold_of.emplace(v[i].frame_id, v[i].fold);
    if (inserted) ++frames_per_fold[static_cast<std::size_t>(v[i].fold)];
    EXPECT_EQ(it->second, v[i].fold);
  }
  EXPECT_EQ(frames_per_fold, (std::vector<int>{3, 3, 3, 3}));
}

TEST(CrossValidate, LeaveOneFrameOut) {
  std::mt19937_64 rng(8);
  const CandidateTable t = random_table(rng, 7);
  std::map<int, std::set<std::string>> frames_in_fold;
  for (const auto& x : cross_validate(t, 7, GbtConfig{}, 0)) frames_in_fold[x.fold].insert(x.frame_id);
  ASSERT_EQ(frames_in_fold.size(), 7u);
  for (const auto& [fold, frames] : frames_in_fold) EXPECT_EQ(frames.size(), 1u);
}

TEST(CrossValidate, RowOrderDoesNotMatter) {
  std::mt19937_64 rng(9);
  const CandidateTable t = random_table(rng, 10);
  std::vector<std::size_t> order(t.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  GbtConfig cfg;
  cfg.max_features = 2;
  EXPECT_EQ(by_key(cross_validate(t, 5, cfg, 3)), by_key(cross_validate(permuted(t, order), 5, cfg, 3)));
}

TEST(CrossValidate, Errors) {
  std::mt19937_64 rng(10);
  CandidateTable t = random_table(rng, 3);
  EXPECT_THROW(cross_validate(t, 1, GbtConfig{}, 0), ValidationError);
  EXPECT_THROW(cross_validate(t, 4, GbtConfig{}, 0), ValidationError);
  t.labels.clear();
  EXPECT_THROW(cross_validate(t, 2, GbtConfig{}, 0), ValidationError);
}

TEST(VerdictCsv, RoundTrip) {
  std::mt19937_64 rng(11);
  const auto v = cross_validate(random_table(rng, 6), 3, GbtConfig{}, 1);
  std::stringstream io;
  write_verdict_csv(io, v);
  const auto back = read_verdict_csv(io);
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, v[i].frame_id);
    EXPECT_EQ(back[i].segment_id, v[i].segment_id);
    EXPECT_EQ(back[i].fold, v[i].fold);
    EXPECT_EQ(back[i].keep, v[i].keep);
    EXPECT_EQ(back[i].score, v[i].score);
  }
  std::istringstream bad("frame_id,segment_id,fold,keep,score\nf,0,1,2,0.5\n");
  EXPECT_THROW(read_verdict_csv(bad), FormatError);
}

TEST(CandidateCsv, RoundTrip) {
  std::mt19937_64 rng(12);
  const CandidateTable t = random_table(rng, 5);
  std::stringstream io;
  write_candidate_csv(io, t);
  const CandidateTable back = read_candidate_csv(io);
  EXPECT_EQ(back.schema, t.schema);
  EXPECT_EQ(back.frame_ids, t.frame_ids);
  EXPECT_EQ(back.segment_ids, t.segment_ids);
  EXPECT_EQ(back.class_ids, t.class_ids);
  EXPECT_EQ(back.labels, t.labels);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.features.cols(); ++j) EXPECT_EQ(back.features.at(i, j), t.features.at(i, j));
  }
}

TEST(CrossValidatedFusion, SandwichOnEveryFrame) {
  const auto corpus = synthetic_corpus(20, 13);
  const auto priors = priors_for(synthetic_corpus(60, 14));
  DecisionConfig cfg;
  MetaPipelineConfig meta;
  meta.folds = 4;
  const FusionOutcome out = cross_validated_fusion(corpus, priors, cfg, 3, meta, 2);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const SegmentCounts b = segment_confusion(out.bayes[i], corpus[i].gt, 3);
    const SegmentCounts f = segment_confusion(out.fused[i], corpus[i].gt, 3);
    const SegmentCounts m = segment_confusion(out.adjusted[i], corpus[i].gt, 3);
    EXPECT_GE(b.fn, f.fn);
    EXPECT_GE(f.fn, m.fn);
    EXPECT_LE(b.fp, f.fp);
    EXPECT_LE(f.fp, m.fp);
  }
}

}  // namespace
}  // namespace segfuse
