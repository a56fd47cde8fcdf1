#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segfuse/decision.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/gbt.hpp"
#include "segfuse/pipeline.hpp"
#include "segfuse/tensor.hpp"

namespace segfuse {

struct SegmentCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  ClassId class_id = 0;

  SegmentCounts& operator+=(const SegmentCounts& other);
  bool operator==(const SegmentCounts&) const = default;
};

// A predicted class-c component is a TP when it touches at least one gt
// class-c pixel, otherwise an FP. A gt class-c component touched by no
// predicted class-c pixel is an FN.
SegmentCounts segment_confusion(const LabelMask& pred, const LabelMask& gt, ClassId cls);

// Extra FPs paid per FN removed relative to Bayes; nullopt when the FN
// counts are equal.
std::optional<double> delta(const SegmentCounts& adjusted, const SegmentCounts& bayes);

// 2TP / (2TP + FP + FN); 0 when the denominator vanishes.
double f1_score(const SegmentCounts& counts);

// Fraction of non-ignore gt pixels predicted correctly (1 when there are none).
double pixel_accuracy(const LabelMask& pred, const LabelMask& gt);

struct ClassificationScores {
  double f1 = 0.0;
  double accuracy = 0.0;
};

ClassificationScores classification_scores(const LabelMask& pred, const LabelMask& gt, ClassId cls);

// Accumulates per-class intersections and unions over any number of frames.
class IouAccumulator {
 public:
  explicit IouAccumulator(int classes);
  void add(const LabelMask& pred, const LabelMask& gt);
  // Mean IoU over classes that occur in the accumulated gt.
  double miou() const;
  double iou(int cls) const;

 private:
  std::vector<std::uint64_t> intersection_;
  std::vector<std::uint64_t> union_;
  std::vector<std::uint64_t> gt_count_;
};

double miou(const LabelMask& pred, const LabelMask& gt, int classes);

struct EmpiricalRisks {
  double symmetric = 0.0;  // expected misclassification mass under p(y|x)
  double inverse = 0.0;    // same under the normalized likelihoods
};

EmpiricalRisks empirical_risks(const ProbTensor& probs, const LikelihoodField& likelihood,
                               const LabelMask& decision);

struct MetricsReport {
  double alpha = 0.0;
  std::string rule;
  SegmentCounts counts;
  std::optional<double> delta;
  double f1 = 0.0;
  double miou = 0.0;
  double accuracy = 0.0;
};

// Corpus-level report; frames are reduced in the given order.
MetricsReport evaluate_masks(std::span<const LabelMask> predictions, std::span<const LabelMask> gts,
                             ClassId cls, int classes, double alpha, std::string rule,
                             const std::optional<SegmentCounts>& bayes_counts);

// alpha,rule,tp,fp,fn,delta,f1,miou,accuracy with six decimals; an undefined
// delta is written as "nan".
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> rows);

struct OutOfFoldVerdict {
  std::string frame_id;
  std::size_t segment_id = 0;
  int fold = 0;
  bool keep = false;
  double score = 0.0;
};

// Frame-grouped k-fold cross-validation of the meta classifier. Frame ids are
// sorted, shuffled with `seed` and dealt round-robin into folds, so the
// result depends only on the set of ids. Returns one verdict per table row,
// in table order. k equal to the number of frames gives leave-one-frame-out.
std::vector<OutOfFoldVerdict> cross_validate(const CandidateTable& table, int folds,
                                             const GbtConfig& cfg, std::uint64_t seed);

void write_verdict_csv(std::ostream& out, std::span<const OutOfFoldVerdict> verdicts);
std::vector<OutOfFoldVerdict> read_verdict_csv(std::istream& in);

struct LabeledFrame {
  std::string id;
  ProbTensor probs;
  LabelMask gt;
};

struct MetaPipelineConfig {
  GbtConfig gbt;
  int folds = 5;
  std::uint64_t seed = 0;
};

struct SweepResult {
  MetricsReport bayes;
  std::vector<MetricsReport> rows;  // per alpha: adjusted, then fusion when enabled
};

SweepResult alpha_sweep(std::span<const LabeledFrame> corpus, const PriorField& priors,
                        std::span<const double> alphas, ClassId cls,
                        const std::optional<MetaPipelineConfig>& meta, int jobs = 1);

// Fused masks for every frame from out-of-fold verdicts; also returns the
// adjusted masks and the Bayes masks so callers can evaluate all three.
struct FusionOutcome {
  std::vector<LabelMask> bayes;
  std::vector<LabelMask> adjusted;
  std::vector<LabelMask> fused;
  std::vector<std::vector<CandidateVerdict>> verdicts;
  std::vector<std::vector<Segment>> candidates;
};

FusionOutcome cross_validated_fusion(std::span<const LabeledFrame> corpus, const PriorField& priors,
                                     const DecisionConfig& decision, ClassId cls,
                                     const MetaPipelineConfig& meta, int jobs = 1);

}  // namespace segfuse
