#include "segfuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "segfuse/error.hpp"
#include "segfuse/parallel.hpp"
#include "segfuse/segments.hpp"

namespace segfuse {

namespace {

void require_same_shape(const LabelMask& a, const LabelMask& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw SchemaError(std::string(what) + ": masks differ in shape");
  }
}

bool touches(const Segment& seg, const LabelMask& other, ClassId cls) {
  return std::any_of(seg.pixels.begin(), seg.pixels.end(),
                     [&](const Pixel& p) { return other.at(p.row, p.col) == cls; });
}

std::string fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

SegmentCounts& SegmentCounts::operator+=(const SegmentCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

SegmentCounts segment_confusion(const LabelMask& pred, const LabelMask& gt, ClassId cls) {
  require_same_shape(pred, gt, "segment_confusion");
  SegmentCounts counts;
  counts.class_id = cls;
  for (const Segment& seg : connected_components(pred, cls)) {
    (touches(seg, gt, cls) ? counts.tp : counts.fp) += 1;
  }
  for (const Segment& seg : connected_components(gt, cls)) {
    if (!touches(seg, pred, cls)) counts.fn += 1;
  }
  return counts;
}

std::optional<double> delta(const SegmentCounts& adjusted, const SegmentCounts& bayes) {
  const std::int64_t removed = bayes.fn - adjusted.fn;
  if (removed == 0) return std::nullopt;
  return static_cast<double>(adjusted.fp - bayes.fp) / static_cast<double>(removed);
}

double f1_score(const SegmentCounts& c) {
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double pixel_accuracy(const LabelMask& pred, const LabelMask& gt) {
  require_same_shape(pred, gt, "pixel_accuracy");
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kIgnoreLabel) continue;
    ++total;
    if (p[i] == g[i]) ++correct;
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

ClassificationScores classification_scores(const LabelMask& pred, const LabelMask& gt, ClassId cls) {
  return {f1_score(segment_confusion(pred, gt, cls)), pixel_accuracy(pred, gt)};
}

IouAccumulator::IouAccumulator(int classes)
    : intersection_(static_cast<std::size_t>(classes), 0),
      union_(static_cast<std::size_t>(classes), 0),
      gt_count_(static_cast<std::size_t>(classes), 0) {}

void IouAccumulator::add(const LabelMask& pred, const LabelMask& gt) {
  require_same_shape(pred, gt, "miou");
  const auto classes = intersection_.size();
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kIgnoreLabel) continue;
    if (g[i] >= classes) throw ValidationError("miou: gt label out of range");
    ++gt_count_[g[i]];
    ++union_[g[i]];
    if (p[i] == g[i]) {
      ++intersection_[g[i]];
    } else if (p[i] < classes) {
      ++union_[p[i]];
    }
  }
}

double IouAccumulator::iou(int cls) const {
  const auto c = static_cast<std::size_t>(cls);
  return union_[c] == 0 ? 0.0 : static_cast<double>(intersection_[c]) / static_cast<double>(union_[c]);
}

double IouAccumulator::miou() const {
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < gt_count_.size(); ++c) {
    if (gt_count_[c] == 0) continue;
    sum += iou(static_cast<int>(c));
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

double miou(const LabelMask& pred, const LabelMask& gt, int classes) {
  IouAccumulator acc(classes);
  acc.add(pred, gt);
  return acc.miou();
}

EmpiricalRisks empirical_risks(const ProbTensor& probs, const LikelihoodField& likelihood,
                               const LabelMask& decision) {
  if (probs.height() != decision.height() || probs.width() != decision.width() ||
      likelihood.height() != decision.height() || likelihood.width() != decision.width() ||
      likelihood.classes() != probs.classes()) {
    throw SchemaError("empirical_risks: shapes differ");
  }
  EmpiricalRisks risks;
  for (int r = 0; r < decision.height(); ++r) {
    for (int c = 0; c < decision.width(); ++c) {
      const ClassId d = decision.at(r, c);
      const auto p = probs.pixel(r, c);
      const auto q = likelihood.pixel(r, c);
      for (int y = 0; y < probs.classes(); ++y) {
        if (d == y) continue;
        risks.symmetric += p[y];
        risks.inverse += q[y];
      }
    }
  }
  const auto n = static_cast<double>(decision.pixel_count());
  risks.symmetric /= n;
  risks.inverse /= n;
  return risks;
}

MetricsReport evaluate_masks(std::span<const LabelMask> predictions, std::span<const LabelMask> gts,
                             ClassId cls, int classes, double alpha, std::string rule,
                             const std::optional<SegmentCounts>& bayes_counts) {
  if (predictions.size() != gts.size()) throw ValidationError("evaluate: prediction/gt count mismatch");
  MetricsReport report;
  report.alpha = alpha;
  report.rule = std::move(rule);
  report.counts.class_id = cls;
  IouAccumulator iou(classes);
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    report.counts += segment_confusion(predictions[i], gts[i], cls);
    iou.add(predictions[i], gts[i]);
    const auto p = predictions[i].data();
    const auto g = gts[i].data();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k] == kIgnoreLabel) continue;
      ++total;
      if (p[k] == g[k]) ++correct;
    }
  }
  report.f1 = f1_score(report.counts);
  report.miou = iou.miou();
  report.accuracy = total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
  if (bayes_counts) report.delta = delta(report.counts, *bayes_counts);
  return report;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> rows) {
  out << "alpha,rule,tp,fp,fn,delta,f1,miou,accuracy\n";
  for (const MetricsReport& r : rows) {
    out << fixed6(r.alpha) << ',' << r.rule << ',' << r.counts.tp << ',' << r.counts.fp << ','
        << r.counts.fn << ',' << (r.delta ? fixed6(*r.delta) : std::string("nan")) << ','
        << fixed6(r.f1) << ',' << fixed6(r.miou) << ',' << fixed6(r.accuracy) << '\n';
  }
}

std::vector<OutOfFoldVerdict> cross_validate(const CandidateTable& table, int folds,
                                             const GbtConfig& cfg, std::uint64_t seed) {
  if (!table.has_labels()) throw ValidationError("cross_validate: candidate table has no labels");
  if (folds < 2) throw ValidationError("cross_validate: need at least two folds");

  std::vector<std::string> frames(table.frame_ids);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  if (frames.size() < static_cast<std::size_t>(folds)) {
    throw ValidationError("cross_validate: " + std::to_string(frames.size()) + " frames for " +
                          std::to_string(folds) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(frames.begin(), frames.end(), rng);
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    fold_of[frames[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }

  // Training rows in (frame_id, segment_id) order so the model is independent
  // of the table's row order.
  std::vector<std::size_t> order(table.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(table.frame_ids[a], table.segment_ids[a]) <
           std::tie(table.frame_ids[b], table.segment_ids[b]);
  });

  std::vector<OutOfFoldVerdict> verdicts(table.rows());
  for (int fold = 0; fold < folds; ++fold) {
    FeatureMatrix train_x(table.features.cols());
    std::vector<int> train_y;
    std::vector<std::size_t> test_rows;
    for (std::size_t i : order) {
      if (fold_of.at(table.frame_ids[i]) == fold) {
        test_rows.push_back(i);
      } else {
        train_x.append_row(table.features.row(i));
        train_y.push_back(table.labels[i]);
      }
    }
    if (test_rows.empty()) continue;
    std::optional<GbtModel> model;
    if (train_x.rows() > 0) model = train_gbt(train_x, train_y, cfg, table.schema);
    for (std::size_t i : test_rows) {
      OutOfFoldVerdict& v = verdicts[i];
      v.frame_id = table.frame_ids[i];
      v.segment_id = table.segment_ids[i];
      v.fold = fold;
      if (model) {
        const MetaPrediction p = predict(*model, table.features.row(i));
        v.keep = p.label == 1;
        v.score = p.score;
      }
    }
  }
  return verdicts;
}

void write_verdict_csv(std::ostream& out, std::span<const OutOfFoldVerdict> verdicts) {
  out << "frame_id,segment_id,fold,keep,score\n";
  for (const auto& v : verdicts) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v.score);
    out << v.frame_id << ',' << v.segment_id << ',' << v.fold << ',' << (v.keep ? 1 : 0) << ',' << buf
        << '\n';
  }
}

std::vector<OutOfFoldVerdict> read_verdict_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "frame_id,segment_id,fold,keep,score") {
    throw FormatError("verdict csv: unexpected header");
  }
  std::vector<OutOfFoldVerdict> verdicts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    OutOfFoldVerdict v;
    std::string segment, fold, keep, score;
    if (!std::getline(fields, v.frame_id, ',') || !std::getline(fields, segment, ',') ||
        !std::getline(fields, fold, ',') || !std::getline(fields, keep, ',') ||
        !std::getline(fields, score)) {
      throw FormatError("verdict csv line " + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      v.segment_id = std::stoul(segment);
      v.fold = std::stoi(fold);
      v.score = std::stod(score);
    } catch (const std::exception&) {
      throw FormatError("verdict csv line " + std::to_string(line_no) + ": bad number");
    }
    if (keep != "0" && keep != "1") {
      throw FormatError("verdict csv line " + std::to_string(line_no) + ": keep must be 0 or 1");
    }
    v.keep = keep == "1";
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

FusionOutcome cross_validated_fusion(std::span<const LabeledFrame> corpus, const PriorField& priors,
                                     const DecisionConfig& decision, ClassId cls,
                                     const MetaPipelineConfig& meta, int jobs) {
  std::vector<FrameAnalysis> analyses(corpus.size());
  std::vector<std::vector<int>> labels(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    analyses[i] = analyze_frame(corpus[i].probs, priors, decision, cls);
    labels[i] = label_candidates(analyses[i].candidates, corpus[i].gt, cls);
  });

  CandidateTable table;
  for (std::size_t i = 0; i < corpus.size(); ++i) table.append_frame(corpus[i].id, analyses[i], labels[i]);

  FusionOutcome out;
  out.verdicts.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.verdicts[i].resize(analyses[i].candidates.size());
    for (std::size_t k = 0; k < analyses[i].candidates.size(); ++k) out.verdicts[i][k].segment_id = k;
  }

  // With too few frames holding candidates there is nothing to learn from;
  // every candidate then falls back to the Bayes decision.
  std::vector<std::string> frames_with_candidates(table.frame_ids);
  std::sort(frames_with_candidates.begin(), frames_with_candidates.end());
  frames_with_candidates.erase(std::unique(frames_with_candidates.begin(), frames_with_candidates.end()),
                               frames_with_candidates.end());
  if (frames_with_candidates.size() >= static_cast<std::size_t>(std::max(meta.folds, 2))) {
    std::map<std::string, std::size_t> frame_index;
    for (std::size_t i = 0; i < corpus.size(); ++i) frame_index[corpus[i].id] = i;
    for (const OutOfFoldVerdict& v : cross_validate(table, meta.folds, meta.gbt, meta.seed)) {
      CandidateVerdict& target = out.verdicts[frame_index.at(v.frame_id)][v.segment_id];
      target.keep = v.keep;
      target.score = v.score;
    }
  }

  out.fused.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.fused[i] = fuse(analyses[i].bayes, analyses[i].candidates, out.verdicts[i], cls);
    out.bayes.push_back(std::move(analyses[i].bayes));
    out.adjusted.push_back(std::move(analyses[i].adjusted));
    out.candidates.push_back(std::move(analyses[i].candidates));
  }
  return out;
}

SweepResult alpha_sweep(std::span<const LabeledFrame> corpus, const PriorField& priors,
                        std::span<const double> alphas, ClassId cls,
                        const std::optional<MetaPipelineConfig>& meta, int jobs) {
  if (corpus.empty()) throw ValidationError("alpha_sweep: empty corpus");
  const int classes = corpus.front().probs.classes();
  std::vector<LabelMask> gts;
  std::vector<LabelMask> bayes(corpus.size());
  for (const auto& f : corpus) gts.push_back(f.gt);
  parallel_for(corpus.size(), jobs, [&](std::size_t i) { bayes[i] = bayes_decision(corpus[i].probs); });

  SweepResult result;
  result.bayes = evaluate_masks(bayes, gts, cls, classes, 0.0, "bayes", std::nullopt);
  const SegmentCounts bayes_counts = result.bayes.counts;

  for (double alpha : alphas) {
    DecisionConfig cfg;
    cfg.alpha = alpha;
    cfg.prior_mode = priors.mode();
    cfg.validate();
    if (meta) {
      const FusionOutcome outcome = cross_validated_fusion(corpus, priors, cfg, cls, *meta, jobs);
      result.rows.push_back(evaluate_masks(outcome.adjusted, gts, cls, classes, alpha, "adjusted", bayes_counts));
      result.rows.push_back(evaluate_masks(outcome.fused, gts, cls, classes, alpha, "fusion", bayes_counts));
    } else {
      std::vector<LabelMask> adjusted(corpus.size());
      parallel_for(corpus.size(), jobs,
                   [&](std::size_t i) { adjusted[i] = decide(corpus[i].probs, priors, cfg); });
      result.rows.push_back(evaluate_masks(adjusted, gts, cls, classes, alpha, "adjusted", bayes_counts));
    }
  }
  return result;
}

}  // namespace segfuse
