#include "segfuse/fusion.hpp"

#include <algorithm>

#include "segfuse/error.hpp"

namespace segfuse {

std::vector<int> label_candidates(std::span<const Segment> candidates, const LabelMask& gt,
                                  ClassId minority_class) {
  std::vector<int> labels;
  labels.reserve(candidates.size());
  for (const Segment& seg : candidates) {
    const bool hit = std::any_of(seg.pixels.begin(), seg.pixels.end(), [&](const Pixel& p) {
      if (!gt.in_bounds(p.row, p.col)) throw SchemaError("label_candidates: segment outside gt mask");
      return gt.at(p.row, p.col) == minority_class;
    });
    labels.push_back(hit ? 1 : 0);
  }
  return labels;
}

LabelMask fuse(const LabelMask& base_mask, std::span<const Segment> candidates,
               std::span<const CandidateVerdict> verdicts, ClassId minority_class) {
  std::vector<int> seen(candidates.size(), 0);
  for (const CandidateVerdict& v : verdicts) {
    if (v.segment_id >= candidates.size()) {
      throw ValidationError("fuse: verdict for unknown segment " + std::to_string(v.segment_id));
    }
    if (seen[v.segment_id]++ != 0) {
      throw ValidationError("fuse: duplicate verdict for segment " + std::to_string(v.segment_id));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ValidationError("fuse: some disagreement segments have no verdict");
  }

  LabelMask out = base_mask;
  for (const CandidateVerdict& v : verdicts) {
    if (!v.keep) continue;
    for (const Pixel& p : candidates[v.segment_id].pixels) {
      if (!out.in_bounds(p.row, p.col)) throw SchemaError("fuse: segment outside mask");
      out.set(p.row, p.col, minority_class);
    }
  }
  return out;
}

LabelMask fuse(const LabelMask& bayes_mask, const LabelMask& ml_mask,
               std::span<const CandidateVerdict> verdicts, ClassId minority_class) {
  const std::vector<Segment> candidates = disagreement_set(ml_mask, bayes_mask, minority_class);
  return fuse(bayes_mask, candidates, verdicts, minority_class);
}

}  // namespace segfuse
