#pragma once

#include <span>
#include <vector>

#include "segfuse/segments.hpp"
#include "segfuse/tensor.hpp"

namespace segfuse {

struct CandidateVerdict {
  std::size_t segment_id = 0;  // index into the frame's disagreement set
  bool keep = false;           // true: the segment is believed to be a true positive
  double score = 0.0;
};

// 1 when some pixel of the candidate carries ground-truth class c, else 0.
// Ignore pixels never match.
std::vector<int> label_candidates(std::span<const Segment> candidates, const LabelMask& gt,
                                  ClassId minority_class);

// The base (normally Bayes) mask everywhere except on the pixels of kept
// candidates, which take the minority class. `candidates` must be the disagreement set of (ml, base)
// for that class; verdicts must name every candidate exactly once.
LabelMask fuse(const LabelMask& base_mask, std::span<const Segment> candidates,
               std::span<const CandidateVerdict> verdicts, ClassId minority_class);

// Convenience overload computing the disagreement set itself.
LabelMask fuse(const LabelMask& bayes_mask, const LabelMask& ml_mask,
               std::span<const CandidateVerdict> verdicts, ClassId minority_class);

}  // namespace segfuse
