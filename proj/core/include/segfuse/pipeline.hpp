#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "segfuse/decision.hpp"
#include "segfuse/dispersion.hpp"
#include "segfuse/gbt.hpp"
#include "segfuse/segments.hpp"
#include "segfuse/tensor.hpp"

namespace segfuse {

// Everything derived from one frame for one minority class and one alpha.
struct FrameAnalysis {
  LabelMask bayes;
  LabelMask adjusted;  // decide() output; the ML mask when alpha = 1
  LikelihoodField likelihood;
  DispersionMaps maps;
  std::vector<Segment> candidates;  // disagreement set of (adjusted, bayes)
  std::vector<SegmentFeatures> features;
};

FrameAnalysis analyze_frame(const ProbTensor& probs, const PriorField& priors,
                            const DecisionConfig& cfg, ClassId minority_class);

// Candidate segments of a corpus, one row each, with optional meta labels.
struct CandidateTable {
  std::vector<std::string> schema;
  std::vector<std::string> frame_ids;
  std::vector<std::size_t> segment_ids;
  std::vector<ClassId> class_ids;
  FeatureMatrix features;
  std::vector<int> labels;  // empty when no ground truth was available

  explicit CandidateTable(std::vector<std::string> names = {});

  std::size_t rows() const { return frame_ids.size(); }
  bool has_labels() const { return labels.size() == rows(); }

  // Appends a frame's candidates; `labels` may be empty when unlabelled.
  void append_frame(const std::string& frame_id, const FrameAnalysis& analysis,
                    const std::vector<int>& frame_labels);
};

// CSV with header frame_id,segment_id,class_id,<schema...>[,label]. Floats
// are printed with round-trip precision so a reload reproduces the matrix.
void write_candidate_csv(std::ostream& out, const CandidateTable& table);
CandidateTable read_candidate_csv(std::istream& in);
void write_candidate_csv(const std::filesystem::path& path, const CandidateTable& table);
CandidateTable read_candidate_csv(const std::filesystem::path& path);

}  // namespace segfuse
