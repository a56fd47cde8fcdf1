#pragma once

#include <cstdint>
#include <utility>

#include "segfuse/tensor.hpp"

namespace segfuse {

// Parameters of the synthetic scene generator. Scenes are a background class
// covered by random elliptical and rectangular blobs of the other classes,
// with minority-class objects drawn last so they are never occluded.
struct SceneSpec {
  int height = 64;
  int width = 64;
  int classes = 4;
  ClassId minority_class = 3;
  // Expected share of minority pixels per frame; must stay below 1 / classes.
  double minority_pixel_fraction = 0.02;
  // Fraction of the logit scale removed from the minority class everywhere.
  double minority_confidence_deficit = 0.8;
  // Number of non-minority foreground blobs per frame, inclusive range.
  std::pair<int, int> blob_count_range = {2, 6};
  // Standard deviation of the (spatially smoothed) logit noise.
  double noise_temperature = 0.5;
  // Logit gap of the ground-truth class for an object of nominal confidence.
  double logit_scale = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticFrame {
  ProbTensor probs;
  LabelMask gt;
};

// Deterministic in (spec, index); frames with different indices are
// independent draws.
SyntheticFrame generate_scene(const SceneSpec& spec, std::uint64_t index);

}  // namespace segfuse
