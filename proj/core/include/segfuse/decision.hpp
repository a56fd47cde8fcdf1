#pragma once

#include <span>

#include "segfuse/tensor.hpp"

namespace segfuse {

struct DecisionConfig {
  // 0 reproduces the Bayes rule, 1 the Maximum Likelihood rule.
  double alpha = 1.0;
  PriorMode prior_mode = PriorMode::kPositional;
  // Lower bound applied to interpolated priors before dividing by them.
  double epsilon_floor = 1e-9;

  void validate() const;
};

// Per-position (or corpus-wide) class frequencies of the training masks.
// Ignore pixels are left out of both numerator and denominator; a position
// that is ignored in every mask gets an all-zero row.
PriorField estimate_priors(std::span<const LabelMask> masks, int classes, PriorMode mode);

// (1 - alpha) + alpha * prior, elementwise.
PriorField interpolate_priors(const PriorField& priors, double alpha);

// Plain per-pixel argmax, lowest class index on ties.
LabelMask bayes_decision(const ProbTensor& probs);

// Per-pixel argmax of p(y|x) / max(p_alpha(y), epsilon_floor), lowest class
// index on ties.
LabelMask decide(const ProbTensor& probs, const PriorField& priors, const DecisionConfig& cfg);

// The same ratios as decide(), renormalized to sum to one at every pixel.
LikelihoodField adjusted_likelihood(const ProbTensor& probs, const PriorField& priors,
                                    const DecisionConfig& cfg);

// Argmax of an arbitrary per-pixel score field, lowest index on ties.
LabelMask argmax_mask(const LikelihoodField& field);

}  // namespace segfuse
