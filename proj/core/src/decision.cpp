#include "segfuse/decision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

template <typename T>
int argmax(std::span<const T> values) {
  int best = 0;
  for (int y = 1; y < static_cast<int>(values.size()); ++y) {
    if (values[y] > values[best]) best = y;
  }
  return best;
}

void check_compatible(const ProbTensor& probs, const PriorField& priors, const DecisionConfig& cfg) {
  cfg.validate();
  if (priors.classes() != probs.classes()) {
    std::ostringstream msg;
    msg << "priors have " << priors.classes() << " classes, probabilities " << probs.classes();
    throw SchemaError(msg.str());
  }
  if (priors.mode() != cfg.prior_mode) {
    throw SchemaError("prior field mode does not match the decision config");
  }
  if (priors.mode() == PriorMode::kPositional &&
      (priors.height() != probs.height() || priors.width() != probs.width())) {
    std::ostringstream msg;
    msg << "positional priors are " << priors.height() << "x" << priors.width()
        << ", probabilities " << probs.height() << "x" << probs.width();
    throw SchemaError(msg.str());
  }
}

// Fills `ratios` with p(y|x) / max(p_alpha(y), eps) for one pixel.
void pixel_ratios(std::span<const float> p, std::span<const float> prior, const DecisionConfig& cfg,
                  std::vector<double>& ratios) {
  for (std::size_t y = 0; y < p.size(); ++y) {
    const double interpolated = (1.0 - cfg.alpha) + cfg.alpha * static_cast<double>(prior[y]);
    ratios[y] = static_cast<double>(p[y]) / std::max(interpolated, cfg.epsilon_floor);
  }
}

}  // namespace

void DecisionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (!(epsilon_floor > 0.0)) throw ValidationError("epsilon_floor must be positive");
}

PriorField estimate_priors(std::span<const LabelMask> masks, int classes, PriorMode mode) {
  if (masks.empty()) throw ValidationError("estimate_priors: no masks given");
  if (classes < 1 || classes > kIgnoreLabel) throw ValidationError("estimate_priors: bad class count");
  const int h = masks.front().height();
  const int w = masks.front().width();
  for (const auto& m : masks) {
    if (m.height() != h || m.width() != w) throw SchemaError("estimate_priors: masks differ in shape");
  }

  const auto cls = static_cast<std::size_t>(classes);
  auto check_label = [classes](ClassId v) {
    if (v != kIgnoreLabel && v >= classes) {
      throw ValidationError("estimate_priors: label " + std::to_string(v) + " >= class count");
    }
  };

  if (mode == PriorMode::kGlobal) {
    std::vector<std::uint64_t> counts(cls, 0);
    std::uint64_t total = 0;
    for (const auto& m : masks) {
      for (ClassId v : m.data()) {
        check_label(v);
        if (v == kIgnoreLabel) continue;
        ++counts[v];
        ++total;
      }
    }
    std::vector<float> data(cls, 0.0f);
    if (total > 0) {
      for (std::size_t y = 0; y < cls; ++y) {
        data[y] = static_cast<float>(static_cast<double>(counts[y]) / static_cast<double>(total));
      }
    }
    return PriorField::global(classes, std::move(data));
  }

  const std::size_t pixels = masks.front().pixel_count();
  std::vector<std::uint32_t> counts(pixels * cls, 0);
  std::vector<std::uint32_t> valid(pixels, 0);
  for (const auto& m : masks) {
    const auto labels = m.data();
    for (std::size_t i = 0; i < pixels; ++i) {
      check_label(labels[i]);
      if (labels[i] == kIgnoreLabel) continue;
      ++counts[i * cls + labels[i]];
      ++valid[i];
    }
  }
  std::vector<float> data(pixels * cls, 0.0f);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (valid[i] == 0) continue;
    for (std::size_t y = 0; y < cls; ++y) {
      data[i * cls + y] =
          static_cast<float>(static_cast<double>(counts[i * cls + y]) / static_cast<double>(valid[i]));
    }
  }
  return PriorField::positional(h, w, classes, std::move(data));
}

PriorField interpolate_priors(const PriorField& priors, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  std::vector<float> data(priors.data().size());
  std::transform(priors.data().begin(), priors.data().end(), data.begin(), [alpha](float p) {
    return static_cast<float>((1.0 - alpha) + alpha * static_cast<double>(p));
  });
  if (priors.mode() == PriorMode::kGlobal) return PriorField::global(priors.classes(), std::move(data));
  return PriorField::positional(priors.height(), priors.width(), priors.classes(), std::move(data));
}

LabelMask bayes_decision(const ProbTensor& probs) {
  LabelMask out(probs.height(), probs.width(), ClassId{0});
  for (int r = 0; r < probs.height(); ++r) {
    for (int c = 0; c < probs.width(); ++c) {
      out.set(r, c, static_cast<ClassId>(argmax(probs.pixel(r, c))));
    }
  }
  return out;
}

LabelMask decide(const ProbTensor& probs, const PriorField& priors, const DecisionConfig& cfg) {
  check_compatible(probs, priors, cfg);
  LabelMask out(probs.height(), probs.width(), ClassId{0});
  std::vector<double> ratios(static_cast<std::size_t>(probs.classes()));
  for (int r = 0; r < probs.height(); ++r) {
    for (int c = 0; c < probs.width(); ++c) {
      pixel_ratios(probs.pixel(r, c), priors.row(r, c), cfg, ratios);
      out.set(r, c, static_cast<ClassId>(argmax(std::span<const double>(ratios))));
    }
  }
  return out;
}

LikelihoodField adjusted_likelihood(const ProbTensor& probs, const PriorField& priors,
                                    const DecisionConfig& cfg) {
  check_compatible(probs, priors, cfg);
  const auto cls = static_cast<std::size_t>(probs.classes());
  std::vector<double> data(probs.pixel_count() * cls);
  std::vector<double> ratios(cls);
  std::size_t idx = 0;
  for (int r = 0; r < probs.height(); ++r) {
    for (int c = 0; c < probs.width(); ++c) {
      pixel_ratios(probs.pixel(r, c), priors.row(r, c), cfg, ratios);
      double sum = 0.0;
      for (double v : ratios) sum += v;
      for (std::size_t y = 0; y < cls; ++y) data[idx + y] = ratios[y] / sum;
      idx += cls;
    }
  }
  return LikelihoodField(probs.height(), probs.width(), probs.classes(), std::move(data));
}

LabelMask argmax_mask(const LikelihoodField& field) {
  LabelMask out(field.height(), field.width(), ClassId{0});
  for (int r = 0; r < field.height(); ++r) {
    for (int c = 0; c < field.width(); ++c) {
      out.set(r, c, static_cast<ClassId>(argmax(field.pixel(r, c))));
    }
  }
  return out;
}

}  // namespace segfuse
