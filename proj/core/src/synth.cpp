#include "segfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

constexpr int kNoiseRadius = 1;  // box-filter radius of the logit noise
constexpr double kMinConfidence = 0.4;
constexpr double kMaxConfidence = 1.4;

struct Canvas {
  int height;
  int width;
  std::vector<ClassId> labels;
  std::vector<double> confidence;

  void paint(int r, int c, ClassId cls, double conf) {
    const auto i = static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c);
    labels[i] = cls;
    confidence[i] = conf;
  }
};

void draw_ellipse(Canvas& canvas, double cy, double cx, double ry, double rx, ClassId cls, double conf) {
  const int r0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
  const int r1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(cy + ry)));
  const int c0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
  const int c1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(cx + rx)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double dy = (r - cy) / ry;
      const double dx = (c - cx) / rx;
      if (dy * dy + dx * dx <= 1.0) canvas.paint(r, c, cls, conf);
    }
  }
  const int pr = static_cast<int>(cy);
  const int pc = static_cast<int>(cx);
  if (pr >= 0 && pc >= 0 && pr < canvas.height && pc < canvas.width) canvas.paint(pr, pc, cls, conf);
}

void draw_rect(Canvas& canvas, double cy, double cx, double hy, double hx, ClassId cls, double conf) {
  const int r0 = std::max(0, static_cast<int>(std::lround(cy - hy)));
  const int r1 = std::min(canvas.height - 1, static_cast<int>(std::lround(cy + hy)));
  const int c0 = std::max(0, static_cast<int>(std::lround(cx - hx)));
  const int c1 = std::min(canvas.width - 1, static_cast<int>(std::lround(cx + hx)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) canvas.paint(r, c, cls, conf);
  }
}

// Unit-variance Gaussian field with short-range spatial correlation.
std::vector<double> smooth_noise(int height, int width, std::mt19937_64& rng) {
  const int pad = kNoiseRadius;
  const int ph = height + 2 * pad;
  const int pw = width + 2 * pad;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(static_cast<std::size_t>(ph) * static_cast<std::size_t>(pw));
  for (double& v : white) v = normal(rng);

  const int taps = 2 * kNoiseRadius + 1;
  const double norm = 1.0 / static_cast<double>(taps);  // sqrt(1 / taps^2)
  std::vector<double> out(static_cast<std::size_t>(height) * static_cast<std::size_t>(width));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double sum = 0.0;
      for (int dr = 0; dr < taps; ++dr) {
        for (int dc = 0; dc < taps; ++dc) {
          sum += white[static_cast<std::size_t>(r + dr) * static_cast<std::size_t>(pw) +
                       static_cast<std::size_t>(c + dc)];
        }
      }
      out[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] =
          sum * norm;
    }
  }
  return out;
}

}  // namespace

void SceneSpec::validate() const {
  if (height < 1 || width < 1) throw ValidationError("scene: height and width must be positive");
  if (classes < 2 || classes > kIgnoreLabel) throw ValidationError("scene: need 2..254 classes");
  if (minority_class >= classes) throw ValidationError("scene: minority class out of range");
  if (!(minority_pixel_fraction > 0.0 && minority_pixel_fraction < 1.0 / classes)) {
    throw ValidationError("scene: minority fraction must lie in (0, 1/classes)");
  }
  if (!(minority_confidence_deficit >= 0.0 && minority_confidence_deficit < 1.0)) {
    throw ValidationError("scene: deficit must lie in [0, 1)");
  }
  if (blob_count_range.first < 0 || blob_count_range.second < blob_count_range.first) {
    throw ValidationError("scene: bad blob count range");
  }
  if (!(noise_temperature > 0.0)) throw ValidationError("scene: noise temperature must be positive");
  if (!(logit_scale > 0.0)) throw ValidationError("scene: logit scale must be positive");
}

SyntheticFrame generate_scene(const SceneSpec& spec, std::uint64_t index) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int h = spec.height;
  const int w = spec.width;
  const ClassId minority = spec.minority_class;
  const ClassId background = minority == 0 ? 1 : 0;
  std::vector<ClassId> majority;
  for (int y = 0; y < spec.classes; ++y) {
    if (y != minority && y != background) majority.push_back(static_cast<ClassId>(y));
  }

  Canvas canvas{h, w, std::vector<ClassId>(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), background),
                std::vector<double>(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 1.0)};

  const int blobs = std::uniform_int_distribution<int>(spec.blob_count_range.first,
                                                       spec.blob_count_range.second)(rng);
  for (int b = 0; b < blobs && !majority.empty(); ++b) {
    const ClassId cls = majority[std::uniform_int_distribution<std::size_t>(0, majority.size() - 1)(rng)];
    const double cy = uniform(0.0, h);
    const double cx = uniform(0.0, w);
    const double ry = uniform(h / 12.0, h / 5.0);
    const double rx = uniform(w / 12.0, w / 5.0);
    const double conf = uniform(kMinConfidence, kMaxConfidence);
    if (unit(rng) < 0.5) {
      draw_ellipse(canvas, cy, cx, ry, rx, cls, conf);
    } else {
      draw_rect(canvas, cy, cx, ry, rx, cls, conf);
    }
  }

  // One to three upright minority objects whose areas add up to the target
  // fraction on average.
  const int objects = std::uniform_int_distribution<int>(1, 3)(rng);
  const double mean_area = spec.minority_pixel_fraction * h * w / 2.0;
  for (int k = 0; k < objects; ++k) {
    const double area = mean_area * uniform(0.5, 1.5);
    const double aspect = uniform(1.2, 2.5);
    const double ry = std::sqrt(area * aspect / std::numbers::pi);
    const double rx = area / (std::numbers::pi * ry);
    const double cy = uniform(0.0, h);
    const double cx = uniform(0.0, w);
    draw_ellipse(canvas, cy, cx, ry, rx, minority, uniform(kMinConfidence, kMaxConfidence));
  }

  const auto classes = static_cast<std::size_t>(spec.classes);
  std::vector<std::vector<double>> noise;
  noise.reserve(classes);
  for (std::size_t y = 0; y < classes; ++y) noise.push_back(smooth_noise(h, w, rng));

  const double scale = spec.logit_scale;
  const double deficit = spec.minority_confidence_deficit * scale;
  std::vector<float> probs(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * classes);
  std::vector<double> logits(classes);
  for (std::size_t i = 0; i < canvas.labels.size(); ++i) {
    double top = -1e300;
    for (std::size_t y = 0; y < classes; ++y) {
      double l = spec.noise_temperature * noise[y][i];
      if (canvas.labels[i] == y) l += scale * canvas.confidence[i];
      if (y == minority) l -= deficit;
      logits[y] = l;
      top = std::max(top, l);
    }
    double sum = 0.0;
    for (double& l : logits) {
      l = std::exp(l - top);
      sum += l;
    }
    for (std::size_t y = 0; y < classes; ++y) probs[i * classes + y] = static_cast<float>(logits[y] / sum);
  }

  return {ProbTensor(h, w, spec.classes, std::move(probs)), LabelMask(h, w, std::move(canvas.labels))};
}

}  // namespace segfuse
