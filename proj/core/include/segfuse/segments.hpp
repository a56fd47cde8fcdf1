#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "segfuse/dispersion.hpp"
#include "segfuse/tensor.hpp"

namespace segfuse {

struct Pixel {
  int row = 0;
  int col = 0;

  auto operator<=>(const Pixel&) const = default;
};

struct BoundingBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;

  bool operator==(const BoundingBox&) const = default;
};

// One 8-connected component of constant predicted class. Pixel lists are in
// scanline order. A pixel is interior when all eight neighbours exist and
// belong to the segment; everything else, including every pixel on the
// image border, is boundary.
struct Segment {
  ClassId class_id = 0;
  std::vector<Pixel> pixels;
  std::vector<Pixel> interior;
  std::vector<Pixel> boundary;
  BoundingBox bbox;

  std::size_t size() const { return pixels.size(); }
};

// Components ordered by the scanline position of their first pixel. Ignore
// pixels never form segments. With a filter only that class is extracted.
std::vector<Segment> connected_components(const LabelMask& mask,
                                          std::optional<ClassId> class_filter = std::nullopt);

// Mean (row, col) of the segment's pixels.
std::pair<double, double> geometric_center(const Segment& seg);

// Pixels of the [row +- 1] x [col +- 1] ring around the segment, clipped to
// the image, in scanline order.
std::vector<Pixel> neighborhood(const Segment& seg, const LabelMask& mask);

// Fraction of the neighbourhood ring predicted as each class. Ignore pixels
// count towards the ring size only. A segment without neighbourhood yields a
// zero vector.
std::vector<double> neighborhood_ratios(const Segment& seg, const LabelMask& mask, int classes);

// Class-c components of the ML mask on which the Bayes mask never predicts c.
std::vector<Segment> disagreement_set(const LabelMask& ml_mask, const LabelMask& bayes_mask,
                                      ClassId minority_class);

// Ordered feature names for C classes; length 17 + 2C.
std::vector<std::string> feature_schema(int classes);

struct SegmentFeatures {
  std::vector<double> values;
};

SegmentFeatures segment_features(const Segment& seg, const DispersionMaps& maps,
                                 const LikelihoodField& likelihood, const LabelMask& ml_mask);

}  // namespace segfuse
