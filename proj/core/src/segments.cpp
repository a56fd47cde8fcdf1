#include "segfuse/segments.hpp"

#include <algorithm>
#include <deque>

#include "segfuse/error.hpp"

namespace segfuse {

namespace {

constexpr int kNeighborRows[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighborCols[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

// Membership bitmap over the segment's bounding box grown by one pixel.
class LocalGrid {
 public:
  explicit LocalGrid(const Segment& seg)
      : row0_(seg.bbox.min_row - 1),
        col0_(seg.bbox.min_col - 1),
        rows_(seg.bbox.max_row - seg.bbox.min_row + 3),
        cols_(seg.bbox.max_col - seg.bbox.min_col + 3),
        cells_(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0) {
    for (const Pixel& p : seg.pixels) cells_[index(p.row, p.col)] = 1;
  }

  bool contains(int row, int col) const {
    if (row < row0_ || col < col0_ || row >= row0_ + rows_ || col >= col0_ + cols_) return false;
    return cells_[index(row, col)] != 0;
  }
  void mark(int row, int col) { cells_[index(row, col)] = 2; }
  bool marked(int row, int col) const { return cells_[index(row, col)] == 2; }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row - row0_) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col - col0_);
  }

  int row0_, col0_, rows_, cols_;
  std::vector<std::uint8_t> cells_;
};

double mean_over(const std::vector<Pixel>& pixels, const std::vector<double>& map, const DispersionMaps& maps) {
  double sum = 0.0;
  for (const Pixel& p : pixels) sum += map[maps.index(p.row, p.col)];
  return sum / static_cast<double>(pixels.size());
}

}  // namespace

std::vector<Segment> connected_components(const LabelMask& mask, std::optional<ClassId> class_filter) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<std::uint8_t> visited(mask.pixel_count(), 0);
  auto flat = [w](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c); };

  std::vector<Segment> segments;
  std::deque<Pixel> queue;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const ClassId cls = mask.at(r, c);
      if (visited[flat(r, c)] || cls == kIgnoreLabel) continue;
      if (class_filter && cls != *class_filter) continue;

      Segment seg;
      seg.class_id = cls;
      visited[flat(r, c)] = 1;
      queue.push_back({r, c});
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        seg.pixels.push_back(p);
        for (int k = 0; k < 8; ++k) {
          const int nr = p.row + kNeighborRows[k];
          const int nc = p.col + kNeighborCols[k];
          if (!mask.in_bounds(nr, nc) || visited[flat(nr, nc)] || mask.at(nr, nc) != cls) continue;
          visited[flat(nr, nc)] = 1;
          queue.push_back({nr, nc});
        }
      }
      std::sort(seg.pixels.begin(), seg.pixels.end());

      seg.bbox = {seg.pixels.front().row, w, seg.pixels.back().row, -1};
      for (const Pixel& p : seg.pixels) {
        seg.bbox.min_col = std::min(seg.bbox.min_col, p.col);
        seg.bbox.max_col = std::max(seg.bbox.max_col, p.col);
        bool interior = true;
        for (int k = 0; k < 8 && interior; ++k) {
          const int nr = p.row + kNeighborRows[k];
          const int nc = p.col + kNeighborCols[k];
          interior = mask.in_bounds(nr, nc) && mask.at(nr, nc) == cls;
        }
        (interior ? seg.interior : seg.boundary).push_back(p);
      }
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

std::pair<double, double> geometric_center(const Segment& seg) {
  if (seg.pixels.empty()) throw ValidationError("geometric_center: empty segment");
  double rows = 0.0;
  double cols = 0.0;
  for (const Pixel& p : seg.pixels) {
    rows += p.row;
    cols += p.col;
  }
  const auto n = static_cast<double>(seg.pixels.size());
  return {rows / n, cols / n};
}

std::vector<Pixel> neighborhood(const Segment& seg, const LabelMask& mask) {
  LocalGrid grid(seg);
  std::vector<Pixel> ring;
  for (const Pixel& p : seg.boundary) {
    for (int k = 0; k < 8; ++k) {
      const int nr = p.row + kNeighborRows[k];
      const int nc = p.col + kNeighborCols[k];
      if (!mask.in_bounds(nr, nc) || grid.contains(nr, nc) || grid.marked(nr, nc)) continue;
      grid.mark(nr, nc);
      ring.push_back({nr, nc});
    }
  }
  std::sort(ring.begin(), ring.end());
  return ring;
}

std::vector<double> neighborhood_ratios(const Segment& seg, const LabelMask& mask, int classes) {
  std::vector<double> ratios(static_cast<std::size_t>(classes), 0.0);
  const std::vector<Pixel> ring = neighborhood(seg, mask);
  if (ring.empty()) return ratios;
  for (const Pixel& p : ring) {
    const ClassId v = mask.at(p.row, p.col);
    if (v < classes) ratios[v] += 1.0;
  }
  for (double& r : ratios) r /= static_cast<double>(ring.size());
  return ratios;
}

std::vector<Segment> disagreement_set(const LabelMask& ml_mask, const LabelMask& bayes_mask,
                                      ClassId minority_class) {
  if (ml_mask.height() != bayes_mask.height() || ml_mask.width() != bayes_mask.width()) {
    throw SchemaError("disagreement_set: masks differ in shape");
  }
  std::vector<Segment> out;
  for (Segment& seg : connected_components(ml_mask, minority_class)) {
    const bool agrees = std::any_of(seg.pixels.begin(), seg.pixels.end(), [&](const Pixel& p) {
      return bayes_mask.at(p.row, p.col) == minority_class;
    });
    if (!agrees) out.push_back(std::move(seg));
  }
  return out;
}

std::vector<std::string> feature_schema(int classes) {
  std::vector<std::string> names = {
      "size",        "size_in",     "size_bd",     "bd_ratio", "rel_size",
      "E",           "M",           "V",           "E_in",     "M_in",
      "V_in",        "E_bd",        "M_bd",        "V_bd",     "G_h",
      "G_v",         "mean_pred_likelihood",
  };
  for (int y = 0; y < classes; ++y) names.push_back("N_" + std::to_string(y));
  for (int y = 0; y < classes; ++y) names.push_back("nb_likelihood_" + std::to_string(y));
  return names;
}

SegmentFeatures segment_features(const Segment& seg, const DispersionMaps& maps,
                                 const LikelihoodField& likelihood, const LabelMask& ml_mask) {
  if (seg.pixels.empty()) throw ValidationError("segment_features: empty segment");
  const int h = likelihood.height();
  const int w = likelihood.width();
  const int classes = likelihood.classes();
  if (maps.height != h || maps.width != w || ml_mask.height() != h || ml_mask.width() != w) {
    throw SchemaError("segment_features: frame shapes disagree");
  }

  SegmentFeatures f;
  auto& v = f.values;
  v.reserve(static_cast<std::size_t>(17 + 2 * classes));

  const auto size = static_cast<double>(seg.pixels.size());
  v.push_back(size);
  v.push_back(static_cast<double>(seg.interior.size()));
  v.push_back(static_cast<double>(seg.boundary.size()));
  v.push_back(static_cast<double>(seg.boundary.size()) / size);
  v.push_back(size / static_cast<double>(likelihood.pixel_count()));

  const std::vector<Pixel>& inner = seg.interior.empty() ? seg.pixels : seg.interior;
  for (const auto* region : {&seg.pixels, &inner, &seg.boundary}) {
    v.push_back(mean_over(*region, maps.entropy, maps));
    v.push_back(mean_over(*region, maps.margin, maps));
    v.push_back(mean_over(*region, maps.variation_ratio, maps));
  }

  // Normalized so the first and last row/column map to 0 and 1.
  const auto [gh, gv] = geometric_center(seg);
  v.push_back(h > 1 ? gh / static_cast<double>(h - 1) : 0.0);
  v.push_back(w > 1 ? gv / static_cast<double>(w - 1) : 0.0);

  double pred = 0.0;
  for (const Pixel& p : seg.pixels) pred += likelihood.at(p.row, p.col, seg.class_id);
  v.push_back(pred / size);

  const std::vector<Pixel> ring = neighborhood(seg, ml_mask);
  std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
  std::vector<double> ring_likelihood(static_cast<std::size_t>(classes), 0.0);
  for (const Pixel& p : ring) {
    const ClassId cls = ml_mask.at(p.row, p.col);
    if (cls < classes) counts[cls] += 1.0;
    const auto q = likelihood.pixel(p.row, p.col);
    for (int y = 0; y < classes; ++y) ring_likelihood[y] += q[y];
  }
  const double ring_size = ring.empty() ? 1.0 : static_cast<double>(ring.size());
  for (double c : counts) v.push_back(c / ring_size);
  for (double l : ring_likelihood) v.push_back(l / ring_size);
  return f;
}

}  // namespace segfuse
