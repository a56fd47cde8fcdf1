#pragma once

#include <span>
#include <vector>

#include "segfuse/tensor.hpp"

namespace segfuse {

struct PixelDispersion {
  double entropy = 0.0;          // normalized by log(C), in [0, 1]
  double margin = 0.0;           // 1 - q(top) + q(second)
  double variation_ratio = 0.0;  // 1 - q(top)
};

// Dispersion of one normalized class distribution. Uses 0 * log 0 = 0 and the
// lowest index among maxima as the predicted class. Throws for fewer than two
// classes.
PixelDispersion pixel_dispersion(std::span<const double> q);

// Row-major H x W heatmaps.
struct DispersionMaps {
  int height = 0;
  int width = 0;
  std::vector<double> entropy;
  std::vector<double> margin;
  std::vector<double> variation_ratio;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
};

DispersionMaps dispersion_maps(const LikelihoodField& likelihood);

}  // namespace segfuse
