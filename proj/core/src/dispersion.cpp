#include "segfuse/dispersion.hpp"

#include <cmath>

#include "segfuse/error.hpp"

namespace segfuse {

PixelDispersion pixel_dispersion(std::span<const double> q) {
  if (q.size() < 2) throw ValidationError("dispersion measures need at least two classes");

  std::size_t top = 0;
  double plogp = 0.0;
  for (std::size_t y = 0; y < q.size(); ++y) {
    if (q[y] > q[top]) top = y;
    if (q[y] > 0.0) plogp += q[y] * std::log(q[y]);
  }
  double second = 0.0;
  for (std::size_t y = 0; y < q.size(); ++y) {
    if (y != top && q[y] > second) second = q[y];
  }

  PixelDispersion d;
  // -0.0 from an exact one-hot pixel would print oddly in dumps.
  d.entropy = plogp == 0.0 ? 0.0 : -plogp / std::log(static_cast<double>(q.size()));
  d.margin = 1.0 - q[top] + second;
  d.variation_ratio = 1.0 - q[top];
  return d;
}

DispersionMaps dispersion_maps(const LikelihoodField& likelihood) {
  if (likelihood.classes() < 2) throw ValidationError("dispersion measures need at least two classes");
  DispersionMaps maps;
  maps.height = likelihood.height();
  maps.width = likelihood.width();
  const std::size_t n = likelihood.pixel_count();
  maps.entropy.resize(n);
  maps.margin.resize(n);
  maps.variation_ratio.resize(n);
  for (int r = 0; r < maps.height; ++r) {
    for (int c = 0; c < maps.width; ++c) {
      const PixelDispersion d = pixel_dispersion(likelihood.pixel(r, c));
      const std::size_t i = maps.index(r, c);
      maps.entropy[i] = d.entropy;
      maps.margin[i] = d.margin;
      maps.variation_ratio[i] = d.variation_ratio;
    }
  }
  return maps;
}

}  // namespace segfuse
