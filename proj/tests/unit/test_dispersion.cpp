#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "segfuse/dispersion.hpp"
#include "segfuse/error.hpp"

namespace segfuse {
namespace {

TEST(Dispersion, UniformIsMaximal) {
  for (int classes = 2; classes <= 12; ++classes) {
    const std::vector<double> q(classes, 1.0 / classes);
    const PixelDispersion d = pixel_dispersion(q);
    EXPECT_NEAR(d.entropy, 1.0, 1e-12);
    EXPECT_NEAR(d.margin, 1.0, 1e-12);
    EXPECT_NEAR(d.variation_ratio, 1.0 - 1.0 / classes, 1e-12);
  }
}

TEST(Dispersion, OneHotIsZero) {
  const PixelDispersion d = pixel_dispersion(std::vector<double>{0, 0, 1, 0});
  EXPECT_EQ(d.entropy, 0.0);
  EXPECT_EQ(d.margin, 0.0);
  EXPECT_EQ(d.variation_ratio, 0.0);
}

TEST(Dispersion, TwoWayTieOverFourClasses) {
  const PixelDispersion d = pixel_dispersion(std::vector<double>{0.5, 0.5, 0, 0});
  EXPECT_NEAR(d.entropy, 0.5, 1e-12);
  EXPECT_NEAR(d.margin, 1.0, 1e-12);
  EXPECT_NEAR(d.variation_ratio, 0.5, 1e-12);
}

TEST(Dispersion, ThreeClassExample) {
  const PixelDispersion d = pixel_dispersion(std::vector<double>{0.7, 0.2, 0.1});
  const double e = -(0.7 * std::log(0.7) + 0.2 * std::log(0.2) + 0.1 * std::log(0.1)) / std::log(3.0);
  EXPECT_NEAR(d.entropy, e, 1e-12);
  EXPECT_NEAR(d.entropy, 0.7299, 1e-4);
  EXPECT_NEAR(d.margin, 0.5, 1e-12);
  EXPECT_NEAR(d.variation_ratio, 0.3, 1e-12);
}

TEST(Dispersion, RequiresTwoClasses) {
  EXPECT_THROW(pixel_dispersion(std::vector<double>{1.0}), ValidationError);
  EXPECT_THROW(dispersion_maps(LikelihoodField(1, 1, 1, {1.0})), ValidationError);
}

TEST(Dispersion, MapsArePixelwise) {
  const LikelihoodField f(1, 2, 3, {0.7, 0.2, 0.1, 1.0 / 3, 1.0 / 3, 1.0 / 3});
  const DispersionMaps m = dispersion_maps(f);
  ASSERT_EQ(m.entropy.size(), 2u);
  EXPECT_NEAR(m.margin[m.index(0, 0)], 0.5, 1e-12);
  EXPECT_NEAR(m.entropy[m.index(0, 1)], 1.0, 1e-12);
  EXPECT_NEAR(m.variation_ratio[m.index(0, 1)], 2.0 / 3, 1e-12);
}

}  // namespace
}  // namespace segfuse
