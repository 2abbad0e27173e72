#include <doctest.h>

#include "support/oracles.hpp"
#include "tbdx/errors.hpp"
#include "tbdx/image.hpp"
#include "tbdx/rng.hpp"

using namespace tbdx;

namespace {

Image random_image(Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) img(r, c) = rng.uniform();
  }
  return img;
}

}  // namespace

TEST_SUITE("image") {

TEST_CASE("bilinear sampling interpolates and clamps") {
  Image img(2, 2);
  img << 0.0, 1.0, 1.0, 0.0;
  CHECK(sample_bilinear(img, 0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sample_bilinear(img, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sample_bilinear(img, 0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  // outside the grid: clamped neighbors
  CHECK(sample_bilinear(img, -3.0, -3.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sample_bilinear(img, 5.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));

  const Image rnd = random_image(4, 5, 17);
  Rng rng(18);
  for (int i = 0; i < 10; ++i) {
    const double y = rng.uniform() * 3.0;
    const double x = rng.uniform() * 4.0;
    CHECK(sample_bilinear(rnd, y, x) ==
          doctest::Approx(oracle::bilinear_at(rnd, y, x)).epsilon(1e-13));
  }
}

TEST_CASE("bilinear resize to the same extents is the identity") {
  const Image img = random_image(6, 7, 21);
  const Image out = resize_bilinear(img, 6, 7);
  CHECK((out - img).abs().maxCoeff() < 1e-15);
}

TEST_CASE("bilinear resize matches half-pixel-center sampling") {
  Image img(2, 2);
  img << 0.0, 1.0, 1.0, 0.0;
  const Eigen::Index n = 5;
  const Image out = resize_bilinear(img, n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double sy = (r + 0.5) * 2.0 / n - 0.5;
      const double sx = (c + 0.5) * 2.0 / n - 0.5;
      CHECK(out(r, c) == doctest::Approx(oracle::bilinear_at(img, sy, sx)).epsilon(1e-13));
    }
  }
}

TEST_CASE("nearest resize keeps masks binary") {
  Mask m(3, 3);
  m << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  const Mask up = resize_nearest(m, 8, 8);
  CHECK(up.rows() == 8);
  CHECK(up.cols() == 8);
  for (Eigen::Index r = 0; r < 8; ++r) {
    for (Eigen::Index c = 0; c < 8; ++c) {
      CHECK((up(r, c) == 0 || up(r, c) == 1));
    }
  }
  // identity-size nearest resize reproduces the mask
  const Mask same = resize_nearest(m, 3, 3);
  CHECK((same == m).all());
}

TEST_CASE("model input has replicated channels and unit range") {
  const Image img = random_image(9, 12, 33);
  const Tensord t = to_model_input(img, nullptr, 16);
  REQUIRE(t.shape() == Shape({16, 16, 3}));
  double lo = 2.0, hi = -1.0;
  for (Eigen::Index r = 0; r < 16; ++r) {
    for (Eigen::Index c = 0; c < 16; ++c) {
      const double v = t(r, c, 0);
      CHECK(t(r, c, 1) == v);
      CHECK(t(r, c, 2) == v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
}

TEST_CASE("model input at native size is normalization plus replication") {
  Image img = random_image(224, 224, 44);
  img(0, 0) = 0.0;
  img(1, 1) = 1.0;  // min-max normalization becomes the identity
  const Tensord t = to_model_input(img);
  REQUIRE(t.shape() == Shape({224, 224, 3}));
  double max_diff = 0.0;
  for (Eigen::Index r = 0; r < 224; ++r) {
    for (Eigen::Index c = 0; c < 224; ++c) {
      max_diff = std::max(max_diff, std::abs(t(r, c, 0) - img(r, c)));
    }
  }
  CHECK(max_diff < 1e-12);
}

TEST_CASE("upsampled checkerboard matches the interpolation oracle") {
  Image img(2, 2);
  img << 0.0, 1.0, 1.0, 0.0;
  const Eigen::Index n = 224;
  const Tensord t = to_model_input(img, nullptr, n);
  CHECK(t.array().minCoeff() >= 0.0);
  CHECK(t.array().maxCoeff() <= 1.0);
  const Eigen::Index probes[10][2] = {{0, 0},     {0, 223},  {223, 0},  {223, 223}, {112, 112},
                                      {37, 150},  {75, 20},  {160, 99}, {5, 210},   {200, 3}};
  for (const auto& p : probes) {
    const double sy = (p[0] + 0.5) * 2.0 / n - 0.5;
    const double sx = (p[1] + 0.5) * 2.0 / n - 0.5;
    CHECK(t(p[0], p[1], 0) == doctest::Approx(oracle::bilinear_at(img, sy, sx)).epsilon(1e-13));
  }
}

TEST_CASE("constant images normalize to zeros") {
  Image img(10, 10);
  img.setConstant(0.42);
  const Tensord t = to_model_input(img, nullptr, 8);
  CHECK(t.array().abs().maxCoeff() == 0.0);
}

TEST_CASE("mask zeroes the background and crops to the foreground box") {
  Image img(8, 8);
  img.setConstant(1.0);
  img.block(2, 3, 3, 2) = 0.5;  // rows 2..4, cols 3..4
  Mask mask = Mask::Zero(8, 8);
  mask.block(2, 3, 3, 2) = 1;

  // inside the crop everything is 0.5 -> constant -> zeros
  const Tensord t = to_model_input(img, &mask, 6);
  REQUIRE(t.shape() == Shape({6, 6, 3}));
  CHECK(t.array().abs().maxCoeff() == 0.0);

  // a mask leaving two intensity levels inside its box keeps the contrast
  Mask wide = Mask::Zero(8, 8);
  wide.block(1, 1, 5, 6) = 1;
  const Tensord u = to_model_input(img, &wide, 8);
  CHECK(u.array().maxCoeff() == 1.0);
  CHECK(u.array().minCoeff() == 0.0);
}

TEST_CASE("masked input ignores intensities outside the mask") {
  Image a = random_image(10, 10, 55);
  Image b = a;
  Mask mask = Mask::Zero(10, 10);
  mask.block(3, 3, 4, 4) = 1;
  // perturb only background pixels
  b(0, 0) = 0.99;
  b(9, 9) = 0.01;
  const Tensord ta = to_model_input(a, &mask, 12);
  const Tensord tb = to_model_input(b, &mask, 12);
  CHECK((ta.array() - tb.array()).abs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate and mismatched masks are rejected") {
  const Image img = random_image(6, 6, 66);
  Mask empty = Mask::Zero(6, 6);
  CHECK_THROWS_AS(to_model_input(img, &empty, 8), DegenerateMaskError);
  Mask wrong = Mask::Zero(5, 6);
  CHECK_THROWS_AS(to_model_input(img, &wrong, 8), ShapeError);
  CHECK_THROWS_AS(to_model_input(img, nullptr, 0), ArgumentError);
  CHECK_THROWS_AS(to_model_input(Image(0, 0), nullptr, 8), ArgumentError);
}

}  // TEST_SUITE
