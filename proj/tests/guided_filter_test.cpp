#include <doctest.h>

#include "support/oracles.hpp"
#include "tbdx/errors.hpp"
#include "tbdx/guided_filter.hpp"
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

TEST_SUITE("guided_filter") {

TEST_CASE("constant images are exact fixed points") {
  for (double value : {0.0, 0.37, 1.0}) {
    Image img(6, 7);
    img.setConstant(value);
    const Image out = denoise(img);
    CHECK((out - img).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("epsilon zero is the identity where every window varies") {
  // checkerboard: every clipped window contains both values, so var > 0,
  // x_k = 1 and y_k = 0 everywhere
  Image img(6, 6);
  for (Eigen::Index r = 0; r < 6; ++r) {
    for (Eigen::Index c = 0; c < 6; ++c) img(r, c) = static_cast<double>((r + c) % 2);
  }
  const Image out = denoise(img, {3, 0.0});
  CHECK((out - img).abs().maxCoeff() == 0.0);
}

TEST_CASE("huge epsilon degenerates to double box filtering") {
  const Image img = random_image(5, 5, 100);
  // x_k ~ var/eps <= 0.25/eps, so the double-box gap shrinks as 1/eps;
  // 1e9 pushes it below 1e-9, 1e6 only reaches the 1e-6 scale
  const Image boxed = oracle::double_box_reference(img);
  CHECK(((denoise(img, {3, 1e9}) - boxed).abs().maxCoeff()) < 1e-9);
  CHECK(((denoise(img, {3, 1e6}) - boxed).abs().maxCoeff()) < 1e-6);
  CHECK(((denoise(img, {3, 1e6}) - oracle::guided_filter_reference(img, 1e6)).abs().maxCoeff()) <
        1e-12);
}

TEST_CASE("matches the brute-force reference on a 7x7 image") {
  const Image img = random_image(7, 7, 200);
  const Image out = denoise(img);
  const Image ref = oracle::guided_filter_reference(img, 1e-4);
  CHECK((out - ref).abs().maxCoeff() < 1e-12);
}

TEST_CASE("matches the brute-force reference across sizes and epsilons") {
  std::uint64_t seed = 300;
  for (Eigen::Index h : {3, 4, 8}) {
    for (Eigen::Index w : {3, 6, 9}) {
      for (double eps : {1e-6, 1e-4, 1e-2}) {
        const Image img = random_image(h, w, seed++);
        const Image out = denoise(img, {3, eps});
        const Image ref = oracle::guided_filter_reference(img, eps);
        CHECK((out - ref).abs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("output stays inside the unit intensity range") {
  for (std::uint64_t seed : {400, 401, 402}) {
    const Image img = random_image(8, 8, seed);
    const Image out = denoise(img);
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 1.0);
  }
}

TEST_CASE("rejects bad configurations and tiny images") {
  Image img(5, 5);
  CHECK_THROWS_AS(denoise(img, {5, 1e-4}), ArgumentError);
  CHECK_THROWS_AS(denoise(img, {3, -1.0}), ArgumentError);
  CHECK_THROWS_AS(denoise(Image(2, 5)), ArgumentError);
  CHECK_THROWS_AS(denoise(Image(5, 2)), ArgumentError);
}

}  // TEST_SUITE
