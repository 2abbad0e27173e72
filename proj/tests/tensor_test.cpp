#include <doctest.h>

#include "tbdx/tensor.hpp"

using namespace tbdx;

TEST_SUITE("tensor") {

TEST_CASE("reshape reinterprets shape and keeps the data sequence") {
  Tensord t(Shape{7, 7, 512});
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  const Tensord r = reshape(t, Shape{49, 512});
  CHECK(r.shape() == Shape{49, 512});
  for (Eigen::Index i = 0; i < r.size(); ++i) CHECK(r[i] == t[i]);
}

TEST_CASE("reshape round trip restores the original") {
  Tensord t(Shape{5}, {1, 2, 3, 4, 5});
  const Tensord back = reshape(reshape(t, Shape{5, 1}), Shape{5});
  CHECK(back.shape() == t.shape());
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(back[i] == t[i]);
}

TEST_CASE("reshape (2,3) to (3,2) keeps row-major order") {
  Tensord t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensord r = reshape(t, Shape{3, 2});
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(r[i] == static_cast<double>(i + 1));
  CHECK(r(0, 1) == 2.0);
  CHECK(r(2, 1) == 6.0);
}

TEST_CASE("reshape with mismatched product throws") {
  Tensord t(Shape{2, 3});
  CHECK_THROWS_AS(reshape(t, Shape{4, 2}), ShapeError);
}

TEST_CASE("concat_last merges the trailing axis") {
  Tensord a(Shape{49, 256}), b(Shape{49, 256});
  a.array().setConstant(1.0);
  b.array().setConstant(2.0);
  const Tensord out = concat_last(a, b);
  CHECK(out.shape() == Shape{49, 512});
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 256) == 2.0);
  CHECK(out(48, 511) == 2.0);
}

TEST_CASE("concat_last with an empty operand returns the other") {
  Tensord a(Shape{3, 0});
  Tensord b(Shape{3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const Tensord out = concat_last(a, b);
  CHECK(out.shape() == Shape{3, 4});
  for (Eigen::Index i = 0; i < 12; ++i) CHECK(out[i] == b[i]);
}

TEST_CASE("concat_last interleaves rows in row-major layout") {
  Tensord a(Shape{2, 1}, {1, 2});
  Tensord b(Shape{2, 2}, {3, 4, 5, 6});
  const Tensord out = concat_last(a, b);
  CHECK(out.shape() == Shape{2, 3});
  const double want[] = {1, 3, 4, 2, 5, 6};
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(out[i] == want[i]);
}

TEST_CASE("concat_last rejects mismatched leading shapes") {
  Tensord a(Shape{2, 2}), b(Shape{3, 2});
  CHECK_THROWS_AS(concat_last(a, b), ShapeError);
}

TEST_CASE("slices recover both concat operands exactly") {
  Tensord a(Shape{4, 3}), b(Shape{4, 5});
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = 0.1 * i;
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = -0.2 * i;
  const Tensord joined = concat_last(a, b);
  const Tensord back_a = slice_last(joined, 0, 3);
  const Tensord back_b = slice_last(joined, 3, 5);
  CHECK(back_a.shape() == a.shape());
  CHECK(back_b.shape() == b.shape());
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(back_a[i] == a[i]);
  for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(back_b[i] == b[i]);
}

TEST_CASE("flatten produces the row-major vector") {
  Tensord t(Shape{49, 256});
  CHECK(flatten(t).shape() == Shape{12544});

  Tensord one(Shape{1}, {3.5});
  CHECK(flatten(one).shape() == Shape{1});
  CHECK(flatten(one)[0] == 3.5);

  Tensord sq(Shape{2, 2}, {1, 2, 3, 4});
  const Tensord f = flatten(sq);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(f[i] == static_cast<double>(i + 1));
}

TEST_CASE("flatten commutes with reshape") {
  Tensord t(Shape{3, 4, 2});
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = i * 0.7 - 3.0;
  const Tensord direct = flatten(t);
  const Tensord via = flatten(reshape(t, Shape{6, 4}));
  for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(direct[i] == via[i]);
}

TEST_CASE("matrix view covers the payload or throws") {
  Tensord t(Shape{2, 6});
  CHECK(t.as_matrix(3, 4).rows() == 3);
  CHECK_THROWS_AS(t.as_matrix(5, 2), ShapeError);
}

}  // TEST_SUITE
