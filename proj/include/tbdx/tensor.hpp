#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tbdx/errors.hpp"

namespace tbdx {

using Shape = std::vector<Eigen::Index>;

inline Eigen::Index shape_product(const Shape& shape) {
  Eigen::Index n = 1;
  for (Eigen::Index extent : shape) {
    if (extent < 0) throw ShapeError("negative extent in shape");
    n *= extent;
  }
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

/// Dense N-dimensional array with row-major layout and a fixed shape.
/// The payload is an Eigen array, so elementwise work composes with Eigen
/// expressions through array(); matrix views over contiguous spans come from
/// as_matrix(). Layout is always row-major: reshape reinterprets the shape
/// and never moves data.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixView =
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixView =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(Storage::Zero(shape_product(shape_))) {}

  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
      throw ShapeError("shape " + shape_string(shape_) + " does not match payload of " +
                       std::to_string(data_.size()) + " values");
    }
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), Storage::Map(values.begin(),
                                              static_cast<Eigen::Index>(values.size()))) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape& shape() const { return shape_; }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(shape_.size()); }
  Eigen::Index extent(Eigen::Index dim) const { return shape_[static_cast<std::size_t>(dim)]; }
  Eigen::Index size() const { return data_.size(); }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Eigen::Index i) { return data_[i]; }
  Scalar operator[](Eigen::Index i) const { return data_[i]; }

  Scalar& operator()(Eigen::Index i) { return data_[i]; }
  Scalar operator()(Eigen::Index i) const { return data_[i]; }
  Scalar& operator()(Eigen::Index i, Eigen::Index j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return data_[i * shape_[1] + j]; }
  Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Scalar operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  Scalar operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  /// Row-major matrix view over the contiguous payload. rows*cols must cover
  /// the tensor exactly.
  MatrixView as_matrix(Eigen::Index rows, Eigen::Index cols) {
    check_view(rows, cols);
    return MatrixView(data_.data(), rows, cols);
  }
  ConstMatrixView as_matrix(Eigen::Index rows, Eigen::Index cols) const {
    check_view(rows, cols);
    return ConstMatrixView(data_.data(), rows, cols);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  void check_view(Eigen::Index rows, Eigen::Index cols) const {
    if (rows * cols != data_.size()) {
      throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " does not cover tensor " + shape_string(shape_));
    }
  }

  Shape shape_;
  Storage data_;
};

using Tensord = Tensor<double>;
using Tensorf = Tensor<float>;

/// Reinterprets the shape; the value sequence is untouched.
template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& t, Shape new_shape) {
  if (shape_product(new_shape) != t.size()) {
    throw ShapeError("cannot reshape " + shape_string(t.shape()) + " to " +
                     shape_string(new_shape));
  }
  return Tensor<Scalar>(std::move(new_shape), t.array());
}

template <typename Scalar>
Tensor<Scalar> flatten(const Tensor<Scalar>& t) {
  return Tensor<Scalar>(Shape{t.size()}, t.array());
}

/// Concatenates along the last axis. All leading extents must agree.
template <typename Scalar>
Tensor<Scalar> concat_last(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rank() != b.rank() || a.rank() == 0) {
    throw ShapeError("concat_last: rank mismatch between " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  for (Eigen::Index d = 0; d + 1 < a.rank(); ++d) {
    if (a.extent(d) != b.extent(d)) {
      throw ShapeError("concat_last: leading extents differ, " + shape_string(a.shape()) +
                       " vs " + shape_string(b.shape()));
    }
  }
  const Eigen::Index last_a = a.extent(a.rank() - 1);
  const Eigen::Index last_b = b.extent(b.rank() - 1);
  Shape out_shape = a.shape();
  out_shape.back() = last_a + last_b;
  Tensor<Scalar> out(std::move(out_shape));
  const Eigen::Index rows = last_a + last_b == 0 ? 0 : out.size() / (last_a + last_b);
  for (Eigen::Index r = 0; r < rows; ++r) {
    out.array().segment(r * (last_a + last_b), last_a) = a.array().segment(r * last_a, last_a);
    out.array().segment(r * (last_a + last_b) + last_a, last_b) =
        b.array().segment(r * last_b, last_b);
  }
  return out;
}

/// Takes `count` entries starting at `begin` along the last axis.
template <typename Scalar>
Tensor<Scalar> slice_last(const Tensor<Scalar>& t, Eigen::Index begin, Eigen::Index count) {
  if (t.rank() == 0) throw ShapeError("slice_last: rank-0 tensor");
  const Eigen::Index last = t.extent(t.rank() - 1);
  if (begin < 0 || count < 0 || begin + count > last) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside extent " + std::to_string(last));
  }
  Shape out_shape = t.shape();
  out_shape.back() = count;
  Tensor<Scalar> out(std::move(out_shape));
  const Eigen::Index rows = last == 0 ? 0 : t.size() / last;
  for (Eigen::Index r = 0; r < rows; ++r) {
    out.array().segment(r * count, count) = t.array().segment(r * last + begin, count);
  }
  return out;
}

}  // namespace tbdx
