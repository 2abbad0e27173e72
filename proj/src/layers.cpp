#include "tbdx/layers.hpp"

#include <algorithm>
#include <cmath>

namespace tbdx {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_conv_input(const ConvLayer& layer, const Tensord& x) {
  if (x.rank() != 3) {
    throw ShapeError("conv2d: input must be (h, w, c), got " + shape_string(x.shape()));
  }
  if (layer.weights.rank() != 4 || layer.weights.extent(0) != 3 || layer.weights.extent(1) != 3) {
    throw ShapeError("conv2d: weights must be (3, 3, c_in, c_out), got " +
                     shape_string(layer.weights.shape()));
  }
  if (x.extent(2) != layer.in_channels()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.extent(2)) + " channels, layer expects " +
                     std::to_string(layer.in_channels()));
  }
  if (layer.bias.size() != layer.out_channels()) {
    throw ShapeError("conv2d: bias length does not match output channels");
  }
}

// Patch matrix rows for output positions [row_begin, row_end) x all columns.
// Each row holds the 3x3xC receptive field around one pixel, zero padded.
void fill_patches(const Tensord& x, Eigen::Index row_begin, Eigen::Index row_end,
                  RowMatrix& patches) {
  const Eigen::Index h = x.extent(0), w = x.extent(1), c = x.extent(2);
  patches.setZero();
  Eigen::Index out_row = 0;
  for (Eigen::Index i = row_begin; i < row_end; ++i) {
    for (Eigen::Index j = 0; j < w; ++j, ++out_row) {
      double* dst = patches.data() + out_row * patches.cols();
      for (Eigen::Index di = 0; di < 3; ++di) {
        const Eigen::Index si = i + di - 1;
        if (si < 0 || si >= h) continue;
        for (Eigen::Index dj = 0; dj < 3; ++dj) {
          const Eigen::Index sj = j + dj - 1;
          if (sj < 0 || sj >= w) continue;
          const double* src = x.data() + (si * w + sj) * c;
          std::copy(src, src + c, dst + (di * 3 + dj) * c);
        }
      }
    }
  }
}

// Rows of output positions handled per patch-matrix chunk; fixed per layer
// geometry so repeated calls are bit-identical.
Eigen::Index chunk_rows(Eigen::Index w, Eigen::Index patch_cols) {
  const Eigen::Index budget = (Eigen::Index{16} << 20) / (8 * patch_cols);
  return std::max<Eigen::Index>(1, budget / w) * w;
}

}  // namespace

Tensord conv2d_forward(const ConvLayer& layer, const Tensord& x) {
  check_conv_input(layer, x);
  const Eigen::Index h = x.extent(0), w = x.extent(1), c_in = x.extent(2);
  const Eigen::Index c_out = layer.out_channels();
  const Eigen::Index patch_cols = 9 * c_in;

  Tensord out(Shape{h, w, c_out});
  auto weight_mat = layer.weights.as_matrix(patch_cols, c_out);
  auto out_mat = out.as_matrix(h * w, c_out);

  const Eigen::Index rows_per_chunk = chunk_rows(w, patch_cols);
  RowMatrix patches(rows_per_chunk, patch_cols);
  for (Eigen::Index begin = 0; begin < h * w; begin += rows_per_chunk) {
    const Eigen::Index count = std::min(rows_per_chunk, h * w - begin);
    if (patches.rows() != count) patches.resize(count, patch_cols);
    fill_patches(x, begin / w, (begin + count) / w, patches);
    out_mat.middleRows(begin, count).noalias() = patches * weight_mat;
  }
  out_mat.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(layer.bias.data(), c_out);
  return out;
}

ConvGrads conv2d_backward(const ConvLayer& layer, const Tensord& x, const Tensord& grad_out) {
  check_conv_input(layer, x);
  const Eigen::Index h = x.extent(0), w = x.extent(1), c_in = x.extent(2);
  const Eigen::Index c_out = layer.out_channels();
  if (grad_out.shape() != Shape{h, w, c_out}) {
    throw ShapeError("conv2d_backward: grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match output " + shape_string(Shape{h, w, c_out}));
  }
  const Eigen::Index patch_cols = 9 * c_in;

  ConvGrads grads{Tensord(x.shape()), Tensord(layer.weights.shape()), Tensord(layer.bias.shape())};
  auto grad_out_mat = grad_out.as_matrix(h * w, c_out);
  auto weight_mat = layer.weights.as_matrix(patch_cols, c_out);
  auto grad_weight_mat = grads.weights.as_matrix(patch_cols, c_out);
  grads.bias.array() = grad_out_mat.colwise().sum().transpose().array();

  const Eigen::Index rows_per_chunk = chunk_rows(w, patch_cols);
  RowMatrix patches(rows_per_chunk, patch_cols);
  RowMatrix patch_grads(rows_per_chunk, patch_cols);
  for (Eigen::Index begin = 0; begin < h * w; begin += rows_per_chunk) {
    const Eigen::Index count = std::min(rows_per_chunk, h * w - begin);
    if (patches.rows() != count) {
      patches.resize(count, patch_cols);
      patch_grads.resize(count, patch_cols);
    }
    fill_patches(x, begin / w, (begin + count) / w, patches);
    grad_weight_mat.noalias() += patches.transpose() * grad_out_mat.middleRows(begin, count);
    // Scatter-add of the patch gradients mirrors fill_patches exactly.
    patch_grads.noalias() = grad_out_mat.middleRows(begin, count) * weight_mat.transpose();
    Eigen::Index local = 0;
    for (Eigen::Index i = begin / w; i < (begin + count) / w; ++i) {
      for (Eigen::Index j = 0; j < w; ++j, ++local) {
        const double* src = patch_grads.data() + local * patch_cols;
        for (Eigen::Index di = 0; di < 3; ++di) {
          const Eigen::Index si = i + di - 1;
          if (si < 0 || si >= h) continue;
          for (Eigen::Index dj = 0; dj < 3; ++dj) {
            const Eigen::Index sj = j + dj - 1;
            if (sj < 0 || sj >= w) continue;
            double* dst = grads.input.data() + (si * w + sj) * c_in;
            const double* cell = src + (di * 3 + dj) * c_in;
            for (Eigen::Index ch = 0; ch < c_in; ++ch) dst[ch] += cell[ch];
          }
        }
      }
    }
  }
  return grads;
}

MaxPool maxpool_forward(const Tensord& x) {
  if (x.rank() != 3) {
    throw ShapeError("maxpool: input must be (h, w, c), got " + shape_string(x.shape()));
  }
  const Eigen::Index h = x.extent(0), w = x.extent(1), c = x.extent(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool: spatial extents must be even, got " + shape_string(x.shape()));
  }
  MaxPool pool;
  pool.input_shape = x.shape();
  pool.output = Tensord(Shape{h / 2, w / 2, c});
  pool.argmax.resize(static_cast<std::size_t>(pool.output.size()));
  Eigen::Index cell = 0;
  for (Eigen::Index i = 0; i < h; i += 2) {
    for (Eigen::Index j = 0; j < w; j += 2) {
      for (Eigen::Index ch = 0; ch < c; ++ch, ++cell) {
        Eigen::Index best = (i * w + j) * c + ch;
        double best_value = x[best];
        // Strict > keeps the first row-major winner on ties.
        for (int win = 1; win < 4; ++win) {
          const Eigen::Index idx = ((i + win / 2) * w + (j + win % 2)) * c + ch;
          if (x[idx] > best_value) {
            best_value = x[idx];
            best = idx;
          }
        }
        pool.output[cell] = best_value;
        pool.argmax[static_cast<std::size_t>(cell)] = best;
      }
    }
  }
  return pool;
}

Tensord maxpool_backward(const MaxPool& pool, const Tensord& grad_out) {
  if (grad_out.shape() != pool.output.shape()) {
    throw ShapeError("maxpool_backward: grad_out shape " + shape_string(grad_out.shape()) +
                     " does not match pooled output " + shape_string(pool.output.shape()));
  }
  Tensord grad(pool.input_shape);
  for (Eigen::Index cell = 0; cell < grad_out.size(); ++cell) {
    grad[pool.argmax[static_cast<std::size_t>(cell)]] += grad_out[cell];
  }
  return grad;
}

Tensord relu(const Tensord& x) {
  return Tensord(x.shape(), x.array().max(0.0));
}

Tensord relu_backward(const Tensord& x, const Tensord& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward: shape mismatch");
  }
  return Tensord(x.shape(), (x.array() > 0.0).select(grad_out.array(), 0.0));
}

Tensord dense_forward(const DenseLayer& layer, const Tensord& x) {
  const Eigen::Index d_in = layer.weights.extent(0), d_out = layer.weights.extent(1);
  if (x.size() != d_in) {
    throw ShapeError("dense: input length " + std::to_string(x.size()) + ", layer expects " +
                     std::to_string(d_in));
  }
  Tensord out(Shape{d_out});
  out.as_matrix(1, d_out).noalias() =
      x.as_matrix(1, d_in) * layer.weights.as_matrix(d_in, d_out);
  out.array() += layer.bias.array();
  return out;
}

DenseGrads dense_backward(const DenseLayer& layer, const Tensord& x, const Tensord& grad_out) {
  const Eigen::Index d_in = layer.weights.extent(0), d_out = layer.weights.extent(1);
  if (x.size() != d_in || grad_out.size() != d_out) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  DenseGrads grads{Tensord(x.shape()), Tensord(layer.weights.shape()), Tensord(layer.bias.shape())};
  grads.weights.as_matrix(d_in, d_out).noalias() =
      x.as_matrix(d_in, 1) * grad_out.as_matrix(1, d_out);
  grads.bias.array() = grad_out.array();
  grads.input.as_matrix(1, d_in).noalias() =
      grad_out.as_matrix(1, d_out) * layer.weights.as_matrix(d_in, d_out).transpose();
  return grads;
}

Tensord softmax(const Tensord& logits) {
  if (logits.size() < 1) throw ArgumentError("softmax: empty input");
  Tensord out(logits.shape(), (logits.array() - logits.array().maxCoeff()).exp());
  out.array() /= out.array().sum();
  return out;
}

double cross_entropy(const Tensord& probs, int label) {
  if (label < 0 || label >= probs.size()) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(probs.size()) + ")");
  }
  return -std::log(probs[label] + 1e-12);
}

Tensord cross_entropy_logit_grad(const Tensord& probs, int label) {
  if (label < 0 || label >= probs.size()) {
    throw ArgumentError("cross_entropy: label out of range");
  }
  Tensord grad = probs;
  grad[label] -= 1.0;
  return grad;
}

}  // namespace tbdx
