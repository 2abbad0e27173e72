#pragma once

#include <vector>

#include "tbdx/tensor.hpp"

namespace tbdx {

/// 3x3 convolution with stride 1 and one pixel of zero padding on each side,
/// so spatial extents are preserved. Weights are stored (3, 3, c_in, c_out)
/// channels-last, matching the (H, W, C) activation layout.
struct ConvLayer {
  Tensord weights;  // (3, 3, c_in, c_out)
  Tensord bias;     // (c_out,)

  Eigen::Index in_channels() const { return weights.extent(2); }
  Eigen::Index out_channels() const { return weights.extent(3); }
};

Tensord conv2d_forward(const ConvLayer& layer, const Tensord& x);

struct ConvGrads {
  Tensord input;
  Tensord weights;
  Tensord bias;
};

ConvGrads conv2d_backward(const ConvLayer& layer, const Tensord& x, const Tensord& grad_out);

/// 2x2 max pooling over disjoint windows. The argmax record stores, per
/// output cell, the linear index of the winning input value; ties go to the
/// first element in row-major window order.
struct MaxPool {
  Tensord output;                    // (h/2, w/2, c)
  std::vector<Eigen::Index> argmax;  // linear index into the input, per output cell
  Shape input_shape;
};

MaxPool maxpool_forward(const Tensord& x);
Tensord maxpool_backward(const MaxPool& pool, const Tensord& grad_out);

Tensord relu(const Tensord& x);
/// Gradient mask; the derivative at exactly 0 is taken as 0.
Tensord relu_backward(const Tensord& x, const Tensord& grad_out);

struct DenseLayer {
  Tensord weights;  // (d_in, d_out)
  Tensord bias;     // (d_out,)
};

Tensord dense_forward(const DenseLayer& layer, const Tensord& x);

struct DenseGrads {
  Tensord input;
  Tensord weights;
  Tensord bias;
};

DenseGrads dense_backward(const DenseLayer& layer, const Tensord& x, const Tensord& grad_out);

/// Numerically stable softmax: shifts by the max before exponentiating.
Tensord softmax(const Tensord& logits);

/// -log(probs[label] + 1e-12) with probs from softmax.
double cross_entropy(const Tensord& probs, int label);

/// Gradient of the cross-entropy loss with respect to the logits feeding the
/// softmax: probs - onehot(label).
Tensord cross_entropy_logit_grad(const Tensord& probs, int label);

}  // namespace tbdx
