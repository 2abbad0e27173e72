#include "tbdx/lstm.hpp"

#include <cmath>

namespace tbdx {

namespace {

void check_cell_shapes(const LstmParams& p, const Tensord& x, const Tensord& h,
                       const Tensord& c) {
  const Eigen::Index d_in = p.input_size(), hidden = p.hidden_size();
  if (p.w_in.extent(1) != 4 * hidden || p.bias.size() != 4 * hidden ||
      p.w_rec.extent(1) != 4 * hidden) {
    throw ShapeError("lstm: parameter tensors disagree on hidden size");
  }
  if (x.size() != d_in) {
    throw ShapeError("lstm: input length " + std::to_string(x.size()) + ", cell expects " +
                     std::to_string(d_in));
  }
  if (h.size() != hidden || c.size() != hidden) {
    throw ShapeError("lstm: state length does not match hidden size");
  }
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
  return 1.0 / (1.0 + (-z).exp());
}

}  // namespace

LstmCellCache lstm_cell_forward(const LstmParams& p, const Tensord& x, const Tensord& h,
                                const Tensord& c) {
  check_cell_shapes(p, x, h, c);
  const Eigen::Index d_in = p.input_size(), hidden = p.hidden_size();

  Eigen::VectorXd pre = (x.as_matrix(1, d_in) * p.w_in.as_matrix(d_in, 4 * hidden) +
                         h.as_matrix(1, hidden) * p.w_rec.as_matrix(hidden, 4 * hidden))
                            .transpose();
  pre += p.bias.as_matrix(4 * hidden, 1);

  LstmCellCache cache;
  cache.x = x;
  cache.h_prev = h;
  cache.c_prev = c;
  cache.i = Tensord(Shape{hidden}, sigmoid(pre.segment(0, hidden).array()));
  cache.f = Tensord(Shape{hidden}, sigmoid(pre.segment(hidden, hidden).array()));
  cache.g = Tensord(Shape{hidden}, pre.segment(2 * hidden, hidden).array().tanh());
  cache.o = Tensord(Shape{hidden}, sigmoid(pre.segment(3 * hidden, hidden).array()));
  cache.c = Tensord(Shape{hidden},
                    cache.f.array() * c.array() + cache.i.array() * cache.g.array());
  cache.tanh_c = Tensord(Shape{hidden}, cache.c.array().tanh());
  return cache;
}

LstmState lstm_cell(const LstmParams& p, const Tensord& x, const Tensord& h, const Tensord& c) {
  const LstmCellCache cache = lstm_cell_forward(p, x, h, c);
  return cache.state();
}

LstmCellGrads lstm_cell_backward(const LstmParams& p, const LstmCellCache& cache,
                                 const Tensord& grad_h, const Tensord& grad_c) {
  const Eigen::Index d_in = p.input_size(), hidden = p.hidden_size();
  if (grad_h.size() != hidden || grad_c.size() != hidden) {
    throw ShapeError("lstm_cell_backward: gradient length does not match hidden size");
  }

  const auto& i = cache.i.array();
  const auto& f = cache.f.array();
  const auto& g = cache.g.array();
  const auto& o = cache.o.array();
  const auto& tanh_c = cache.tanh_c.array();

  const Eigen::ArrayXd d_o = grad_h.array() * tanh_c;
  const Eigen::ArrayXd d_c = grad_c.array() + grad_h.array() * o * (1.0 - tanh_c.square());
  const Eigen::ArrayXd d_i = d_c * g;
  const Eigen::ArrayXd d_f = d_c * cache.c_prev.array();
  const Eigen::ArrayXd d_g = d_c * i;

  Eigen::VectorXd d_pre(4 * hidden);
  d_pre.segment(0, hidden).array() = d_i * i * (1.0 - i);
  d_pre.segment(hidden, hidden).array() = d_f * f * (1.0 - f);
  d_pre.segment(2 * hidden, hidden).array() = d_g * (1.0 - g.square());
  d_pre.segment(3 * hidden, hidden).array() = d_o * o * (1.0 - o);

  LstmCellGrads grads;
  grads.w_in = Tensord(p.w_in.shape());
  grads.w_rec = Tensord(p.w_rec.shape());
  grads.bias = Tensord(Shape{4 * hidden}, d_pre.array());
  grads.w_in.as_matrix(d_in, 4 * hidden).noalias() =
      cache.x.as_matrix(d_in, 1) * d_pre.transpose();
  grads.w_rec.as_matrix(hidden, 4 * hidden).noalias() =
      cache.h_prev.as_matrix(hidden, 1) * d_pre.transpose();

  grads.x = Tensord(Shape{d_in});
  grads.x.as_matrix(d_in, 1).noalias() = p.w_in.as_matrix(d_in, 4 * hidden) * d_pre;
  grads.h_prev = Tensord(Shape{hidden});
  grads.h_prev.as_matrix(hidden, 1).noalias() = p.w_rec.as_matrix(hidden, 4 * hidden) * d_pre;
  grads.c_prev = Tensord(Shape{hidden}, d_c * f);
  return grads;
}

LstmSequenceCache lstm_sequence_forward(const LstmParams& p, const Tensord& xs) {
  if (xs.rank() != 2) {
    throw ShapeError("lstm_sequence: input must be (T, d_in), got " + shape_string(xs.shape()));
  }
  const Eigen::Index steps = xs.extent(0);
  if (steps < 1) throw ShapeError("lstm_sequence: empty sequence");
  const Eigen::Index d_in = p.input_size(), hidden = p.hidden_size();

  LstmSequenceCache cache;
  cache.steps.reserve(static_cast<std::size_t>(steps));
  cache.outputs = Tensord(Shape{steps, hidden});
  Tensord h(Shape{hidden}), c(Shape{hidden});
  for (Eigen::Index t = 0; t < steps; ++t) {
    Tensord x(Shape{d_in}, xs.array().segment(t * d_in, d_in));
    cache.steps.push_back(lstm_cell_forward(p, x, h, c));
    const LstmState state = cache.steps.back().state();
    cache.outputs.array().segment(t * hidden, hidden) = state.h.array();
    h = state.h;
    c = state.c;
  }
  return cache;
}

Tensord lstm_sequence(const LstmParams& p, const Tensord& xs) {
  return lstm_sequence_forward(p, xs).outputs;
}

LstmSequenceGrads lstm_sequence_backward(const LstmParams& p, const LstmSequenceCache& cache,
                                         const Tensord& grad_outputs) {
  const Eigen::Index steps = static_cast<Eigen::Index>(cache.steps.size());
  const Eigen::Index d_in = p.input_size(), hidden = p.hidden_size();
  if (grad_outputs.shape() != Shape{steps, hidden}) {
    throw ShapeError("lstm_sequence_backward: gradient shape " +
                     shape_string(grad_outputs.shape()) + " does not match outputs");
  }

  LstmSequenceGrads grads;
  grads.w_in = Tensord(p.w_in.shape());
  grads.w_rec = Tensord(p.w_rec.shape());
  grads.bias = Tensord(p.bias.shape());
  grads.inputs = Tensord(Shape{steps, d_in});

  Tensord d_h(Shape{hidden}), d_c(Shape{hidden});
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    d_h.array() += grad_outputs.array().segment(t * hidden, hidden);
    LstmCellGrads step = lstm_cell_backward(p, cache.steps[static_cast<std::size_t>(t)], d_h, d_c);
    grads.w_in.array() += step.w_in.array();
    grads.w_rec.array() += step.w_rec.array();
    grads.bias.array() += step.bias.array();
    grads.inputs.array().segment(t * d_in, d_in) = step.x.array();
    d_h = step.h_prev;
    d_c = step.c_prev;
  }
  return grads;
}

Tensord reverse_time(const Tensord& xs) {
  if (xs.rank() != 2) throw ShapeError("reverse_time: input must be rank 2");
  const Eigen::Index steps = xs.extent(0), width = xs.extent(1);
  Tensord out(xs.shape());
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.array().segment(t * width, width) = xs.array().segment((steps - 1 - t) * width, width);
  }
  return out;
}

BiLstmCache bilstm_forward(const BiLstmParams& p, const Tensord& xs) {
  if (p.forward.input_size() != p.backward.input_size() ||
      p.forward.hidden_size() != p.backward.hidden_size()) {
    throw ShapeError("bilstm: direction parameter sets disagree on sizes");
  }
  BiLstmCache cache;
  cache.forward = lstm_sequence_forward(p.forward, xs);
  cache.backward = lstm_sequence_forward(p.backward, reverse_time(xs));
  cache.output = concat_last(cache.forward.outputs, reverse_time(cache.backward.outputs));
  return cache;
}

Tensord bilstm(const BiLstmParams& p, const Tensord& xs) {
  return bilstm_forward(p, xs).output;
}

BiLstmGrads bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                            const Tensord& grad_output) {
  const Eigen::Index hidden = p.forward.hidden_size();
  if (grad_output.shape() != cache.output.shape()) {
    throw ShapeError("bilstm_backward: gradient shape does not match output");
  }
  const Tensord grad_fwd = slice_last(grad_output, 0, hidden);
  const Tensord grad_bwd = reverse_time(slice_last(grad_output, hidden, hidden));

  BiLstmGrads grads;
  grads.forward = lstm_sequence_backward(p.forward, cache.forward, grad_fwd);
  grads.backward = lstm_sequence_backward(p.backward, cache.backward, grad_bwd);
  grads.inputs = Tensord(grads.forward.inputs.shape(),
                         grads.forward.inputs.array() +
                             reverse_time(grads.backward.inputs).array());
  return grads;
}

}  // namespace tbdx
