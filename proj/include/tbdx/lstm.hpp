#pragma once

#include <vector>

#include "tbdx/tensor.hpp"

namespace tbdx {

/// Gate order inside the stacked 4H axis of every LSTM parameter tensor:
/// input, forget, cell candidate, output. Checkpoints record this tag.
inline constexpr const char* kLstmGateOrder = "ifgo";

/// Standard LSTM with a forget gate and no peepholes.
///   i = sigm(x Wi + h Ui + bi)    f = sigm(x Wf + h Uf + bf)
///   g = tanh(x Wg + h Ug + bg)    o = sigm(x Wo + h Uo + bo)
///   c' = f * c + i * g            h' = o * tanh(c')
struct LstmParams {
  Tensord w_in;   // (d_in, 4h)
  Tensord w_rec;  // (h, 4h)
  Tensord bias;   // (4h,)

  Eigen::Index input_size() const { return w_in.extent(0); }
  Eigen::Index hidden_size() const { return w_rec.extent(0); }
};

struct LstmState {
  Tensord h;
  Tensord c;
};

LstmState lstm_cell(const LstmParams& p, const Tensord& x, const Tensord& h, const Tensord& c);

/// One step with everything the backward pass needs.
struct LstmCellCache {
  Tensord x, h_prev, c_prev;
  Tensord i, f, g, o;  // post-activation gates, each (h,)
  Tensord c, tanh_c;
  LstmState state() const {
    return LstmState{Tensord(Shape{c.size()}, o.array() * tanh_c.array()), c};
  }
};

LstmCellCache lstm_cell_forward(const LstmParams& p, const Tensord& x, const Tensord& h,
                                const Tensord& c);

struct LstmCellGrads {
  Tensord w_in, w_rec, bias;  // shaped like the parameters
  Tensord x, h_prev, c_prev;
};

/// Exact gradients of the cell given upstream gradients on h' and c'.
LstmCellGrads lstm_cell_backward(const LstmParams& p, const LstmCellCache& cache,
                                 const Tensord& grad_h, const Tensord& grad_c);

/// Runs the cell over xs (T, d_in) from zero initial state and returns the
/// full hidden sequence (T, h).
Tensord lstm_sequence(const LstmParams& p, const Tensord& xs);

struct LstmSequenceCache {
  std::vector<LstmCellCache> steps;
  Tensord outputs;  // (T, h)
};

LstmSequenceCache lstm_sequence_forward(const LstmParams& p, const Tensord& xs);

struct LstmSequenceGrads {
  Tensord w_in, w_rec, bias;
  Tensord inputs;  // (T, d_in)
};

/// Backpropagation through time from per-step output gradients (T, h).
LstmSequenceGrads lstm_sequence_backward(const LstmParams& p, const LstmSequenceCache& cache,
                                         const Tensord& grad_outputs);

/// Two direction-independent parameter sets over the same input width.
struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;
};

/// out[t] = concat(forward(xs)[t], reverse(backward(reverse(xs)))[t]),
/// so each position sees both past and future context. Output is (T, 2h).
Tensord bilstm(const BiLstmParams& p, const Tensord& xs);

struct BiLstmCache {
  LstmSequenceCache forward;   // over xs
  LstmSequenceCache backward;  // over reversed xs
  Tensord output;              // (T, 2h)
};

BiLstmCache bilstm_forward(const BiLstmParams& p, const Tensord& xs);

struct BiLstmGrads {
  LstmSequenceGrads forward;
  LstmSequenceGrads backward;
  Tensord inputs;  // (T, d_in)
};

BiLstmGrads bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                            const Tensord& grad_output);

/// Reverses the time axis of a (T, d) tensor.
Tensord reverse_time(const Tensord& xs);

}  // namespace tbdx
