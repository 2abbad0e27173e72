#include "tbdx/model.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "tbdx/errors.hpp"

namespace tbdx {
namespace {

void validate_config(const NetConfig& c) {
  const std::size_t blocks = c.block_channels.size();
  if (blocks == 0 || c.block_convs.size() != blocks || c.block_pool.size() != blocks) {
    throw ArgumentError("conv block lists must be non-empty and equally long");
  }
  for (Eigen::Index ch : c.block_channels) {
    if (ch <= 0) throw ArgumentError("block channel counts must be positive");
  }
  for (int n : c.block_convs) {
    if (n <= 0) throw ArgumentError("block conv counts must be positive");
  }
  if (c.input_size <= 0 || c.input_channels <= 0 || c.classes < 2 || c.lstm1_hidden <= 0 ||
      c.lstm2_hidden <= 0) {
    throw ArgumentError("network dimensions must be positive (and classes at least 2)");
  }
  Eigen::Index extent = c.input_size;
  for (std::size_t b = 0; b < blocks; ++b) {
    if (!c.block_pool[b]) continue;
    if (extent < 2 || extent % 2 != 0) {
      throw ArgumentError("input extent does not survive the pooling chain");
    }
    extent /= 2;
  }
}

bool same_config(const NetConfig& a, const NetConfig& b) {
  return a.input_size == b.input_size && a.input_channels == b.input_channels &&
         a.block_channels == b.block_channels && a.block_convs == b.block_convs &&
         a.block_pool == b.block_pool && a.lstm1_hidden == b.lstm1_hidden &&
         a.lstm2_hidden == b.lstm2_hidden && a.classes == b.classes;
}

Tensord he_normal(Rng& rng, Shape shape, Eigen::Index fan_in) {
  Tensord t(std::move(shape));
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = stddev * rng.normal();
  return t;
}

Tensord uniform_symmetric(Rng& rng, Shape shape, double bound) {
  Tensord t(std::move(shape));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = rng.uniform(-bound, bound);
  return t;
}

LstmParams build_lstm(Rng& rng, Eigen::Index d_in, Eigen::Index hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmParams p;
  p.w_in = uniform_symmetric(rng, {d_in, 4 * hidden}, bound);
  p.w_rec = uniform_symmetric(rng, {hidden, 4 * hidden}, bound);
  p.bias = Tensord(Shape{4 * hidden});
  p.bias.array().segment(hidden, hidden).setConstant(1.0);  // forget gate opens at first
  return p;
}

template <typename Model, typename Ptr>
std::vector<std::pair<std::string, Ptr>> collect_params(Model& m) {
  std::vector<std::pair<std::string, Ptr>> out;
  std::size_t layer = 0;
  for (std::size_t b = 0; b < m.config.block_convs.size(); ++b) {
    for (int i = 0; i < m.config.block_convs[b]; ++i, ++layer) {
      const std::string stem =
          "conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1);
      out.emplace_back(stem + ".w", &m.conv[layer].weights);
      out.emplace_back(stem + ".b", &m.conv[layer].bias);
    }
  }
  const auto add_lstm = [&out](const std::string& stem, auto& p) {
    out.emplace_back(stem + ".wx", &p.w_in);
    out.emplace_back(stem + ".wh", &p.w_rec);
    out.emplace_back(stem + ".b", &p.bias);
  };
  add_lstm("bilstm1.fwd", m.lstm1.forward);
  add_lstm("bilstm1.bwd", m.lstm1.backward);
  add_lstm("bilstm2.fwd", m.lstm2.forward);
  add_lstm("bilstm2.bwd", m.lstm2.backward);
  out.emplace_back("dense.w", &m.head.weights);
  out.emplace_back("dense.b", &m.head.bias);
  return out;
}

std::size_t total_conv_layers(const NetConfig& c) {
  std::size_t n = 0;
  for (int k : c.block_convs) n += static_cast<std::size_t>(k);
  return n;
}

void check_model(const ModelParams& m) {
  validate_config(m.config);
  if (m.conv.size() != total_conv_layers(m.config)) {
    throw ShapeError("model holds " + std::to_string(m.conv.size()) +
                     " conv layers but its configuration needs " +
                     std::to_string(total_conv_layers(m.config)));
  }
}

struct ForwardCaches {
  std::vector<Tensord> conv_pre;  // pre-ReLU conv outputs, one per layer
  std::vector<MaxPool> pools;     // one per pooled block, in block order
  BiLstmCache lstm1;
  BiLstmCache lstm2;
  Tensord flat;
};

/// Single forward walk shared by inference, tracing and training. When
/// caches is non-null every intermediate the backward pass needs is kept.
Tensord run_forward(const ModelParams& m, const Tensord& x, ForwardCaches* caches,
                    std::vector<Shape>* trace) {
  check_model(m);
  const NetConfig& cfg = m.config;
  const Shape want{cfg.input_size, cfg.input_size, cfg.input_channels};
  if (x.shape() != want) {
    throw ShapeError("input " + shape_string(x.shape()) + ", expected " + shape_string(want));
  }
  if (trace) trace->push_back(x.shape());

  Tensord cur = x;
  std::size_t layer = 0;
  for (std::size_t b = 0; b < cfg.block_convs.size(); ++b) {
    for (int i = 0; i < cfg.block_convs[b]; ++i, ++layer) {
      Tensord z = conv2d_forward(m.conv[layer], cur);
      if (trace) trace->push_back(z.shape());
      cur = relu(z);
      if (caches) caches->conv_pre.push_back(std::move(z));
    }
    if (cfg.block_pool[b]) {
      MaxPool pool = maxpool_forward(cur);
      if (trace) trace->push_back(pool.output.shape());
      cur = pool.output;
      if (caches) caches->pools.push_back(std::move(pool));
    }
  }

  Tensord seq = reshape(std::move(cur), {cfg.sequence_length(), cfg.block_channels.back()});
  if (trace) trace->push_back(seq.shape());

  Tensord seq1;
  if (caches) {
    caches->lstm1 = bilstm_forward(m.lstm1, seq);
    seq1 = caches->lstm1.output;
  } else {
    seq1 = bilstm(m.lstm1, seq);
  }
  if (trace) trace->push_back(seq1.shape());

  Tensord seq2;
  if (caches) {
    caches->lstm2 = bilstm_forward(m.lstm2, seq1);
    seq2 = caches->lstm2.output;
  } else {
    seq2 = bilstm(m.lstm2, seq1);
  }
  if (trace) trace->push_back(seq2.shape());

  Tensord flat = flatten(std::move(seq2));
  if (trace) trace->push_back(flat.shape());

  Tensord logits = dense_forward(m.head, flat);
  if (trace) trace->push_back(logits.shape());
  if (caches) caches->flat = std::move(flat);

  return softmax(logits);
}

/// Input that fed conv layer `layer` (global index); blocks[layer] is its
/// block. Recomputed from the caches instead of stored, since ReLU is cheap.
Tensord conv_input(const ModelParams& m, const ForwardCaches& caches,
                   const std::vector<std::size_t>& first_layer_of_block,
                   const std::vector<std::size_t>& pool_slot_of_block, std::size_t block,
                   std::size_t layer, const Tensord& x) {
  if (layer != first_layer_of_block[block]) return relu(caches.conv_pre[layer - 1]);
  if (block == 0) return x;
  if (m.config.block_pool[block - 1]) return caches.pools[pool_slot_of_block[block - 1]].output;
  return relu(caches.conv_pre[layer - 1]);
}

}  // namespace

Eigen::Index NetConfig::pool_count() const {
  Eigen::Index n = 0;
  for (bool p : block_pool) n += p ? 1 : 0;
  return n;
}

Eigen::Index NetConfig::feature_extent() const {
  Eigen::Index extent = input_size;
  for (Eigen::Index i = 0; i < pool_count(); ++i) extent /= 2;
  return extent;
}

Eigen::Index NetConfig::sequence_length() const {
  return feature_extent() * feature_extent();
}

Eigen::Index NetConfig::flat_size() const { return sequence_length() * 2 * lstm2_hidden; }

std::string NetConfig::name() const {
  if (same_config(*this, vgg16_bilstm_config())) return "vgg16-bilstm";
  if (same_config(*this, tiny_config())) return "tiny";
  return "custom";
}

NetConfig vgg16_bilstm_config() { return NetConfig{}; }

NetConfig tiny_config() {
  NetConfig c;
  c.input_size = 16;
  c.block_channels = {4, 8, 16, 32, 32};
  c.block_pool = {true, true, true, false, false};
  c.lstm1_hidden = 16;
  c.lstm2_hidden = 8;
  return c;
}

NetConfig config_by_name(const std::string& name) {
  if (name == "vgg16-bilstm") return vgg16_bilstm_config();
  if (name == "tiny") return tiny_config();
  throw ArgumentError("unknown architecture \"" + name + "\"");
}

ModelParams build_model(const NetConfig& config, std::uint64_t seed) {
  validate_config(config);
  Rng rng(seed);
  ModelParams m;
  m.config = config;

  Eigen::Index c_in = config.input_channels;
  for (std::size_t b = 0; b < config.block_convs.size(); ++b) {
    const Eigen::Index c_out = config.block_channels[b];
    for (int i = 0; i < config.block_convs[b]; ++i) {
      ConvLayer layer;
      layer.weights = he_normal(rng, {3, 3, c_in, c_out}, 9 * c_in);
      layer.bias = Tensord(Shape{c_out});
      m.conv.push_back(std::move(layer));
      c_in = c_out;
    }
  }

  const Eigen::Index features = config.block_channels.back();
  m.lstm1.forward = build_lstm(rng, features, config.lstm1_hidden);
  m.lstm1.backward = build_lstm(rng, features, config.lstm1_hidden);
  m.lstm2.forward = build_lstm(rng, 2 * config.lstm1_hidden, config.lstm2_hidden);
  m.lstm2.backward = build_lstm(rng, 2 * config.lstm1_hidden, config.lstm2_hidden);

  m.head.weights = he_normal(rng, {config.flat_size(), config.classes}, config.flat_size());
  m.head.bias = Tensord(Shape{config.classes});
  return m;
}

ModelParams build_model(std::uint64_t seed) { return build_model(vgg16_bilstm_config(), seed); }

std::vector<std::pair<std::string, Tensord*>> named_params(ModelParams& m) {
  return collect_params<ModelParams, Tensord*>(m);
}

std::vector<std::pair<std::string, const Tensord*>> named_params(const ModelParams& m) {
  return collect_params<const ModelParams, const Tensord*>(m);
}

ParameterCensus parameter_census(const ModelParams& m) {
  ParameterCensus census;
  for (const ConvLayer& layer : m.conv) {
    census.conv += layer.weights.size() + layer.bias.size();
  }
  const auto lstm_size = [](const BiLstmParams& p) {
    std::int64_t n = 0;
    for (const LstmParams* half : {&p.forward, &p.backward}) {
      n += half->w_in.size() + half->w_rec.size() + half->bias.size();
    }
    return n;
  };
  census.lstm1 = lstm_size(m.lstm1);
  census.lstm2 = lstm_size(m.lstm2);
  census.dense = m.head.weights.size() + m.head.bias.size();
  census.total = census.conv + census.lstm1 + census.lstm2 + census.dense;
  return census;
}

ForwardResult forward(const ModelParams& m, const Tensord& x) {
  ForwardResult result;
  result.probs = run_forward(m, x, nullptr, &result.trace);
  return result;
}

Prediction predict(const ModelParams& m, const Tensord& x) {
  const Tensord probs = run_forward(m, x, nullptr, nullptr);
  int best = 0;
  for (Eigen::Index k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = static_cast<int>(k);
  }
  return Prediction{best, probs[1]};
}

ModelGrads zero_grads(const ModelParams& m) {
  ModelGrads grads;
  for (const auto& [name, tensor] : named_params(m)) {
    (void)name;
    grads.tensors.emplace_back(tensor->shape());
  }
  return grads;
}

double model_loss(const ModelParams& m, const Tensord& x, int label, ModelGrads* grads) {
  const NetConfig& cfg = m.config;
  if (label < 0 || label >= cfg.classes) {
    throw ArgumentError("label " + std::to_string(label) + " outside the " +
                        std::to_string(cfg.classes) + "-class range");
  }

  if (!grads) {
    const Tensord probs = run_forward(m, x, nullptr, nullptr);
    return cross_entropy(probs, label);
  }

  ForwardCaches caches;
  const Tensord probs = run_forward(m, x, &caches, nullptr);
  const double loss = cross_entropy(probs, label);

  const std::size_t conv_count = m.conv.size();
  if (grads->tensors.size() != 2 * conv_count + 14) {
    throw ShapeError("gradient accumulator does not match the model");
  }
  const auto grad_of = [grads](std::size_t index) -> Tensord& { return grads->tensors[index]; };
  const std::size_t lstm1_base = 2 * conv_count;
  const std::size_t lstm2_base = lstm1_base + 6;
  const std::size_t dense_base = lstm2_base + 6;

  // Head.
  const Tensord dlogits = cross_entropy_logit_grad(probs, label);
  DenseGrads dg = dense_backward(m.head, caches.flat, dlogits);
  grad_of(dense_base).array() += dg.weights.array();
  grad_of(dense_base + 1).array() += dg.bias.array();

  // Bi-LSTM stack.
  const auto add_lstm_grads = [&grad_of](std::size_t base, const BiLstmGrads& g) {
    grad_of(base).array() += g.forward.w_in.array();
    grad_of(base + 1).array() += g.forward.w_rec.array();
    grad_of(base + 2).array() += g.forward.bias.array();
    grad_of(base + 3).array() += g.backward.w_in.array();
    grad_of(base + 4).array() += g.backward.w_rec.array();
    grad_of(base + 5).array() += g.backward.bias.array();
  };
  Tensord dseq2 = reshape(std::move(dg.input), {cfg.sequence_length(), 2 * cfg.lstm2_hidden});
  BiLstmGrads g2 = bilstm_backward(m.lstm2, caches.lstm2, dseq2);
  add_lstm_grads(lstm2_base, g2);
  BiLstmGrads g1 = bilstm_backward(m.lstm1, caches.lstm1, g2.inputs);
  add_lstm_grads(lstm1_base, g1);

  // A frozen extractor needs no conv gradients; their slots stay untouched.
  if (m.freeze_extractor) return loss;

  const std::size_t blocks = cfg.block_convs.size();
  std::vector<std::size_t> first_layer_of_block(blocks);
  std::vector<std::size_t> pool_slot_of_block(blocks);
  std::size_t layer_cursor = 0;
  std::size_t pool_cursor = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    first_layer_of_block[b] = layer_cursor;
    layer_cursor += static_cast<std::size_t>(cfg.block_convs[b]);
    pool_slot_of_block[b] = pool_cursor;
    if (cfg.block_pool[b]) ++pool_cursor;
  }

  const Eigen::Index extent = cfg.feature_extent();
  Tensord d = reshape(std::move(g1.inputs), {extent, extent, cfg.block_channels.back()});
  std::size_t layer = conv_count;
  for (std::size_t b = blocks; b-- > 0;) {
    if (cfg.block_pool[b]) d = maxpool_backward(caches.pools[pool_slot_of_block[b]], d);
    for (int i = cfg.block_convs[b]; i-- > 0;) {
      --layer;
      d = relu_backward(caches.conv_pre[layer], d);
      const Tensord fed =
          conv_input(m, caches, first_layer_of_block, pool_slot_of_block, b, layer, x);
      caches.conv_pre[layer] = Tensord();  // this activation is spent; free it
      ConvGrads cg = conv2d_backward(m.conv[layer], fed, d);
      grad_of(2 * layer).array() += cg.weights.array();
      grad_of(2 * layer + 1).array() += cg.bias.array();
      d = std::move(cg.input);
    }
  }
  return loss;
}

Trainer::Trainer(ModelParams params, const TrainConfig& config)
    : params_(std::move(params)), config_(config), rng_(config.seed) {
  check_model(params_);
  if (config.learning_rate <= 0.0) throw ArgumentError("learning rate must be positive");
  if (config.batch_size <= 0) throw ArgumentError("batch size must be positive");
  if (config.freeze_extractor) params_.freeze_extractor = true;
  if (config_.optimizer == Optimizer::kAdam) {
    for (const auto& [name, tensor] : named_params(params_)) {
      (void)name;
      adam_m_.emplace_back(tensor->shape());
      adam_v_.emplace_back(tensor->shape());
    }
  }
}

double Trainer::run_epoch(const std::vector<Sample>& dataset) {
  if (dataset.empty()) throw ArgumentError("cannot train on an empty dataset");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(order);

  double total_loss = 0.0;
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t begin = 0; begin < order.size(); begin += batch) {
    const std::size_t end = std::min(begin + batch, order.size());
    ModelGrads grads = zero_grads(params_);
    for (std::size_t k = begin; k < end; ++k) {
      const Sample& s = dataset[order[k]];
      total_loss += model_loss(params_, s.input, s.label, &grads);
    }
    const double scale = 1.0 / static_cast<double>(end - begin);
    for (Tensord& g : grads.tensors) g.array() *= scale;
    apply_update(grads);
  }
  return total_loss / static_cast<double>(dataset.size());
}

double Trainer::accuracy(const std::vector<Sample>& dataset) const {
  if (dataset.empty()) throw ArgumentError("cannot score an empty dataset");
  std::size_t hits = 0;
  for (const Sample& s : dataset) {
    if (predict(params_, s.input).label == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

void Trainer::apply_update(const ModelGrads& grads) {
  auto named = named_params(params_);
  const double lr = config_.learning_rate;
  if (config_.optimizer == Optimizer::kAdam) ++adam_steps_;
  for (std::size_t idx = 0; idx < named.size(); ++idx) {
    if (params_.freeze_extractor && named[idx].first.rfind("conv", 0) == 0) continue;
    auto& theta = named[idx].second->array();
    const auto& g = grads.tensors[idx].array();
    if (config_.optimizer == Optimizer::kSgd) {
      theta -= lr * g;
      continue;
    }
    auto& m = adam_m_[idx].array();
    auto& v = adam_v_[idx].array();
    m = TrainConfig::kBeta1 * m + (1.0 - TrainConfig::kBeta1) * g;
    v = TrainConfig::kBeta2 * v + (1.0 - TrainConfig::kBeta2) * g.square();
    const double t = static_cast<double>(adam_steps_);
    const double m_scale = 1.0 / (1.0 - std::pow(TrainConfig::kBeta1, t));
    const double v_scale = 1.0 / (1.0 - std::pow(TrainConfig::kBeta2, t));
    theta -= lr * (m * m_scale) / ((v * v_scale).sqrt() + TrainConfig::kEpsilon);
  }
}

TrainResult train(ModelParams m, const std::vector<Sample>& dataset, const TrainConfig& config) {
  Trainer trainer(std::move(m), config);
  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    result.loss_history.push_back(trainer.run_epoch(dataset));
  }
  result.model = std::move(trainer).take_params();
  return result;
}

}  // namespace tbdx
