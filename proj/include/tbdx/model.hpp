#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tbdx/layers.hpp"
#include "tbdx/lstm.hpp"
#include "tbdx/rng.hpp"

namespace tbdx {

/// Topology of the classifier: a VGG-style stack of 3x3 convolution blocks
/// (ReLU after every convolution, optional 2x2 max pool per block), a reshape
/// of the final feature map into a sequence of per-position feature vectors,
/// two bidirectional LSTM layers, then flatten and a dense softmax head.
struct NetConfig {
  Eigen::Index input_size = 224;  // square spatial extent
  Eigen::Index input_channels = 3;
  std::vector<Eigen::Index> block_channels = {64, 128, 256, 512, 512};
  std::vector<int> block_convs = {2, 2, 3, 3, 3};
  std::vector<bool> block_pool = {true, true, true, true, true};
  Eigen::Index lstm1_hidden = 256;
  Eigen::Index lstm2_hidden = 128;
  Eigen::Index classes = 2;

  Eigen::Index pool_count() const;
  Eigen::Index feature_extent() const;    // spatial extent after all pools
  Eigen::Index sequence_length() const;   // feature_extent squared
  Eigen::Index flat_size() const;         // sequence_length * 2 * lstm2_hidden
  std::string name() const;
};

/// The VGG16 convolutional stack (64-64, 128-128, 256x3, 512x3, 512x3) over
/// 224x224x3 input followed by Bi-LSTM widths 512 and 256 and a 2-way head.
NetConfig vgg16_bilstm_config();

/// Same layer chain with every width divided by 16 over a 16x16x3 input.
/// Pooling stops once the feature map reaches 2x2 (three pools), leaving a
/// length-4 sequence; 16x16 cannot survive five halvings.
NetConfig tiny_config();

NetConfig config_by_name(const std::string& name);

struct ModelParams {
  NetConfig config;
  std::vector<ConvLayer> conv;  // blocks concatenated in order
  BiLstmParams lstm1;
  BiLstmParams lstm2;
  DenseLayer head;
  bool freeze_extractor = false;
};

/// He-initialized conv/dense weights, uniform [-1/sqrt(h), 1/sqrt(h)] LSTM
/// weights, zero biases except the forget-gate bias which starts at +1.
/// Bit-identical for equal seeds.
ModelParams build_model(const NetConfig& config, std::uint64_t seed);
ModelParams build_model(std::uint64_t seed);  // vgg16_bilstm_config()

/// Stable name -> tensor enumeration. Drives the optimizer, the gradient
/// check and the checkpoint format, so the order must never change.
std::vector<std::pair<std::string, Tensord*>> named_params(ModelParams& m);
std::vector<std::pair<std::string, const Tensord*>> named_params(const ModelParams& m);

struct ParameterCensus {
  std::int64_t conv = 0;
  std::int64_t lstm1 = 0;
  std::int64_t lstm2 = 0;
  std::int64_t dense = 0;
  std::int64_t total = 0;
};

ParameterCensus parameter_census(const ModelParams& m);

struct ForwardResult {
  Tensord probs;             // (classes,)
  std::vector<Shape> trace;  // output shape of every layer, input included
};

/// Pure function of (params, input). Input must be
/// (input_size, input_size, input_channels).
ForwardResult forward(const ModelParams& m, const Tensord& x);

struct Prediction {
  int label;        // argmax of probs; exact ties resolve to class 0
  double tb_score;  // probs[1]
};

Prediction predict(const ModelParams& m, const Tensord& x);

/// Gradients shaped exactly like the parameters, in named_params order.
struct ModelGrads {
  std::vector<Tensord> tensors;
};

/// Cross-entropy loss of one sample plus, when grads is non-null, exact
/// analytic gradients accumulated into grads. With freeze_extractor set the
/// backward pass stops at the first Bi-LSTM and conv slots stay untouched.
double model_loss(const ModelParams& m, const Tensord& x, int label, ModelGrads* grads);

ModelGrads zero_grads(const ModelParams& m);

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 1;
  int batch_size = 8;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  bool freeze_extractor = false;

  // Adam moment decay and stabilizer; fixed, not tunable.
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
};

struct Sample {
  Tensord input;
  int label = 0;  // 0 = normal, 1 = TB
};

/// Owns the parameters and optimizer state so training can be driven one
/// epoch at a time. Minibatch gradient descent on mean cross-entropy with a
/// seeded shuffle per epoch; a fixed seed makes every run bit-identical.
class Trainer {
 public:
  Trainer(ModelParams params, const TrainConfig& config);

  /// Runs one epoch over the dataset; returns the mean sample loss.
  double run_epoch(const std::vector<Sample>& dataset);

  /// Fraction of dataset samples predict() labels correctly.
  double accuracy(const std::vector<Sample>& dataset) const;

  const ModelParams& params() const { return params_; }
  ModelParams take_params() && { return std::move(params_); }

 private:
  void apply_update(const ModelGrads& grads);

  ModelParams params_;
  TrainConfig config_;
  Rng rng_;
  std::vector<Tensord> adam_m_;
  std::vector<Tensord> adam_v_;
  std::int64_t adam_steps_ = 0;
};

struct TrainResult {
  ModelParams model;
  std::vector<double> loss_history;  // one mean loss per epoch
};

TrainResult train(ModelParams m, const std::vector<Sample>& dataset, const TrainConfig& config);

}  // namespace tbdx
