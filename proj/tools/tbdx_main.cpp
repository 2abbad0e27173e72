// Command-line front end: dataset ingestion, the denoise/segment/classify
// pipeline, training, evaluation, cross-validation, gradient checking, and
// CSV report rendering.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tbdx/checkpoint.hpp"
#include "tbdx/dataset.hpp"
#include "tbdx/errors.hpp"
#include "tbdx/gradcheck.hpp"
#include "tbdx/guided_filter.hpp"
#include "tbdx/metrics.hpp"
#include "tbdx/model.hpp"
#include "tbdx/rng.hpp"
#include "tbdx/segmentation.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string pct(double v) { return format("%.4f", v * 100.0); }
std::string prob4(double v) { return format("%.4f", v); }
std::string full(double v) { return format("%.17g", v); }

std::string timestamp_line() {
  const std::time_t now = std::time(nullptr);
  char buf[64];
  std::strftime(buf, sizeof buf, "# generated %Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::ofstream open_csv(const fs::path& path, bool stamp) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw tbdx::IoError("cannot write " + path.string());
  if (stamp) out << timestamp_line() << "\n";
  return out;
}

std::string metrics_row(const tbdx::MetricsReport& r) {
  std::string row = pct(r.accuracy) + "," + pct(r.precision) + "," + pct(r.recall) + "," +
                    pct(r.specificity) + "," + pct(r.f1) + ",";
  if (r.auc) row += prob4(*r.auc);
  row += "," + pct(r.npv);
  return row;
}

constexpr const char* kMetricsHeader = "Accuracy,Precision,Recall,Specificity,F1-score,AUC,NPV";

void write_metrics_csv(const fs::path& path, const tbdx::MetricsReport& report, bool stamp) {
  auto out = open_csv(path, stamp);
  out << kMetricsHeader << "\n" << metrics_row(report) << "\n";
}

std::string confusion_row(const tbdx::ConfusionMatrix& cm) {
  return std::to_string(cm.tp) + "," + std::to_string(cm.fn) + "," + std::to_string(cm.tn) +
         "," + std::to_string(cm.fp);
}

void write_confusion_csv(const fs::path& path, const tbdx::ConfusionMatrix& cm, bool stamp) {
  auto out = open_csv(path, stamp);
  out << "TP,FN,TN,FP\n" << confusion_row(cm) << "\n";
}

void write_roc_csv(const fs::path& path, const std::vector<std::pair<double, double>>& points,
                   bool stamp) {
  auto out = open_csv(path, stamp);
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : points) out << full(fpr) << "," << full(tpr) << "\n";
}

struct PipelineOptions {
  std::string manifest;
  std::string atlas_dir;  // empty = classify whole denoised images
  double epsilon = 1e-4;
  tbdx::SegmentOptions seg;
};

/// Manifest images through denoising and (when an atlas is given) lung
/// segmentation, shaped for the classifier.
std::vector<tbdx::Sample> build_samples(const std::vector<tbdx::LabeledImage>& data,
                                        const PipelineOptions& opt, Eigen::Index input_size) {
  std::vector<tbdx::AtlasEntry> atlas;
  if (!opt.atlas_dir.empty()) atlas = tbdx::load_atlas_dir(opt.atlas_dir);

  std::vector<tbdx::Sample> samples;
  samples.reserve(data.size());
  for (const tbdx::LabeledImage& item : data) {
    const tbdx::Image den = tbdx::denoise(item.image, {3, opt.epsilon});
    tbdx::Sample s;
    if (!atlas.empty()) {
      const tbdx::Mask mask = tbdx::segment_lungs(den, atlas, opt.seg);
      s.input = tbdx::to_model_input(den, &mask, input_size);
    } else {
      s.input = tbdx::to_model_input(den, nullptr, input_size);
    }
    s.label = item.label;
    samples.push_back(std::move(s));
  }
  return samples;
}

fs::path unique_output(const fs::path& out_dir, const std::string& stem, const char* suffix,
                       std::set<std::string>& taken) {
  const std::string name = stem + suffix;
  if (!taken.insert(name).second) {
    throw tbdx::IoError("two manifest rows map to the same output file " + name);
  }
  return out_dir / name;
}

void write_predictions_csv(const fs::path& path, const std::vector<tbdx::LabeledImage>& data,
                           const std::vector<int>& preds, const std::vector<double>& scores,
                           bool stamp) {
  auto out = open_csv(path, stamp);
  out << "path,truth,pred,score\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data[i].path << "," << data[i].label << "," << preds[i] << "," << full(scores[i])
        << "\n";
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int run_denoise(const PipelineOptions& pipe, const fs::path& out_dir) {
  const auto data = tbdx::load_dataset(pipe.manifest);
  fs::create_directories(out_dir);
  std::set<std::string> taken;
  for (const tbdx::LabeledImage& item : data) {
    const tbdx::Image den = tbdx::denoise(item.image, {3, pipe.epsilon});
    tbdx::write_png(unique_output(out_dir, fs::path(item.path).stem().string(), ".png", taken),
                    den);
  }
  std::cout << "denoised " << data.size() << " images into " << out_dir.string() << "\n";
  return kExitOk;
}

int run_segment(const PipelineOptions& pipe, const fs::path& out_dir) {
  const auto data = tbdx::load_dataset(pipe.manifest);
  const auto atlas = tbdx::load_atlas_dir(pipe.atlas_dir);
  fs::create_directories(out_dir);
  std::set<std::string> taken;
  for (const tbdx::LabeledImage& item : data) {
    const tbdx::Image den = tbdx::denoise(item.image, {3, pipe.epsilon});
    const tbdx::Mask mask = tbdx::segment_lungs(den, atlas, pipe.seg);
    tbdx::write_mask_png(
        unique_output(out_dir, fs::path(item.path).stem().string(), "_mask.png", taken), mask);
  }
  std::cout << "segmented " << data.size() << " images into " << out_dir.string() << "\n";
  return kExitOk;
}

struct TrainOptions {
  std::string arch = "vgg16-bilstm";
  std::string optimizer = "adam";
  tbdx::TrainConfig config;
};

tbdx::TrainConfig resolve_train_config(const TrainOptions& opt) {
  tbdx::TrainConfig cfg = opt.config;
  if (opt.optimizer == "adam") {
    cfg.optimizer = tbdx::Optimizer::kAdam;
  } else if (opt.optimizer == "sgd") {
    cfg.optimizer = tbdx::Optimizer::kSgd;
  } else {
    throw tbdx::ArgumentError("unknown optimizer \"" + opt.optimizer + "\"");
  }
  return cfg;
}

int run_train(const PipelineOptions& pipe, const TrainOptions& opt, const fs::path& checkpoint,
              const fs::path& out_dir, bool stamp) {
  const tbdx::NetConfig net = tbdx::config_by_name(opt.arch);
  const tbdx::TrainConfig cfg = resolve_train_config(opt);
  const auto data = tbdx::load_dataset(pipe.manifest);
  const auto samples = build_samples(data, pipe, net.input_size);

  tbdx::TrainResult result = tbdx::train(tbdx::build_model(net, cfg.seed), samples, cfg);
  fs::create_directories(out_dir);
  tbdx::save_checkpoint(checkpoint, result.model);

  auto loss = open_csv(out_dir / "loss.csv", stamp);
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    loss << e + 1 << "," << full(result.loss_history[e]) << "\n";
  }
  std::cout << "trained " << opt.arch << " on " << samples.size() << " samples; checkpoint "
            << checkpoint.string() << "\n";
  return kExitOk;
}

int run_evaluate(const PipelineOptions& pipe, const fs::path& checkpoint, const fs::path& out_dir,
                 bool stamp) {
  const tbdx::ModelParams model = tbdx::load_checkpoint(checkpoint);
  const auto data = tbdx::load_dataset(pipe.manifest);
  const auto samples = build_samples(data, pipe, model.config.input_size);

  std::vector<int> preds, truths;
  std::vector<double> scores;
  for (const tbdx::Sample& s : samples) {
    const tbdx::Prediction p = tbdx::predict(model, s.input);
    preds.push_back(p.label);
    scores.push_back(p.tb_score);
    truths.push_back(s.label);
  }

  const tbdx::ConfusionMatrix cm = tbdx::confusion(preds, truths);
  tbdx::MetricsReport report = tbdx::metrics(cm);
  const bool both_classes = cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0;
  if (both_classes) report.auc = tbdx::auc(scores, truths);

  fs::create_directories(out_dir);
  write_metrics_csv(out_dir / "metrics.csv", report, stamp);
  write_confusion_csv(out_dir / "confusion.csv", cm, stamp);
  write_predictions_csv(out_dir / "predictions.csv", data, preds, scores, stamp);
  if (both_classes) write_roc_csv(out_dir / "roc.csv", tbdx::roc_points(scores, truths), stamp);
  std::cout << "evaluated " << samples.size() << " samples into " << out_dir.string() << "\n";
  return kExitOk;
}

int run_crossval(const PipelineOptions& pipe, const TrainOptions& opt, int folds,
                 const fs::path& out_dir, bool stamp) {
  const tbdx::NetConfig net = tbdx::config_by_name(opt.arch);
  const tbdx::TrainConfig base = resolve_train_config(opt);
  const auto data = tbdx::load_dataset(pipe.manifest);
  const auto samples = build_samples(data, pipe, net.input_size);

  std::vector<int> truths;
  truths.reserve(samples.size());
  for (const tbdx::Sample& s : samples) truths.push_back(s.label);

  const tbdx::FoldRunner runner = [&](const std::vector<std::size_t>& train_idx,
                                      const std::vector<std::size_t>& test_idx,
                                      int fold) {
    tbdx::TrainConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(fold);
    std::vector<tbdx::Sample> train_set;
    train_set.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_set.push_back(samples[i]);
    const tbdx::TrainResult fit =
        tbdx::train(tbdx::build_model(net, cfg.seed), train_set, cfg);
    std::vector<tbdx::ScoredLabel> out;
    out.reserve(test_idx.size());
    for (std::size_t i : test_idx) {
      const tbdx::Prediction p = tbdx::predict(fit.model, samples[i].input);
      out.push_back(tbdx::ScoredLabel{p.label, p.tb_score});
    }
    return out;
  };

  const tbdx::CrossValResult result = tbdx::cross_validate(truths, folds, base.seed, runner);

  fs::create_directories(out_dir);
  {
    auto out = open_csv(out_dir / "metrics.csv", stamp);
    out << "Split," << kMetricsHeader << "\n";
    for (int f = 0; f < folds; ++f) {
      out << "fold-" << f << "," << metrics_row(result.per_fold[f]) << "\n";
    }
    out << "pooled," << metrics_row(result.pooled) << "\n";
  }
  {
    auto out = open_csv(out_dir / "confusion.csv", stamp);
    out << "Split,TP,FN,TN,FP\n";
    for (int f = 0; f < folds; ++f) {
      out << "fold-" << f << "," << confusion_row(result.per_fold_confusion[f]) << "\n";
    }
    out << "pooled," << confusion_row(result.pooled_confusion) << "\n";
  }
  write_predictions_csv(out_dir / "predictions.csv", data, result.predictions, result.scores,
                        stamp);
  if (result.pooled.auc) {
    write_roc_csv(out_dir / "roc.csv", tbdx::roc_points(result.scores, truths), stamp);
  }
  std::cout << "cross-validated " << samples.size() << " samples over " << folds
            << " folds into " << out_dir.string() << "\n";
  return kExitOk;
}

// One row of the gradient-check table; every family is checked end to end
// against central differences.
struct FamilyCheck {
  std::string name;
  double max_rel_err;
};

std::vector<FamilyCheck> run_family_checks(std::uint64_t seed) {
  using namespace tbdx;
  std::vector<FamilyCheck> checks;
  Rng rng(seed);
  const auto randomize = [&rng](Tensord& t, double scale = 1.0) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  };

  {  // conv: weights, bias and input together
    ConvLayer layer{Tensord(Shape{3, 3, 2, 4}), Tensord(Shape{4})};
    Tensord x(Shape{5, 5, 2});
    Tensord w(Shape{5, 5, 4});
    randomize(layer.weights, 0.5);
    randomize(layer.bias, 0.5);
    randomize(x);
    randomize(w);
    const auto loss = [&] { return (conv2d_forward(layer, x).array() * w.array()).sum(); };
    const ConvGrads g = conv2d_backward(layer, x, w);
    checks.push_back({"conv", gradcheck(loss, {&layer.weights, &layer.bias, &x},
                                        {&g.weights, &g.bias, &g.input})});
  }
  {  // maxpool over its input
    Tensord x(Shape{4, 4, 3});
    Tensord w(Shape{2, 2, 3});
    randomize(x);
    randomize(w);
    const auto loss = [&] { return (maxpool_forward(x).output.array() * w.array()).sum(); };
    const MaxPool pool = maxpool_forward(x);
    const Tensord g = maxpool_backward(pool, w);
    checks.push_back({"pool", gradcheck(loss, {&x}, {&g})});
  }
  {  // relu over its input; entries pushed away from the kink
    Tensord x(Shape{3, 4, 2});
    Tensord w(Shape{3, 4, 2});
    randomize(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) < 1e-2) x[i] = x[i] < 0 ? -1e-2 : 1e-2;
    }
    randomize(w);
    const auto loss = [&] { return (relu(x).array() * w.array()).sum(); };
    const Tensord g = relu_backward(x, w);
    checks.push_back({"relu", gradcheck(loss, {&x}, {&g})});
  }
  {  // dense: weights, bias, input
    DenseLayer layer{Tensord(Shape{6, 4}), Tensord(Shape{4})};
    Tensord x(Shape{6});
    Tensord w(Shape{4});
    randomize(layer.weights, 0.5);
    randomize(layer.bias, 0.5);
    randomize(x);
    randomize(w);
    const auto loss = [&] { return (dense_forward(layer, x).array() * w.array()).sum(); };
    const DenseGrads g = dense_backward(layer, x, w);
    checks.push_back({"dense", gradcheck(loss, {&layer.weights, &layer.bias, &x},
                                         {&g.weights, &g.bias, &g.input})});
  }
  {  // softmax + cross-entropy against the logits
    Tensord logits(Shape{5});
    randomize(logits);
    const int label = 2;
    const auto loss = [&] { return cross_entropy(softmax(logits), label); };
    const Tensord g = cross_entropy_logit_grad(softmax(logits), label);
    checks.push_back({"softmax-xent", gradcheck(loss, {&logits}, {&g})});
  }
  {  // a single LSTM cell: all parameters and all inputs
    const Eigen::Index d = 4, h = 3;
    LstmParams p{Tensord(Shape{d, 4 * h}), Tensord(Shape{h, 4 * h}), Tensord(Shape{4 * h})};
    Tensord x(Shape{d}), h0(Shape{h}), c0(Shape{h}), wh(Shape{h}), wc(Shape{h});
    for (Tensord* t : {&p.w_in, &p.w_rec, &p.bias}) randomize(*t, 0.4);
    randomize(x);
    randomize(h0, 0.5);
    randomize(c0, 0.5);
    randomize(wh);
    randomize(wc);
    const auto loss = [&] {
      const LstmState s = lstm_cell(p, x, h0, c0);
      return (s.h.array() * wh.array()).sum() + (s.c.array() * wc.array()).sum();
    };
    const LstmCellCache cache = lstm_cell_forward(p, x, h0, c0);
    const LstmCellGrads g = lstm_cell_backward(p, cache, wh, wc);
    checks.push_back({"lstm-cell",
                      gradcheck(loss, {&p.w_in, &p.w_rec, &p.bias, &x, &h0, &c0},
                                {&g.w_in, &g.w_rec, &g.bias, &g.x, &g.h_prev, &g.c_prev})});
  }
  {  // backpropagation through time across a bidirectional pair
    const Eigen::Index t_len = 3, d = 3, h = 2;
    const auto make = [&] {
      LstmParams p{Tensord(Shape{d, 4 * h}), Tensord(Shape{h, 4 * h}), Tensord(Shape{4 * h})};
      for (Tensord* t : {&p.w_in, &p.w_rec, &p.bias}) randomize(*t, 0.4);
      return p;
    };
    BiLstmParams p{make(), make()};
    Tensord xs(Shape{t_len, d}), w(Shape{t_len, 2 * h});
    randomize(xs);
    randomize(w);
    const auto loss = [&] { return (bilstm(p, xs).array() * w.array()).sum(); };
    const BiLstmCache cache = bilstm_forward(p, xs);
    const BiLstmGrads g = bilstm_backward(p, cache, w);
    checks.push_back(
        {"bptt", gradcheck(loss,
                           {&p.forward.w_in, &p.forward.w_rec, &p.forward.bias, &p.backward.w_in,
                            &p.backward.w_rec, &p.backward.bias, &xs},
                           {&g.forward.w_in, &g.forward.w_rec, &g.forward.bias, &g.backward.w_in,
                            &g.backward.w_rec, &g.backward.bias, &g.inputs})});
  }
  {  // the whole shrunken network, sampled entries per tensor
    ModelParams m = build_model(tiny_config(), seed);
    Tensord x(Shape{m.config.input_size, m.config.input_size, m.config.input_channels});
    randomize(x, 0.5);
    const int label = 1;
    ModelGrads grads = zero_grads(m);
    model_loss(m, x, label, &grads);
    std::vector<Tensord*> params;
    std::vector<const Tensord*> analytic;
    auto named = named_params(m);
    for (std::size_t i = 0; i < named.size(); ++i) {
      params.push_back(named[i].second);
      analytic.push_back(&grads.tensors[i]);
    }
    const auto loss = [&] { return model_loss(m, x, label, nullptr); };
    checks.push_back({"full-model", gradcheck_sampled(loss, params, analytic, 24, seed)});
  }
  return checks;
}

int run_gradcheck(std::uint64_t seed) {
  const std::vector<FamilyCheck> checks = run_family_checks(seed);
  bool breached = false;
  for (const FamilyCheck& c : checks) {
    std::cout << c.name << " max relative error " << format("%.3e", c.max_rel_err) << "\n";
    if (!(c.max_rel_err < 1e-4)) breached = true;
  }
  if (breached) {
    std::cout << "gradient check FAILED (threshold 1e-4)\n";
    return kExitNumerical;
  }
  std::cout << "all families within 1e-4\n";
  return kExitOk;
}

struct ReportOptions {
  std::string pred_csv;
  std::int64_t tp = -1, fp = -1, tn = -1, fn = -1;
};

int run_report(const ReportOptions& opt, const fs::path& out_dir, bool stamp) {
  fs::create_directories(out_dir);
  if (!opt.pred_csv.empty()) {
    std::ifstream in(opt.pred_csv);
    if (!in) throw tbdx::IoError("cannot open " + opt.pred_csv);
    std::string line;
    if (!std::getline(in, line)) throw tbdx::IoError(opt.pred_csv + " is empty");
    while (!line.empty() && line.front() == '#') {
      if (!std::getline(in, line)) throw tbdx::IoError(opt.pred_csv + " has no header");
    }
    const bool with_path = line == "path,truth,pred,score";
    if (!with_path && line != "truth,pred,score") {
      throw tbdx::IoError(opt.pred_csv + ": expected header path,truth,pred,score");
    }
    std::vector<int> preds, truths;
    std::vector<double> scores;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::size_t pos = 0;
      while (true) {
        const std::size_t comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      const std::size_t want = with_path ? 4 : 3;
      if (fields.size() != want) {
        throw tbdx::IoError(opt.pred_csv + ":" + std::to_string(line_number) + ": bad row");
      }
      const std::size_t base = with_path ? 1 : 0;
      try {
        truths.push_back(std::stoi(fields[base]));
        preds.push_back(std::stoi(fields[base + 1]));
        scores.push_back(std::stod(fields[base + 2]));
      } catch (const std::exception&) {
        throw tbdx::IoError(opt.pred_csv + ":" + std::to_string(line_number) + ": bad row");
      }
    }
    const tbdx::ConfusionMatrix cm = tbdx::confusion(preds, truths);
    tbdx::MetricsReport report = tbdx::metrics(cm);
    const bool both = cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0;
    if (both) report.auc = tbdx::auc(scores, truths);
    write_metrics_csv(out_dir / "metrics.csv", report, stamp);
    write_confusion_csv(out_dir / "confusion.csv", cm, stamp);
    if (both) write_roc_csv(out_dir / "roc.csv", tbdx::roc_points(scores, truths), stamp);
  } else {
    if (opt.tp < 0 || opt.fp < 0 || opt.tn < 0 || opt.fn < 0) {
      throw tbdx::ArgumentError("report needs --pred-csv or all of --tp/--fn/--tn/--fp");
    }
    const tbdx::ConfusionMatrix cm{opt.tp, opt.tn, opt.fp, opt.fn};
    write_metrics_csv(out_dir / "metrics.csv", tbdx::metrics(cm), stamp);
    write_confusion_csv(out_dir / "confusion.csv", cm, stamp);
  }
  std::cout << "report written to " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TB chest x-ray screening pipeline"};
  app.require_subcommand(1);

  PipelineOptions pipe;
  TrainOptions train_opt;
  ReportOptions report_opt;
  std::string out_dir;
  std::string checkpoint;
  bool no_timestamp = false;
  int folds = 10;
  std::uint64_t gradcheck_seed = 0;

  const auto add_pipeline_flags = [&](CLI::App* cmd, bool atlas_required) {
    cmd->add_option("--manifest", pipe.manifest, "dataset manifest (path,label CSV)")
        ->required();
    auto* atlas =
        cmd->add_option("--atlas-dir", pipe.atlas_dir, "directory of name.png + name_mask.png");
    if (atlas_required) atlas->required();
    cmd->add_option("--epsilon", pipe.epsilon, "guided-filter regularizer");
    cmd->add_option("--lambda", pipe.seg.lambda, "graph-cut smoothness weight");
    cmd->add_option("--sigma", pipe.seg.sigma, "pairwise intensity bandwidth");
  };
  const auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_flag("--no-timestamp", no_timestamp, "omit the generated-at header line");
  };
  const auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", train_opt.config.seed, "RNG seed");
    cmd->add_option("--epochs", train_opt.config.epochs, "training epochs");
    cmd->add_option("--lr", train_opt.config.learning_rate, "learning rate");
    cmd->add_option("--batch", train_opt.config.batch_size, "minibatch size");
    cmd->add_flag("--freeze-extractor", train_opt.config.freeze_extractor,
                  "train only the recurrent layers and the head");
    cmd->add_option("--arch", train_opt.arch, "vgg16-bilstm or tiny");
    cmd->add_option("--optimizer", train_opt.optimizer, "adam or sgd");
  };

  auto* cmd_denoise = app.add_subcommand("denoise", "guided-filter the manifest images");
  add_pipeline_flags(cmd_denoise, false);
  add_out(cmd_denoise);

  auto* cmd_segment = app.add_subcommand("segment", "atlas + graph-cut lung masks");
  add_pipeline_flags(cmd_segment, true);
  cmd_segment->add_option("--k", pipe.seg.references, "reference images kept after ranking");
  add_out(cmd_segment);

  auto* cmd_train = app.add_subcommand("train", "fit the classifier");
  add_pipeline_flags(cmd_train, false);
  cmd_train->add_option("--k", pipe.seg.references, "reference images kept after ranking");
  cmd_train->add_option("--checkpoint", checkpoint, "checkpoint file to write")->required();
  add_train_flags(cmd_train);
  add_out(cmd_train);

  auto* cmd_eval = app.add_subcommand("evaluate", "score a manifest with a checkpoint");
  add_pipeline_flags(cmd_eval, false);
  cmd_eval->add_option("--k", pipe.seg.references, "reference images kept after ranking");
  cmd_eval->add_option("--checkpoint", checkpoint, "checkpoint file to read")->required();
  add_out(cmd_eval);

  auto* cmd_crossval = app.add_subcommand("crossval", "stratified k-fold protocol");
  add_pipeline_flags(cmd_crossval, false);
  cmd_crossval->add_option("--k", folds, "fold count");
  add_train_flags(cmd_crossval);
  add_out(cmd_crossval);

  auto* cmd_gradcheck =
      app.add_subcommand("gradcheck", "finite-difference check of every layer family");
  cmd_gradcheck->add_option("--seed", gradcheck_seed, "RNG seed");

  auto* cmd_report = app.add_subcommand("report", "render metrics + ROC CSVs");
  cmd_report->add_option("--pred-csv", report_opt.pred_csv,
                         "predictions CSV (truth,pred,score with optional path column)");
  cmd_report->add_option("--tp", report_opt.tp, "true positives");
  cmd_report->add_option("--fn", report_opt.fn, "false negatives");
  cmd_report->add_option("--tn", report_opt.tn, "true negatives");
  cmd_report->add_option("--fp", report_opt.fp, "false positives");
  add_out(cmd_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  const bool stamp = !no_timestamp;
  try {
    if (cmd_denoise->parsed()) return run_denoise(pipe, out_dir);
    if (cmd_segment->parsed()) return run_segment(pipe, out_dir);
    if (cmd_train->parsed()) return run_train(pipe, train_opt, checkpoint, out_dir, stamp);
    if (cmd_eval->parsed()) return run_evaluate(pipe, checkpoint, out_dir, stamp);
    if (cmd_crossval->parsed()) return run_crossval(pipe, train_opt, folds, out_dir, stamp);
    if (cmd_gradcheck->parsed()) return run_gradcheck(gradcheck_seed);
    if (cmd_report->parsed()) return run_report(report_opt, out_dir, stamp);
  } catch (const tbdx::RegistrationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
