#include "tbdx/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include <json.hpp>

#include "tbdx/errors.hpp"
#include "tbdx/lstm.hpp"

namespace tbdx {
namespace {

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

using OrderedJson = nlohmann::ordered_json;

ModelParams skeleton(const NetConfig& config) {
  ModelParams m;
  m.config = config;
  Eigen::Index c_in = config.input_channels;
  for (std::size_t b = 0; b < config.block_convs.size(); ++b) {
    const Eigen::Index c_out = config.block_channels[b];
    for (int i = 0; i < config.block_convs[b]; ++i) {
      m.conv.push_back(ConvLayer{Tensord(Shape{3, 3, c_in, c_out}), Tensord(Shape{c_out})});
      c_in = c_out;
    }
  }
  const auto lstm = [](Eigen::Index d_in, Eigen::Index h) {
    return LstmParams{Tensord(Shape{d_in, 4 * h}), Tensord(Shape{h, 4 * h}),
                      Tensord(Shape{4 * h})};
  };
  const Eigen::Index features = config.block_channels.back();
  m.lstm1 = BiLstmParams{lstm(features, config.lstm1_hidden), lstm(features, config.lstm1_hidden)};
  m.lstm2 = BiLstmParams{lstm(2 * config.lstm1_hidden, config.lstm2_hidden),
                         lstm(2 * config.lstm1_hidden, config.lstm2_hidden)};
  m.head = DenseLayer{Tensord(Shape{config.flat_size(), config.classes}),
                      Tensord(Shape{config.classes})};
  return m;
}

OrderedJson arch_json(const NetConfig& c) {
  OrderedJson arch;
  arch["name"] = c.name();
  arch["input_size"] = c.input_size;
  arch["input_channels"] = c.input_channels;
  arch["block_channels"] = c.block_channels;
  arch["block_convs"] = c.block_convs;
  arch["block_pool"] = std::vector<int>(c.block_pool.begin(), c.block_pool.end());
  arch["lstm1_hidden"] = c.lstm1_hidden;
  arch["lstm2_hidden"] = c.lstm2_hidden;
  arch["classes"] = c.classes;
  return arch;
}

NetConfig arch_from_json(const OrderedJson& arch) {
  NetConfig c;
  c.input_size = arch.at("input_size").get<Eigen::Index>();
  c.input_channels = arch.at("input_channels").get<Eigen::Index>();
  c.block_channels = arch.at("block_channels").get<std::vector<Eigen::Index>>();
  c.block_convs = arch.at("block_convs").get<std::vector<int>>();
  const auto pools = arch.at("block_pool").get<std::vector<int>>();
  c.block_pool.assign(pools.size(), false);
  for (std::size_t i = 0; i < pools.size(); ++i) c.block_pool[i] = pools[i] != 0;
  c.lstm1_hidden = arch.at("lstm1_hidden").get<Eigen::Index>();
  c.lstm2_hidden = arch.at("lstm2_hidden").get<Eigen::Index>();
  c.classes = arch.at("classes").get<Eigen::Index>();
  return c;
}

template <typename T>
void append_raw(std::vector<char>& out, const T& value) {
  const auto* bytes = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& m,
                     CheckpointDtype dtype) {
  const auto named = named_params(m);
  const char* dtype_tag = dtype == CheckpointDtype::kF32 ? "f32" : "f64";
  const std::size_t scalar_bytes = dtype == CheckpointDtype::kF32 ? 4 : 8;

  std::vector<char> payload;
  OrderedJson directory;
  directory["gate_order"] = kLstmGateOrder;
  directory["arch"] = arch_json(m.config);
  directory["tensors"] = OrderedJson::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : named) {
    const std::size_t length = static_cast<std::size_t>(tensor->size()) * scalar_bytes;
    OrderedJson entry;
    entry["name"] = name;
    entry["dtype"] = dtype_tag;
    entry["shape"] = tensor->shape();
    entry["offset"] = offset;
    entry["length"] = length;
    directory["tensors"].push_back(std::move(entry));

    payload.reserve(payload.size() + length);
    for (Eigen::Index i = 0; i < tensor->size(); ++i) {
      if (dtype == CheckpointDtype::kF32) {
        append_raw(payload, static_cast<float>((*tensor)[i]));
      } else {
        append_raw(payload, (*tensor)[i]);
      }
    }
    offset += length;
  }

  const std::string dir_text = directory.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t dir_length = dir_text.size();
  out.write(reinterpret_cast<const char*>(&dir_length), sizeof(dir_length));
  out.write(dir_text.data(), static_cast<std::streamsize>(dir_text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());

  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t dir_length = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&dir_length), sizeof(dir_length));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError(path.string() + " is not a TBDX checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }

  std::string dir_text(dir_length, '\0');
  in.read(dir_text.data(), static_cast<std::streamsize>(dir_length));
  std::vector<char> payload(std::istreambuf_iterator<char>(in), {});
  if (!in.eof() && !in) throw IoError("truncated checkpoint " + path.string());

  OrderedJson directory;
  try {
    directory = OrderedJson::parse(dir_text);
  } catch (const OrderedJson::parse_error& e) {
    throw IoError("corrupt checkpoint directory: " + std::string(e.what()));
  }
  if (directory.at("gate_order").get<std::string>() != kLstmGateOrder) {
    throw IoError("checkpoint uses an unsupported LSTM gate order");
  }

  ModelParams m = skeleton(arch_from_json(directory.at("arch")));
  auto named = named_params(m);
  std::map<std::string, Tensord*> by_name;
  for (auto& [name, tensor] : named) by_name[name] = tensor;

  for (const OrderedJson& entry : directory.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw IoError("unexpected or duplicate tensor \"" + name + "\" in checkpoint");
    }
    Tensord* tensor = it->second;
    if (entry.at("shape").get<Shape>() != tensor->shape()) {
      throw IoError("tensor \"" + name + "\" has the wrong shape");
    }
    const auto dtype = entry.at("dtype").get<std::string>();
    const std::size_t scalar_bytes = dtype == "f32" ? 4 : 8;
    if (dtype != "f32" && dtype != "f64") {
      throw IoError("tensor \"" + name + "\" has unsupported dtype " + dtype);
    }
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto length = entry.at("length").get<std::size_t>();
    if (length != static_cast<std::size_t>(tensor->size()) * scalar_bytes ||
        offset + length > payload.size()) {
      throw IoError("tensor \"" + name + "\" points outside the payload");
    }
    const char* src = payload.data() + offset;
    for (Eigen::Index i = 0; i < tensor->size(); ++i) {
      if (dtype == "f32") {
        float v;
        std::memcpy(&v, src + static_cast<std::size_t>(i) * 4, 4);
        (*tensor)[i] = static_cast<double>(v);
      } else {
        double v;
        std::memcpy(&v, src + static_cast<std::size_t>(i) * 8, 8);
        (*tensor)[i] = v;
      }
    }
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw IoError("checkpoint is missing " + std::to_string(by_name.size()) +
                  " tensors, first \"" + by_name.begin()->first + "\"");
  }
  return m;
}

}  // namespace tbdx
