#include <cstring>
#include <fstream>

#include <json.hpp>

#include "amodal/model.hpp"

namespace amodal {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'M', 'K', 'C', 'K', 'P', 'T', '1'};

json config_to_json(const PredictorConfig& cfg) {
  json j;
  j["image_size"] = cfg.image_size;
  j["patch_size"] = cfg.patch_size;
  j["embed_dim"] = cfg.embed_dim;
  j["heads"] = cfg.heads;
  j["encoder_depth"] = cfg.encoder_depth;
  j["decoder_depth"] = cfg.decoder_depth;
  j["seed"] = cfg.seed;
  json parts = json::array();
  for (const auto p : cfg.trainable_parts) parts.push_back(to_string(p));
  j["trainable_parts"] = parts;
  return j;
}

PredictorConfig config_from_json(const json& j) {
  PredictorConfig cfg;
  cfg.image_size = j.at("image_size").get<int>();
  cfg.patch_size = j.at("patch_size").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.encoder_depth = j.at("encoder_depth").get<int>();
  cfg.decoder_depth = j.at("decoder_depth").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.trainable_parts.clear();
  for (const auto& p : j.at("trainable_parts")) {
    cfg.trainable_parts.insert(model_part_from_string(p.get<std::string>()));
  }
  return cfg;
}

json blob_index(const std::vector<TensorBlob>& blobs) {
  json arr = json::array();
  for (const auto& t : blobs) {
    json jt;
    jt["name"] = t.name;
    jt["rows"] = t.rows;
    jt["cols"] = t.cols;
    arr.push_back(jt);
  }
  return arr;
}

std::vector<TensorBlob> blob_shapes_from_json(const json& arr) {
  std::vector<TensorBlob> blobs;
  for (const auto& jt : arr) {
    TensorBlob t;
    t.name = jt.at("name").get<std::string>();
    t.rows = jt.at("rows").get<int>();
    t.cols = jt.at("cols").get<int>();
    blobs.push_back(std::move(t));
  }
  return blobs;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json header;
  header["format"] = 1;
  header["dtype"] = "float32";
  header["config"] = config_to_json(ck.config);
  header["loss"] = {{"lambda_iou", ck.loss.lambda_iou},
                    {"gamma", ck.loss.gamma},
                    {"probability_floor", ck.loss.probability_floor}};
  header["policy"] = {
      {"mode", to_string(ck.policy.mode)},
      {"random_modal_probability", ck.policy.random_modal_probability}};
  header["seed"] = ck.seed;
  header["iteration"] = ck.iteration;
  header["tensors"] = blob_index(ck.tensors);
  header["optimizer"] = blob_index(ck.optimizer);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* blobs : {&ck.tensors, &ck.optimizer}) {
    for (const auto& t : *blobs) {
      out.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw SchemaError("not a checkpoint file: " + path);
  }
  const std::uint64_t header_len = read_u64(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw SchemaError("truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError("bad checkpoint header: " + std::string(e.what()));
  }

  Checkpoint ck;
  try {
    ck.config = config_from_json(header.at("config"));
    const auto& jl = header.at("loss");
    ck.loss.lambda_iou = jl.at("lambda_iou").get<double>();
    ck.loss.gamma = jl.at("gamma").get<double>();
    ck.loss.probability_floor = jl.at("probability_floor").get<double>();
    const auto& jp = header.at("policy");
    ck.policy.mode = prompt_mode_from_string(jp.at("mode").get<std::string>());
    ck.policy.random_modal_probability =
        jp.at("random_modal_probability").get<double>();
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.iteration = header.at("iteration").get<std::int64_t>();
    ck.tensors = blob_shapes_from_json(header.at("tensors"));
    ck.optimizer = blob_shapes_from_json(header.at("optimizer"));
  } catch (const json::exception& e) {
    throw SchemaError("bad checkpoint header field: " + std::string(e.what()));
  }

  for (auto* blobs : {&ck.tensors, &ck.optimizer}) {
    for (auto& t : *blobs) {
      t.data.resize(static_cast<std::size_t>(t.rows) * t.cols);
      in.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
  }
  if (!in) throw SchemaError("truncated checkpoint data: " + path);
  return ck;
}

Checkpoint model_to_checkpoint(Model& model) {
  Checkpoint ck;
  ck.config = model.config();
  ck.seed = model.config().seed;
  model.visit([&](const std::string& name, ModelPart, nn::Mat<float>& m) {
    TensorBlob t;
    t.name = name;
    t.rows = static_cast<int>(m.rows());
    t.cols = static_cast<int>(m.cols());
    t.data.assign(m.data(), m.data() + m.size());
    ck.tensors.push_back(std::move(t));
  });
  return ck;
}

Model model_from_checkpoint(const Checkpoint& ck) {
  Model model(ck.config);
  std::size_t index = 0;
  model.visit([&](const std::string& name, ModelPart, nn::Mat<float>& m) {
    if (index >= ck.tensors.size()) {
      throw SchemaError("checkpoint/config mismatch: missing tensor " + name);
    }
    const TensorBlob& t = ck.tensors[index++];
    if (t.name != name || t.rows != m.rows() || t.cols != m.cols()) {
      throw SchemaError("checkpoint/config mismatch at tensor " + name +
                        " (found " + t.name + " " + std::to_string(t.rows) +
                        "x" + std::to_string(t.cols) + ")");
    }
    std::memcpy(m.data(), t.data.data(), t.data.size() * sizeof(float));
  });
  if (index != ck.tensors.size()) {
    throw SchemaError("checkpoint/config mismatch: extra tensors present");
  }
  return model;
}

}  // namespace amodal
