#include "docee/train/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "docee/util/errors.hpp"

namespace docee::train {

namespace {

constexpr char kMagic[] = "DOCEECKPT1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_mat(std::ofstream& out, const ad::Mat& m) {
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

void read_mat(std::ifstream& in, ad::Mat& m) {
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      m(r, c) = v;
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  nlohmann::ordered_json header;
  header["config"] = config_to_json(model.config());
  nlohmann::ordered_json schema;
  schema["types"] = model.schema().types;
  schema["roles"] = nlohmann::ordered_json::object();
  for (const auto& t : model.schema().types)
    schema["roles"][t] = model.schema().roles.at(t);
  header["schema"] = schema;
  header["vocab"] = model.vocab().id_to_token;
  header["ner_kinds"] = model.ner_kinds();
  header["adam_t"] = model.store().adam_t();
  header["params"] = nlohmann::ordered_json::array();
  for (const auto& [name, slot] : model.store().slots())
    header["params"].push_back({{"name", name},
                                {"rows", slot.value.rows()},
                                {"cols", slot.value.cols()}});

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::string hs = header.dump();
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, slot] : model.store().slots()) {
    write_mat(out, slot.value);
    write_mat(out, slot.adam_m);
    write_mat(out, slot.adam_v);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::string(magic, kMagicLen) != kMagic)
    throw IoError("not a checkpoint file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  if (!in) throw IoError("truncated checkpoint header: " + path);
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto file_end = in.tellg();
  in.seekg(body_start);
  if (hlen > static_cast<std::uint64_t>(file_end - body_start))
    throw IoError("corrupt checkpoint header length: " + path);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("truncated checkpoint header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint header: " + std::string(e.what()));
  }

  TrainConfig cfg;
  corpus::EventSchema schema;
  enc::Vocab vocab;
  int kinds = 0;
  try {
    cfg = config_from_json(header.at("config"));
    schema.types = header.at("schema").at("types").get<std::vector<std::string>>();
    for (const auto& t : schema.types)
      schema.roles[t] =
          header.at("schema").at("roles").at(t).get<std::vector<std::string>>();
    vocab.id_to_token = header.at("vocab").get<std::vector<std::string>>();
    kinds = header.at("ner_kinds").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint header: " + std::string(e.what()));
  }
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i)
    vocab.token_to_id[vocab.id_to_token[i]] = static_cast<int>(i);

  auto model = std::make_unique<Model>(cfg, schema, vocab, kinds);
  auto& store = model->store();
  if (header.at("params").size() != store.slots().size())
    throw IoError("checkpoint parameter list does not match the model");
  auto it = store.slots().begin();
  for (const auto& pj : header.at("params")) {
    const std::string name = pj.at("name").get<std::string>();
    if (it == store.slots().end() || it->first != name)
      throw IoError("checkpoint parameter '" + name + "' does not match the model");
    ad::ParamSlot& slot = it->second;
    if (slot.value.rows() != pj.at("rows").get<long>() ||
        slot.value.cols() != pj.at("cols").get<long>())
      throw IoError("checkpoint shape mismatch for '" + name + "'");
    read_mat(in, slot.value);
    read_mat(in, slot.adam_m);
    read_mat(in, slot.adam_v);
    ++it;
  }
  if (!in) throw IoError("truncated checkpoint blobs: " + path);
  store.set_adam_t(header.at("adam_t").get<long>());
  return model;
}

}  // namespace docee::train
