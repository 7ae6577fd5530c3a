#include "termspan/checkpoint.hpp"

#include <fstream>

namespace termspan {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  json e;
  e["word_dim"] = cfg.encoder.word_dim;
  e["char_dim"] = cfg.encoder.char_dim;
  e["char_window"] = cfg.encoder.char_window;
  e["char_filters"] = cfg.encoder.char_filters;
  e["lstm_hidden"] = cfg.encoder.lstm_hidden;
  e["lstm_layers"] = cfg.encoder.lstm_layers;
  e["dropout"] = cfg.encoder.dropout;
  e["lowercase_words"] = cfg.encoder.lowercase_words;
  e["use_pos"] = cfg.encoder.use_pos;
  e["pos_dim"] = cfg.encoder.pos_dim;
  e["pos_own_pipeline"] = cfg.encoder.pos_own_pipeline;
  e["pos_lstm_layers"] = cfg.encoder.pos_lstm_layers;
  e["pos_lstm_hidden"] = cfg.encoder.pos_lstm_hidden;
  e["use_external"] = cfg.encoder.use_external;
  e["external_dim"] = cfg.encoder.external_dim;
  e["external_own_pipeline"] = cfg.encoder.external_own_pipeline;
  e["external_lstm_layers"] = cfg.encoder.external_lstm_layers;
  e["external_lstm_hidden"] = cfg.encoder.external_lstm_hidden;

  json j;
  j["encoder"] = e;
  j["max_span_length"] = cfg.max_span_length;
  j["length_dim"] = cfg.length_dim;
  j["head_hidden"] = cfg.head_hidden;
  j["head_depth"] = cfg.head_depth;
  j["alpha"] = cfg.alpha;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["stage2_batch_size"] = cfg.stage2_batch_size;
  j["early_stop"] = cfg.early_stop;
  j["stage1_max_epochs"] = cfg.stage1_max_epochs;
  j["stage2_max_epochs"] = cfg.stage2_max_epochs;
  j["seed"] = cfg.seed;
  j["vocab_min_count"] = cfg.vocab_min_count;
  j["freeze_encoder_stage2"] = cfg.freeze_encoder_stage2;
  j["stage2_from_best_recall"] = cfg.stage2_from_best_recall;
  j["count_unreachable_in_recall"] = cfg.count_unreachable_in_recall;
  j["max_sentence_tokens"] = cfg.max_sentence_tokens;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  const json& e = j.at("encoder");
  cfg.encoder.word_dim = e.at("word_dim").get<int>();
  cfg.encoder.char_dim = e.at("char_dim").get<int>();
  cfg.encoder.char_window = e.at("char_window").get<int>();
  cfg.encoder.char_filters = e.at("char_filters").get<int>();
  cfg.encoder.lstm_hidden = e.at("lstm_hidden").get<int>();
  cfg.encoder.lstm_layers = e.at("lstm_layers").get<int>();
  cfg.encoder.dropout = e.at("dropout").get<double>();
  cfg.encoder.lowercase_words = e.at("lowercase_words").get<bool>();
  cfg.encoder.use_pos = e.at("use_pos").get<bool>();
  cfg.encoder.pos_dim = e.at("pos_dim").get<int>();
  cfg.encoder.pos_own_pipeline = e.at("pos_own_pipeline").get<bool>();
  cfg.encoder.pos_lstm_layers = e.at("pos_lstm_layers").get<int>();
  cfg.encoder.pos_lstm_hidden = e.at("pos_lstm_hidden").get<int>();
  cfg.encoder.use_external = e.at("use_external").get<bool>();
  cfg.encoder.external_dim = e.at("external_dim").get<int>();
  cfg.encoder.external_own_pipeline = e.at("external_own_pipeline").get<bool>();
  cfg.encoder.external_lstm_layers = e.at("external_lstm_layers").get<int>();
  cfg.encoder.external_lstm_hidden = e.at("external_lstm_hidden").get<int>();

  cfg.max_span_length = j.at("max_span_length").get<int>();
  cfg.length_dim = j.at("length_dim").get<int>();
  cfg.head_hidden = j.at("head_hidden").get<int>();
  cfg.head_depth = j.at("head_depth").get<int>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.stage2_batch_size = j.value("stage2_batch_size", 0);
  cfg.early_stop = j.at("early_stop").get<int>();
  cfg.stage1_max_epochs = j.at("stage1_max_epochs").get<int>();
  cfg.stage2_max_epochs = j.at("stage2_max_epochs").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.vocab_min_count = j.at("vocab_min_count").get<int>();
  cfg.freeze_encoder_stage2 = j.at("freeze_encoder_stage2").get<bool>();
  cfg.stage2_from_best_recall = j.at("stage2_from_best_recall").get<bool>();
  cfg.count_unreachable_in_recall = j.at("count_unreachable_in_recall").get<bool>();
  cfg.max_sentence_tokens = j.at("max_sentence_tokens").get<int>();
  return cfg;
}

namespace {

json store_to_json(const ParameterStore& store) {
  json out = json::array();
  for (const auto& p : store.all()) {
    json entry;
    entry["name"] = p->name;
    entry["rows"] = p->value.rows();
    entry["cols"] = p->value.cols();
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    entry["data"] = std::move(data);
    out.push_back(std::move(entry));
  }
  return out;
}

void store_from_json(const json& j, ParameterStore& store) {
  std::size_t loaded = 0;
  for (const auto& entry : j) {
    const std::string name = entry.at("name").get<std::string>();
    Parameter* p = store.find(name);
    if (p == nullptr) {
      throw std::runtime_error("checkpoint parameter " + name + " does not exist in this model");
    }
    const auto rows = entry.at("rows").get<Index>();
    const auto cols = entry.at("cols").get<Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error("checkpoint parameter " + name + " has shape " + std::to_string(rows) +
                               "x" + std::to_string(cols) + ", expected " +
                               std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    }
    const auto data = entry.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != p->value.size()) {
      throw std::runtime_error("checkpoint parameter " + name + " has wrong element count");
    }
    p->value = Eigen::Map<const Matrix>(data.data(), rows, cols);
    ++loaded;
  }
  if (loaded != store.count()) {
    throw std::runtime_error("checkpoint is missing " + std::to_string(store.count() - loaded) +
                             " parameters");
  }
}

}  // namespace

void TermExtractionModel::save(const std::string& path) const {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = model_config_to_json(cfg_);
  j["vocab"] = {{"words", vocab_.words()},
                {"chars", vocab_.chars()},
                {"pos", vocab_.pos_tags()},
                {"lowercase", vocab_.lowercase()}};
  j["stage1"] = store_to_json(stage1_);
  j["stage2"] = store_to_json(stage2_);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

std::unique_ptr<TermExtractionModel> TermExtractionModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat) {
    throw std::runtime_error("not a termspan checkpoint: " + path);
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(j.value("version", 0)));
  }
  ModelConfig cfg = model_config_from_json(j.at("config"));
  const json& v = j.at("vocab");
  Vocab vocab(v.at("words").get<std::vector<std::string>>(), v.at("chars").get<std::vector<int>>(),
              v.at("pos").get<std::vector<std::string>>(), v.at("lowercase").get<bool>());

  auto model = std::make_unique<TermExtractionModel>(cfg, std::move(vocab));
  store_from_json(j.at("stage1"), model->stage1_);
  store_from_json(j.at("stage2"), model->stage2_);
  return model;
}

}  // namespace termspan
