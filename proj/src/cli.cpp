#include "termspan/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "termspan/checkpoint.hpp"
#include "termspan/sha256.hpp"

namespace termspan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key \"" + key + "\": expected a boolean, got \"" + value + "\"");
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key \"" + key + "\": expected an integer, got \"" + value + "\"");
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find(':');
    if (sep == std::string::npos) sep = line.find('=');
    if (sep == std::string::npos) {
      throw ConfigError("config file line " + std::to_string(line_no) +
                        ": expected \"key: value\"");
    }
    const std::string key = trim(line.substr(0, sep));
    const std::string value = trim(line.substr(sep + 1));
    if (key.empty()) {
      throw ConfigError("config file line " + std::to_string(line_no) + ": empty key");
    }
    entries[key] = value;
  }
  return entries;
}

void apply_config_entry(ModelConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "DIM_Word Embedding") {
    cfg.encoder.word_dim = parse_int(value, key);
  } else if (key == "DIM_POS-tag Embedding") {
    cfg.encoder.pos_dim = parse_int(value, key);
  } else if (key == "DIM_Word LSTM") {
    cfg.encoder.lstm_hidden = parse_int(value, key);
  } else if (key == "DIM_Span Length") {
    cfg.length_dim = parse_int(value, key);
  } else if (key == "Word LSTM Layers") {
    cfg.encoder.lstm_layers = parse_int(value, key);
  } else if (key == "POS-tag LSTM Layers") {
    cfg.encoder.pos_lstm_layers = parse_int(value, key);
  } else if (key == "POS-tag LSTM Hidden") {
    cfg.encoder.pos_lstm_hidden = parse_int(value, key);
  } else if (key == "Learning Rate") {
    cfg.learning_rate = parse_double(value, key);
  } else if (key == "Batch Size") {
    cfg.batch_size = parse_int(value, key);
  } else if (key == "Random Seed") {
    cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  } else if (key == "Dropout") {
    cfg.encoder.dropout = parse_double(value, key);
  } else if (key == "Term Ratio") {
    cfg.alpha = parse_double(value, key);
  } else if (key == "Early Stop") {
    cfg.early_stop = parse_int(value, key);
  } else if (key == "Stage2 Batch Size") {
    cfg.stage2_batch_size = parse_int(value, key);
  } else if (key == "Max Span Length") {
    cfg.max_span_length = parse_int(value, key);
  } else if (key == "DIM_Char Embedding") {
    cfg.encoder.char_dim = parse_int(value, key);
  } else if (key == "Char CNN Window") {
    cfg.encoder.char_window = parse_int(value, key);
  } else if (key == "Char CNN Filters") {
    cfg.encoder.char_filters = parse_int(value, key);
  } else if (key == "Head Hidden") {
    cfg.head_hidden = parse_int(value, key);
  } else if (key == "Head Depth") {
    cfg.head_depth = parse_int(value, key);
  } else if (key == "Stage1 Max Epochs") {
    cfg.stage1_max_epochs = parse_int(value, key);
  } else if (key == "Stage2 Max Epochs") {
    cfg.stage2_max_epochs = parse_int(value, key);
  } else if (key == "Vocab Min Count") {
    cfg.vocab_min_count = parse_int(value, key);
  } else if (key == "Lowercase Words") {
    cfg.encoder.lowercase_words = parse_bool(value, key);
  } else if (key == "POS Own Pipeline") {
    cfg.encoder.pos_own_pipeline = parse_bool(value, key);
  } else if (key == "External Own Pipeline") {
    cfg.encoder.external_own_pipeline = parse_bool(value, key);
  } else if (key == "External LSTM Layers") {
    cfg.encoder.external_lstm_layers = parse_int(value, key);
  } else if (key == "External LSTM Hidden") {
    cfg.encoder.external_lstm_hidden = parse_int(value, key);
  } else if (key == "Freeze Encoder Stage2") {
    cfg.freeze_encoder_stage2 = parse_bool(value, key);
  } else if (key == "Stage2 From Best Recall") {
    cfg.stage2_from_best_recall = parse_bool(value, key);
  } else if (key == "Count Unreachable In Recall") {
    cfg.count_unreachable_in_recall = parse_bool(value, key);
  } else if (key == "Max Sentence Tokens") {
    cfg.max_sentence_tokens = parse_int(value, key);
  } else {
    throw ConfigError("unknown config key: \"" + key + "\"");
  }
}

std::vector<std::pair<std::string, std::string>> config_as_table(const ModelConfig& cfg) {
  auto num = [](double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
  };
  std::vector<std::pair<std::string, std::string>> table;
  table.emplace_back("DIM_Word Embedding", std::to_string(cfg.encoder.word_dim));
  table.emplace_back("DIM_POS-tag Embedding", std::to_string(cfg.encoder.pos_dim));
  table.emplace_back("DIM_Word LSTM", std::to_string(cfg.encoder.lstm_hidden));
  table.emplace_back("DIM_Span Length", std::to_string(cfg.length_dim));
  table.emplace_back("Word LSTM Layers", std::to_string(cfg.encoder.lstm_layers));
  table.emplace_back("POS-tag LSTM Layers", std::to_string(cfg.encoder.pos_lstm_layers));
  table.emplace_back("POS-tag LSTM Hidden", std::to_string(cfg.encoder.pos_lstm_hidden));
  table.emplace_back("Learning Rate", num(cfg.learning_rate));
  table.emplace_back("Batch Size", std::to_string(cfg.batch_size));
  table.emplace_back("Stage2 Batch Size", std::to_string(cfg.stage2_batch_size));
  table.emplace_back("Random Seed", std::to_string(cfg.seed));
  table.emplace_back("Dropout", num(cfg.encoder.dropout));
  table.emplace_back("Term Ratio", num(cfg.alpha));
  table.emplace_back("Early Stop", std::to_string(cfg.early_stop));
  table.emplace_back("Max Span Length", std::to_string(cfg.max_span_length));
  table.emplace_back("DIM_Char Embedding", std::to_string(cfg.encoder.char_dim));
  table.emplace_back("Char CNN Window", std::to_string(cfg.encoder.char_window));
  table.emplace_back("Char CNN Filters", std::to_string(cfg.encoder.char_filters));
  table.emplace_back("Head Hidden", std::to_string(cfg.head_hidden));
  table.emplace_back("Head Depth", std::to_string(cfg.head_depth));
  table.emplace_back("Stage1 Max Epochs", std::to_string(cfg.stage1_max_epochs));
  table.emplace_back("Stage2 Max Epochs", std::to_string(cfg.stage2_max_epochs));
  table.emplace_back("Vocab Min Count", std::to_string(cfg.vocab_min_count));
  table.emplace_back("Lowercase Words", cfg.encoder.lowercase_words ? "true" : "false");
  table.emplace_back("POS Own Pipeline", cfg.encoder.pos_own_pipeline ? "true" : "false");
  table.emplace_back("External Own Pipeline", cfg.encoder.external_own_pipeline ? "true" : "false");
  table.emplace_back("External LSTM Layers", std::to_string(cfg.encoder.external_lstm_layers));
  table.emplace_back("External LSTM Hidden", std::to_string(cfg.encoder.external_lstm_hidden));
  table.emplace_back("Freeze Encoder Stage2", cfg.freeze_encoder_stage2 ? "true" : "false");
  table.emplace_back("Stage2 From Best Recall", cfg.stage2_from_best_recall ? "true" : "false");
  table.emplace_back("Count Unreachable In Recall",
                     cfg.count_unreachable_in_recall ? "true" : "false");
  table.emplace_back("Max Sentence Tokens", std::to_string(cfg.max_sentence_tokens));
  return table;
}

ModelConfig resolve_model_config(const CliOptions& opts) {
  ModelConfig cfg;
  if (!opts.config_file.empty()) {
    for (const auto& [key, value] : parse_config_file(resolve_input_path(opts.config_file))) {
      apply_config_entry(cfg, key, value);
    }
  }
  for (const auto& entry : opts.set_overrides) {
    const auto sep = entry.find('=');
    if (sep == std::string::npos) {
      throw ConfigError("--set expects \"Key=Value\", got \"" + entry + "\"");
    }
    apply_config_entry(cfg, trim(entry.substr(0, sep)), trim(entry.substr(sep + 1)));
  }
  if (opts.k) cfg.max_span_length = *opts.k;
  if (opts.alpha) cfg.alpha = *opts.alpha;
  if (opts.seed) cfg.seed = *opts.seed;

  // Feature sources from the --features list.
  std::stringstream ss(opts.features);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (token.empty() || token == "base") continue;
    if (token == "pos") {
      cfg.encoder.use_pos = true;
    } else if (token == "pretrained" || token == "glove") {
      // handled at training time via --pretrained
    } else if (token == "vectors" || token == "external") {
      cfg.encoder.use_external = true;
    } else {
      throw ConfigError("unknown feature source \"" + token +
                        "\" (expected base, pos, pretrained, vectors)");
    }
  }
  return cfg;
}

std::string resolve_input_path(const std::string& path) {
  if (fs::exists(path)) return path;
  const char* base = std::getenv("TERMSPAN_DATA");
  if (base != nullptr && *base != '\0') {
    const fs::path joined = fs::path(base) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

Corpus load_corpus_any(const std::string& path, std::vector<std::string>* warnings) {
  const std::string resolved = resolve_input_path(path);
  std::ifstream in(resolved, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  char first = '\0';
  in >> std::ws;
  in.get(first);
  in.close();

  ParseResult result;
  if (first == '<') {
    result = parse_nested_annotations_file(resolved);
  } else {
    result = load_plain_format(resolved);
  }
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), result.warnings.begin(), result.warnings.end());
  }
  return std::move(result.sentences);
}

void write_predictions_jsonl(const std::vector<Prediction>& predictions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const auto& pred : predictions) {
    json j;
    j["sentence_id"] = pred.candidate.sentence_id;
    j["start"] = pred.candidate.start;
    j["end"] = pred.candidate.end;
    j["prob"] = pred.classifier_prob;
    if (pred.rank_score) j["score"] = *pred.rank_score;
    j["selected"] = pred.selected;
    out << j.dump() << "\n";
  }
}

std::vector<Prediction> read_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<Prediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
    Prediction pred;
    pred.candidate.sentence_id = j.at("sentence_id").get<int>();
    pred.candidate.start = j.at("start").get<int>();
    pred.candidate.end = j.at("end").get<int>();
    pred.classifier_prob = j.at("prob").get<double>();
    if (j.contains("score")) pred.rank_score = j.at("score").get<double>();
    pred.selected = j.value("selected", false);
    out.push_back(pred);
  }
  return out;
}

namespace {

void ensure_out_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
}

struct Manifest {
  json j;

  Manifest(const CliOptions& opts, const ModelConfig& cfg) {
    j["tool"] = "termspan";
    j["version"] = kToolVersion;
    j["command"] = opts.command;
    json config;
    for (const auto& [key, value] : config_as_table(cfg)) config[key] = value;
    j["config"] = config;
    j["features"] = opts.features;
    j["inputs"] = json::object();
    j["outputs"] = json::array();
  }

  void add_input(const std::string& path) {
    const std::string resolved = resolve_input_path(path);
    j["inputs"][path] = Sha256::of_file(resolved);
  }
  void add_output(const std::string& path) { j["outputs"].push_back(path); }
  void set(const std::string& key, const json& value) { j[key] = value; }

  void write(const std::string& dir) const {
    write_text(join_path(dir, "manifest.json"), j.dump(2) + "\n");
  }
};

SplitSpec split_spec_from(const CliOptions& opts, std::uint64_t seed) {
  SplitSpec spec;
  if (opts.train_fraction) spec.train_fraction = *opts.train_fraction;
  if (opts.dev_fraction) spec.dev_fraction = *opts.dev_fraction;
  if (opts.test_fraction) spec.test_fraction = *opts.test_fraction;
  spec.shuffle_seed = seed;
  spec.validate();
  return spec;
}

Corpus load_all_corpus(const CliOptions& opts) {
  if (opts.corpus.empty()) throw ConfigError("--corpus is required for this command");
  Corpus corpus;
  std::vector<std::string> warnings;
  for (const auto& path : opts.corpus) {
    Corpus part = load_corpus_any(path, &warnings);
    corpus.insert(corpus.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return corpus;
}

int cmd_stats(const CliOptions& opts) {
  const ModelConfig cfg = resolve_model_config(opts);
  Corpus corpus = load_all_corpus(opts);
  const CorpusStats stats = compute_stats(corpus);

  std::cout << "sentences:          " << stats.num_sentences << "\n"
            << "words:              " << stats.num_words << "\n"
            << "terms:              " << stats.num_terms << "\n"
            << "nested terms:       " << stats.num_nested_terms << "\n"
            << "independent terms:  " << stats.num_independent_terms << "\n"
            << "max term length:    " << stats.max_term_length << "\n"
            << "term ratio:         " << stats.term_ratio << "\n";
  const CoverageReport coverage = corpus_coverage(corpus, cfg.max_span_length);
  std::cout << coverage.summary() << "\n";

  // Reachability for every max length up to the longest gold term.
  std::ostringstream coverage_text;
  for (int k = 1; k <= std::max(stats.max_term_length, cfg.max_span_length); ++k) {
    coverage_text << corpus_coverage(corpus, k).summary() << "\n";
  }

  ensure_out_dir(opts.out_dir);
  Manifest manifest(opts, cfg);
  for (const auto& path : opts.corpus) manifest.add_input(path);
  write_text(join_path(opts.out_dir, "stats.csv"), stats_report_csv(stats));
  manifest.add_output("stats.csv");
  write_text(join_path(opts.out_dir, "coverage.txt"), coverage_text.str());
  manifest.add_output("coverage.txt");
  manifest.write(opts.out_dir);
  return 0;
}

std::string train_log_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "stage,epoch,train_loss,dev_loss,dev_recall,improved\n";
  for (const auto& r : result.stage1) {
    out << "1," << r.epoch << "," << r.train_loss << "," << r.dev_loss << "," << r.dev_recall << ","
        << (r.improved ? 1 : 0) << "\n";
  }
  for (const auto& r : result.stage2) {
    out << "2," << r.epoch << "," << r.train_loss << "," << r.dev_loss << ",," << (r.improved ? 1 : 0)
        << "\n";
  }
  return out.str();
}

int cmd_train(const CliOptions& opts) {
  ModelConfig cfg = resolve_model_config(opts);
  ensure_out_dir(opts.out_dir);
  Manifest manifest(opts, cfg);

  CorpusSplits splits;
  if (!opts.train_file.empty()) {
    if (opts.dev_file.empty()) throw ConfigError("--dev-file is required with --train-file");
    if (!opts.vectors_file.empty()) {
      throw ConfigError("--vectors aligns to a single --corpus; use the split workflow");
    }
    splits.train = load_corpus_any(opts.train_file);
    splits.dev = load_corpus_any(opts.dev_file);
    if (!opts.test_file.empty()) splits.test = load_corpus_any(opts.test_file);
    manifest.add_input(opts.train_file);
    manifest.add_input(opts.dev_file);
    if (!opts.test_file.empty()) manifest.add_input(opts.test_file);
  } else {
    Corpus corpus = load_all_corpus(opts);
    if (!opts.vectors_file.empty()) {
      // Per-token vectors attach before the split so alignment survives it.
      load_external_vectors(resolve_input_path(opts.vectors_file), corpus);
      manifest.add_input(opts.vectors_file);
    }
    const SplitSpec spec = split_spec_from(opts, cfg.seed);
    splits = split_corpus(corpus, spec);
    for (const auto& path : opts.corpus) manifest.add_input(path);
    manifest.set("split", {{"train_fraction", spec.train_fraction},
                           {"dev_fraction", spec.dev_fraction},
                           {"test_fraction", spec.test_fraction},
                           {"shuffle_seed", spec.shuffle_seed}});
    write_plain_format(splits.train, join_path(opts.out_dir, "train.jsonl"));
    write_plain_format(splits.dev, join_path(opts.out_dir, "dev.jsonl"));
    write_plain_format(splits.test, join_path(opts.out_dir, "test.jsonl"));
    manifest.add_output("train.jsonl");
    manifest.add_output("dev.jsonl");
    manifest.add_output("test.jsonl");
  }
  if (cfg.encoder.use_external) {
    if (splits.train.empty() || !splits.train.front().has_external()) {
      throw ConfigError("external vector features enabled but no --vectors file provided");
    }
    cfg.encoder.external_dim = static_cast<int>(splits.train.front().external_vectors.front().size());
  }

  Vocab vocab = build_vocab(splits.train, cfg.vocab_min_count, cfg.encoder.lowercase_words);
  TermExtractionModel model(cfg, std::move(vocab));

  if (!opts.pretrained_file.empty()) {
    const auto report = load_pretrained_vectors(resolve_input_path(opts.pretrained_file),
                                                model.vocab(), model.word_embedding());
    manifest.add_input(opts.pretrained_file);
    manifest.set("pretrained_coverage", report.coverage);
    std::cout << "pretrained vectors: matched " << report.matched << "/" << report.vocab_words
              << " vocabulary words (coverage " << report.coverage << ")\n";
    if (report.empty_overlap()) {
      std::cerr << "warning: pretrained vector file shares no words with the vocabulary; "
                   "embeddings stay randomly initialized\n";
    }
  }

  const auto progress = [&](const std::string& line) {
    if (!opts.quiet) std::cout << line << "\n";
  };
  const TrainResult result = model.train(splits.train, splits.dev, progress);

  const std::string ckpt = join_path(opts.out_dir, "checkpoint.json");
  model.save(ckpt);
  manifest.add_output("checkpoint.json");
  write_text(join_path(opts.out_dir, "train_log.csv"), train_log_csv(result));
  manifest.add_output("train_log.csv");
  manifest.set("stage1_best_epoch", result.stage1_best_epoch);
  manifest.set("stage1_best_dev_loss", result.stage1_best_dev_loss);
  manifest.set("stage1_best_dev_recall", result.stage1_best_dev_recall);
  manifest.set("stage2_best_epoch", result.stage2_best_epoch);
  manifest.set("stage2_best_dev_loss", result.stage2_best_dev_loss);
  manifest.set("stage1_digest_before_stage2", result.stage1_digest_before_stage2);
  manifest.set("stage1_digest_after_stage2", result.stage1_digest_after_stage2);
  manifest.write(opts.out_dir);

  std::cout << "stage1 best dev loss " << result.stage1_best_dev_loss << " (epoch "
            << result.stage1_best_epoch << "), best dev recall " << result.stage1_best_dev_recall
            << "\n"
            << "stage2 best dev loss " << result.stage2_best_dev_loss << " (epoch "
            << result.stage2_best_epoch << ")\n"
            << "checkpoint written to " << ckpt << "\n";
  return 0;
}

int cmd_predict(const CliOptions& opts) {
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint is required for predict");
  auto model = TermExtractionModel::load(resolve_input_path(opts.checkpoint));
  Corpus corpus = load_all_corpus(opts);
  if (!opts.vectors_file.empty()) {
    load_external_vectors(resolve_input_path(opts.vectors_file), corpus);
  }

  PredictOptions popts;
  popts.alpha = opts.alpha.value_or(model->config().alpha);
  if (opts.k) popts.max_span_length = *opts.k;

  std::vector<PredictFailure> failures;
  const auto predictions = model->predict(corpus, popts, &failures);
  for (const auto& f : failures) {
    std::cerr << "warning: sentence " << f.sentence_id << ": " << f.message << "\n";
  }

  ensure_out_dir(opts.out_dir);
  const std::string pred_path = join_path(opts.out_dir, "predictions.jsonl");
  write_predictions_jsonl(predictions, pred_path);

  Manifest manifest(opts, model->config());
  for (const auto& path : opts.corpus) manifest.add_input(path);
  manifest.add_input(opts.checkpoint);
  manifest.set("alpha", popts.alpha);
  manifest.add_output("predictions.jsonl");
  manifest.write(opts.out_dir);

  std::int64_t selected = 0;
  for (const auto& p : predictions) selected += p.selected ? 1 : 0;
  std::cout << predictions.size() << " candidates, " << selected << " selected; written to "
            << pred_path << "\n";
  return 0;
}

std::string per_length_csv(const EvalReport& clf, const EvalReport& rank) {
  std::ostringstream out;
  out << "length,gold,clf_selected,clf_tp,rank_selected,rank_tp\n";
  std::set<int> lengths;
  for (const auto& [len, bucket] : clf.per_length) lengths.insert(len);
  for (const auto& [len, bucket] : rank.per_length) lengths.insert(len);
  for (int len : lengths) {
    const auto c = clf.per_length.count(len) ? clf.per_length.at(len) : LengthBucket{};
    const auto r = rank.per_length.count(len) ? rank.per_length.at(len) : LengthBucket{};
    out << len << "," << c.gold << "," << c.selected << "," << c.true_positive << "," << r.selected
        << "," << r.true_positive << "\n";
  }
  return out.str();
}

int cmd_eval(const CliOptions& opts) {
  if (opts.predictions_file.empty()) throw ConfigError("--pred is required for eval");
  Corpus gold = load_all_corpus(opts);
  const auto predictions = read_predictions_jsonl(resolve_input_path(opts.predictions_file));

  const ModelConfig cfg = resolve_model_config(opts);
  EvalOptions eopts;
  eopts.max_span_length = cfg.max_span_length;
  eopts.count_unreachable_in_recall = cfg.count_unreachable_in_recall;
  eopts.filter = PredictionFilter::Classifier;
  const EvalReport clf = evaluate(predictions, gold, eopts);
  eopts.filter = PredictionFilter::Ranker;
  const EvalReport rank = evaluate(predictions, gold, eopts);

  std::cout << "classifier: " << clf.summary() << "\n";
  std::cout << "ranker:     " << rank.summary() << "\n";

  ensure_out_dir(opts.out_dir);
  std::ostringstream report;
  report << "model,precision,recall,f1,tp,selected,gold\n";
  report << "classifier," << clf.precision << "," << clf.recall << "," << clf.f1 << ","
         << clf.true_positive_count << "," << clf.selected_count << "," << clf.gold_count << "\n";
  report << "ranker," << rank.precision << "," << rank.recall << "," << rank.f1 << ","
         << rank.true_positive_count << "," << rank.selected_count << "," << rank.gold_count
         << "\n";
  write_text(join_path(opts.out_dir, "eval.csv"), report.str());
  write_text(join_path(opts.out_dir, "eval_per_length.csv"), per_length_csv(clf, rank));

  Manifest manifest(opts, cfg);
  for (const auto& path : opts.corpus) manifest.add_input(path);
  manifest.add_input(opts.predictions_file);
  manifest.add_output("eval.csv");
  manifest.add_output("eval_per_length.csv");
  manifest.write(opts.out_dir);
  return 0;
}

int cmd_sweep(const CliOptions& opts) {
  ensure_out_dir(opts.out_dir);
  if (opts.axis == "ratio") {
    if (opts.checkpoint.empty()) throw ConfigError("sweep --axis ratio requires --checkpoint");
    auto model = TermExtractionModel::load(resolve_input_path(opts.checkpoint));
    Corpus corpus = load_all_corpus(opts);

    PredictOptions popts;
    popts.alpha = opts.alpha.value_or(model->config().alpha);
    auto predictions = model->predict(corpus, popts);
    const std::int64_t total_words = count_words(corpus);

    EvalOptions eopts;
    eopts.max_span_length = model->config().max_span_length;
    eopts.count_unreachable_in_recall = model->config().count_unreachable_in_recall;
    const auto sweep = sweep_term_ratio(predictions, corpus, total_words, default_ratio_grid(), eopts);
    write_text(join_path(opts.out_dir, "ratio_sweep.csv"), sweep.csv());

    const auto dist = true_positive_distribution(predictions, corpus, total_words);
    write_text(join_path(opts.out_dir, "tp_distribution.csv"), dist.csv());

    Manifest manifest(opts, model->config());
    for (const auto& path : opts.corpus) manifest.add_input(path);
    manifest.add_input(opts.checkpoint);
    manifest.set("axis", "ratio");
    manifest.add_output("ratio_sweep.csv");
    manifest.add_output("tp_distribution.csv");
    manifest.write(opts.out_dir);
    std::cout << "ratio sweep written to " << join_path(opts.out_dir, "ratio_sweep.csv") << "\n";
    return 0;
  }
  if (opts.axis == "length") {
    const ModelConfig cfg = resolve_model_config(opts);
    EvalOptions eopts;
    eopts.count_unreachable_in_recall = cfg.count_unreachable_in_recall;
    LengthSweepResult sweep;
    Manifest manifest(opts, cfg);
    if (opts.restrict_mode) {
      if (opts.checkpoint.empty()) throw ConfigError("sweep --restrict requires --checkpoint");
      auto model = TermExtractionModel::load(resolve_input_path(opts.checkpoint));
      Corpus corpus = load_all_corpus(opts);
      const double alpha = opts.alpha.value_or(model->config().alpha);
      sweep = sweep_max_length_restrict(*model, corpus, alpha, opts.sweep_min, opts.sweep_max, eopts);
      manifest.add_input(opts.checkpoint);
      manifest.set("mode", "restrict");
      std::cout << "note: restriction mode approximates the per-length retraining experiment\n";
    } else {
      Corpus corpus = load_all_corpus(opts);
      const SplitSpec spec = split_spec_from(opts, cfg.seed);
      const CorpusSplits splits = split_corpus(corpus, spec);
      const auto progress = [&](const std::string& line) {
        if (!opts.quiet) std::cout << line << "\n";
      };
      sweep = sweep_max_length_retrain(cfg, splits, cfg.alpha, opts.sweep_min, opts.sweep_max,
                                       eopts, progress);
      manifest.set("mode", "retrain");
    }
    for (const auto& path : opts.corpus) manifest.add_input(path);
    manifest.set("axis", "length");
    write_text(join_path(opts.out_dir, "length_sweep.csv"), sweep.csv());
    manifest.add_output("length_sweep.csv");
    manifest.write(opts.out_dir);
    std::cout << "length sweep written to " << join_path(opts.out_dir, "length_sweep.csv") << "\n";
    return 0;
  }
  throw ConfigError("unknown sweep axis \"" + opts.axis + "\" (expected ratio or length)");
}

}  // namespace

int run_cli(const CliOptions& opts) {
  try {
    if (opts.command == "stats") return cmd_stats(opts);
    if (opts.command == "train") return cmd_train(opts);
    if (opts.command == "predict") return cmd_predict(opts);
    if (opts.command == "eval") return cmd_eval(opts);
    if (opts.command == "sweep") return cmd_sweep(opts);
    std::cerr << "unknown command: " << opts.command << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace termspan
