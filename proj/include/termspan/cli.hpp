#ifndef TERMSPAN_CLI_HPP
#define TERMSPAN_CLI_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "termspan/eval.hpp"
#include "termspan/model.hpp"

namespace termspan {

inline constexpr const char* kToolVersion = "0.1.0";

struct CliOptions {
  std::string command;
  std::vector<std::string> corpus;
  std::string train_file;
  std::string dev_file;
  std::string test_file;
  std::string config_file;
  std::string checkpoint;
  std::string predictions_file;
  std::string pretrained_file;
  std::string vectors_file;
  std::string out_dir = ".";
  std::string features = "base";
  std::string axis = "ratio";
  bool restrict_mode = false;
  int sweep_min = 1;
  int sweep_max = 15;
  std::optional<int> k;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<double> train_fraction;
  std::optional<double> dev_fraction;
  std::optional<double> test_fraction;
  std::vector<std::string> set_overrides;  // "Key=Value" config entries
  bool quiet = false;
};

// Flat key/value document using the hyperparameter names the config template
// documents ("Learning Rate: 0.01"). '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies one named entry; throws ConfigError on unknown keys or bad values.
void apply_config_entry(ModelConfig& cfg, const std::string& key, const std::string& value);

// Precedence: built-in defaults, then the config file, then --set overrides,
// then dedicated flags (--k/--alpha/--seed, --features).
ModelConfig resolve_model_config(const CliOptions& opts);

// Resolved configuration rendered with the same key names the config file
// uses; written into the run manifest.
std::vector<std::pair<std::string, std::string>> config_as_table(const ModelConfig& cfg);

// Falls back to $TERMSPAN_DATA/<path> when the path does not exist as given.
std::string resolve_input_path(const std::string& path);

// Markup (.xml or leading '<') or plain line-JSON corpus.
Corpus load_corpus_any(const std::string& path, std::vector<std::string>* warnings = nullptr);

void write_predictions_jsonl(const std::vector<Prediction>& predictions, const std::string& path);
std::vector<Prediction> read_predictions_jsonl(const std::string& path);

int run_cli(const CliOptions& opts);

}  // namespace termspan

#endif  // TERMSPAN_CLI_HPP
