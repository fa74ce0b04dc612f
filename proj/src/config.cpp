#include "dualhead/config.hpp"

#include "dualhead/error.hpp"

#include <filesystem>
#include <sstream>

namespace dualhead {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"train_path", "", "labeled training CSV"},
      {"val_path", "", "labeled validation CSV"},
      {"eval_path", "", "labeled CSV for eval (defaults to val_path)"},
      {"predict_path", "", "unlabeled CSV for predict"},
      {"out_dir", "run", "directory for run outputs"},
      {"checkpoint", "", "checkpoint file (default out_dir/model.ckpt)"},
      {"vocab_path", "", "tokenizer vocabulary file (default out_dir/vocab.txt)"},
      {"report_path", "", "per-epoch run report (default out_dir/report.jsonl)"},
      {"predictions_path", "", "prediction CSV (default out_dir/predictions.csv)"},
      {"vocab_size", "8000", "tokenizer vocabulary target size"},
      {"min_freq", "2", "minimum pair frequency for a merge"},
      {"max_len", "128", "maximum tokens per sequence including [CLS]"},
      {"hidden", "64", "encoder hidden size"},
      {"layers", "2", "encoder layers"},
      {"attn_heads", "4", "attention heads"},
      {"ffn_dim", "256", "feed-forward width"},
      {"max_positions", "0", "position table size (0 = max_len)"},
      {"pooled_dropout", "0.1", "shared dropout on the pooled [CLS] vector"},
      {"head_mid_dim", "0", "head hidden width (0 = hidden)"},
      {"head_reduced_dim", "0", "head reduced width (0 = hidden / 2)"},
      {"head_dropout1", "0.2", "dropout after the first head block"},
      {"head_dropout2", "0.1", "dropout after the reduction block"},
      {"residual", "false", "residual connection around the first head block"},
      {"epochs", "6", "training epochs"},
      {"batch_size", "16", "examples per batch"},
      {"learning_rate", "0.001", "optimizer learning rate"},
      {"weight_decay", "0.01", "decoupled weight decay"},
      {"seed", "42", "seed for every random stream"},
      {"grad_clip", "0", "global gradient-norm clip (0 = off)"},
      {"keep_best_epoch", "false", "restore the epoch with the best validation F1"},
      {"column_id", "id", "id column name"},
      {"column_text", "text", "text column name"},
      {"column_label_1", "", "first label column (default fake / target)"},
      {"column_label_2", "", "second label column (default hate / severity)"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& key : config_keys()) values_[key.name] = key.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) { merge_text(read_file(path), path); }

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const auto& text = get(key);
  std::size_t used = 0;
  try {
    if (!text.empty() && text.front() != '-') {
      const auto value = std::stoull(text, &used);
      if (used == text.size()) return static_cast<std::size_t>(value);
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + text + "'");
}

std::uint64_t RunConfig::get_u64(const std::string& key) const { return get_size(key); }

double RunConfig::get_double(const std::string& key) const {
  const auto& text = get(key);
  std::size_t used = 0;
  try {
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& text = get(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + text + "'");
}

std::string RunConfig::path_or(const std::string& key, const std::string& fallback_name) const {
  const auto& value = get(key);
  if (!value.empty()) return value;
  return (std::filesystem::path(get("out_dir")) / fallback_name).string();
}

EncoderConfig RunConfig::encoder_config(std::size_t vocab_size) const {
  EncoderConfig config;
  config.vocab_size = vocab_size;
  config.hidden = get_size("hidden");
  config.layers = get_size("layers");
  config.attn_heads = get_size("attn_heads");
  config.ffn_dim = get_size("ffn_dim");
  const auto positions = get_size("max_positions");
  config.max_positions = positions == 0 ? get_size("max_len") : positions;
  config.pooled_dropout_p = get_double("pooled_dropout");
  config.validate();
  return config;
}

HeadConfig RunConfig::head_config(std::size_t hidden, std::size_t num_classes) const {
  HeadConfig config = HeadConfig::for_width(hidden, num_classes, get_bool("residual"));
  if (const auto mid = get_size("head_mid_dim"); mid != 0) config.mid_dim = mid;
  if (const auto reduced = get_size("head_reduced_dim"); reduced != 0) config.reduced_dim = reduced;
  config.dropout1 = get_double("head_dropout1");
  config.dropout2 = get_double("head_dropout2");
  config.validate();
  return config;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig config;
  config.epochs = get_size("epochs");
  config.batch_size = get_size("batch_size");
  config.learning_rate = get_double("learning_rate");
  config.weight_decay = get_double("weight_decay");
  config.seed = get_u64("seed");
  config.residual = get_bool("residual");
  if (const double clip = get_double("grad_clip"); clip > 0.0) config.grad_clip = clip;
  config.max_len = get_size("max_len");
  config.keep_best_epoch = get_bool("keep_best_epoch");
  config.validate();
  return config;
}

ColumnMapping RunConfig::columns(Task task) const {
  ColumnMapping columns = ColumnMapping::defaults(task);
  columns.id = get("column_id");
  columns.text = get("column_text");
  if (!get("column_label_1").empty()) columns.label_1 = get("column_label_1");
  if (!get("column_label_2").empty()) columns.label_2 = get("column_label_2");
  return columns;
}

}  // namespace dualhead
