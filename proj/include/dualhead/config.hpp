#pragma once

#include "dualhead/dataset.hpp"
#include "dualhead/encoder.hpp"
#include "dualhead/heads.hpp"
#include "dualhead/trainer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dualhead {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognised key with its default. Dataset paths default to empty.
const std::vector<ConfigKey>& config_keys();

// Flat key/value run configuration. Precedence is the caller's order of
// application: defaults, then file, then command-line overrides.
class RunConfig {
 public:
  RunConfig();

  // Unknown keys are a ConfigError.
  void set(const std::string& key, const std::string& value);
  // Lines of "key = value"; blank lines and lines starting with '#' ignored.
  void merge_text(const std::string& text, const std::string& origin = "config");
  void load_file(const std::string& path);

  const std::string& get(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // Value of `key`, or out_dir/fallback_name when the key is empty.
  std::string path_or(const std::string& key, const std::string& fallback_name) const;

  EncoderConfig encoder_config(std::size_t vocab_size) const;
  HeadConfig head_config(std::size_t hidden, std::size_t num_classes) const;
  TrainConfig train_config() const;
  ColumnMapping columns(Task task) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dualhead
