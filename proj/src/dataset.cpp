#include "dualhead/dataset.hpp"

#include "dualhead/csv.hpp"
#include "dualhead/error.hpp"
#include "dualhead/rng.hpp"
#include "dualhead/unicode.hpp"

#include <fstream>
#include <sstream>

namespace dualhead {

LabelVocab::LabelVocab(std::vector<std::string> labels) {
  for (auto& label : labels) add(label);
}

const std::string& LabelVocab::label(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) {
    throw LabelError("label id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(labels_.size()));
  }
  return labels_[static_cast<std::size_t>(id)];
}

std::optional<int> LabelVocab::find(std::string_view label) const {
  if (auto it = ids_.find(label); it != ids_.end()) return it->second;
  return std::nullopt;
}

int LabelVocab::add(const std::string& label) {
  if (auto existing = find(label)) return *existing;
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  ids_.emplace(label, id);
  return id;
}

ColumnMapping ColumnMapping::defaults(Task task) {
  ColumnMapping columns;
  columns.label_1 = task == Task::A ? "fake" : "target";
  columns.label_2 = task == Task::A ? "hate" : "severity";
  return columns;
}

std::pair<LabelVocab, LabelVocab> default_label_vocabs(Task task) {
  if (task == Task::A) return {LabelVocab({"0", "1"}), LabelVocab({"0", "1"})};
  return {};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {


std::size_t column_index(const CsvRecord& header, const std::string& name) {
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    if (header.fields[i] == name) return i;
  }
  throw DataError("missing column '" + name + "' in header");
}

const std::string& field(const CsvRecord& record, std::size_t column, std::size_t row) {
  if (column >= record.fields.size()) {
    throw DataError("row " + std::to_string(row) + " (line " + std::to_string(record.line) +
                    "): expected at least " + std::to_string(column + 1) + " fields, got " +
                    std::to_string(record.fields.size()));
  }
  return record.fields[column];
}

std::vector<CsvRecord> records_with_header(std::string_view content) {
  if (!is_valid_utf8(content)) throw DataError("input is not valid UTF-8");
  auto records = parse_csv(content);
  if (records.empty()) throw DataError("csv has no header row");
  return records;
}

std::string checked_text(const CsvRecord& record, std::size_t column, std::size_t row) {
  auto text = nfc(field(record, column, row));
  if (normalize_text(text).empty()) {
    throw DataError("row " + std::to_string(row) + " (line " + std::to_string(record.line) +
                    "): empty text");
  }
  return text;
}

}  // namespace

Dataset parse_labeled_csv(std::string_view content, Task task, const ColumnMapping& columns,
                          const Dataset* known) {
  const auto records = records_with_header(content);
  const auto& header = records.front();
  const auto id_col = column_index(header, columns.id);
  const auto text_col = column_index(header, columns.text);
  const auto label_1_col = column_index(header, columns.label_1);
  const auto label_2_col = column_index(header, columns.label_2);

  Dataset data;
  data.task = task;
  if (known != nullptr) {
    if (known->task != task) throw DataError("label vocabularies belong to a different task");
    data.labels_1 = known->labels_1;
    data.labels_2 = known->labels_2;
  } else {
    std::tie(data.labels_1, data.labels_2) = default_label_vocabs(task);
  }
  const bool extend = task == Task::B && known == nullptr;

  auto label_id = [&](LabelVocab& vocab, const CsvRecord& record, std::size_t column,
                      std::size_t row) {
    const auto& value = field(record, column, row);
    if (task == Task::A && value != "0" && value != "1") {
      throw DataError("row " + std::to_string(row) + " (line " + std::to_string(record.line) +
                      "): column '" + header.fields[column] + "' must be 0 or 1, got '" + value + "'");
    }
    if (extend) return vocab.add(value);
    if (auto id = vocab.find(value)) return *id;
    throw DataError("row " + std::to_string(row) + " (line " + std::to_string(record.line) +
                    "): label '" + value + "' not in the training label vocabulary");
  };

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& record = records[r];
    LabeledExample example;
    example.id = field(record, id_col, r);
    example.text = checked_text(record, text_col, r);
    example.label_1 = label_id(data.labels_1, record, label_1_col, r);
    example.label_2 = label_id(data.labels_2, record, label_2_col, r);
    data.examples.push_back(std::move(example));
  }
  return data;
}

Dataset load_csv(const std::string& path, Task task, const ColumnMapping& columns, const Dataset* known) {
  try {
    return parse_labeled_csv(read_file(path), task, columns, known);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Dataset load_csv(const std::string& path, Task task) {
  return load_csv(path, task, ColumnMapping::defaults(task));
}

std::vector<UnlabeledExample> parse_unlabeled_csv(std::string_view content, const ColumnMapping& columns) {
  const auto records = records_with_header(content);
  const auto id_col = column_index(records.front(), columns.id);
  const auto text_col = column_index(records.front(), columns.text);
  std::vector<UnlabeledExample> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    out.push_back({field(records[r], id_col, r), checked_text(records[r], text_col, r)});
  }
  return out;
}

std::vector<UnlabeledExample> load_unlabeled_csv(const std::string& path, const ColumnMapping& columns) {
  try {
    return parse_unlabeled_csv(read_file(path), columns);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order;
  if (shuffle_seed) {
    RngState rng(*shuffle_seed);
    order = seeded_permutation(count, rng);
  } else {
    order.resize(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const auto end = std::min(count, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace dualhead
