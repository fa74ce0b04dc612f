#pragma once

#include "dualhead/heads.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dualhead {

// Ordered, distinct label strings for one head.
class LabelVocab {
 public:
  LabelVocab() = default;
  explicit LabelVocab(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int id) const;
  std::optional<int> find(std::string_view label) const;
  int add(const std::string& label);

  friend bool operator==(const LabelVocab& a, const LabelVocab& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int, std::less<>> ids_;
};

struct LabeledExample {
  std::string id;
  std::string text;
  int label_1 = 0;
  int label_2 = 0;
};

struct UnlabeledExample {
  std::string id;
  std::string text;
};

struct ColumnMapping {
  std::string id = "id";
  std::string text = "text";
  std::string label_1;
  std::string label_2;

  // Task A: id,text,fake,hate. Task B: id,text,target,severity.
  static ColumnMapping defaults(Task task);
};

struct Dataset {
  Task task = Task::A;
  std::vector<LabeledExample> examples;
  LabelVocab labels_1;
  LabelVocab labels_2;
};

// Fixed label vocabularies for Task A ("0", "1"); empty for Task B.
std::pair<LabelVocab, LabelVocab> default_label_vocabs(Task task);

// Parses a labeled CSV. Task B label vocabularies are built in first
// appearance order unless `known` supplies them, in which case unseen labels
// are a DataError. Text is stored NFC-normalized.
Dataset parse_labeled_csv(std::string_view content, Task task, const ColumnMapping& columns,
                          const Dataset* known = nullptr);
Dataset load_csv(const std::string& path, Task task, const ColumnMapping& columns,
                 const Dataset* known = nullptr);
Dataset load_csv(const std::string& path, Task task);

std::vector<UnlabeledExample> parse_unlabeled_csv(std::string_view content, const ColumnMapping& columns);
std::vector<UnlabeledExample> load_unlabeled_csv(const std::string& path, const ColumnMapping& columns);

// Index batches covering 0..count-1 exactly once; the last one may be short.
// With a seed the order is a seeded permutation, otherwise the identity.
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size,
                                              std::optional<std::uint64_t> shuffle_seed = std::nullopt);

std::string read_file(const std::string& path);

}  // namespace dualhead
