#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dualhead {

struct SpecialIds {
  int cls = 0;
  int pad = 1;
  int sep = 2;
  int unk = 3;
};

struct Merge {
  int left = 0;
  int right = 0;
  int result = 0;
};

// Byte-level pair-merge vocabulary. Ids 0..3 are the special tokens, then
// the byte alphabet seen in training (ascending byte order), then merge
// products in the order they were learned.
class Vocab {
 public:
  static constexpr std::size_t special_count = 4;

  Vocab();

  std::size_t size() const { return tokens_.size(); }
  const SpecialIds& specials() const { return specials_; }
  bool is_special(int id) const { return id >= 0 && id < static_cast<int>(special_count); }
  std::size_t alphabet_size() const { return alphabet_size_; }
  const std::vector<Merge>& merges() const { return merges_; }

  // Raw bytes of a token; specials render as <cls>, <pad>, <sep>, <unk>.
  const std::string& token(int id) const;
  std::optional<int> id(std::string_view token) const;
  std::optional<int> byte_id(unsigned char byte) const;
  // Result id and rank of the first merge of (left, right), if any.
  std::optional<std::pair<int, std::size_t>> merge_of(int left, int right) const;

  void write(std::ostream& out) const;
  static Vocab read(std::istream& in);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);
  std::string serialize() const;

 private:
  friend Vocab train_vocab(std::span<const std::string>, std::size_t, std::size_t);
  int add_token(std::string bytes);
  void add_merge(int left, int right, int result);

  SpecialIds specials_;
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
  std::size_t alphabet_size_ = 0;
  std::vector<Merge> merges_;
  std::map<std::pair<int, int>, std::pair<int, std::size_t>> merge_index_;
};

// Learns merges until the vocabulary holds target_size entries, no pair is
// left, or the most frequent pair occurs fewer than min_freq times. Ties in
// pair frequency go to the lexicographically smallest (left, right) bytes.
Vocab train_vocab(std::span<const std::string> corpus, std::size_t target_size,
                  std::size_t min_freq = 2);

// Words of normalized text; every word after the first carries its leading space.
std::vector<std::string> pre_tokenize(std::string_view normalized);

struct TokenizedBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<int> ids;             // batch x max_len, row-major
  std::vector<std::uint8_t> mask;   // 1 for real tokens
  std::vector<std::size_t> lengths;

  int id(std::size_t row, std::size_t col) const { return ids[row * max_len + col]; }
  std::span<const int> row(std::size_t r) const { return {ids.data() + r * max_len, max_len}; }
};

// Subword ids of one text, without specials.
std::vector<int> encode_text(const Vocab& vocab, std::string_view text);

// [CLS] + subwords, truncated to max_len.
std::vector<int> encode_example(const Vocab& vocab, std::string_view text, std::size_t max_len);

// Pads rows to the longest one; mask and lengths follow the row sizes.
TokenizedBatch pad_rows(std::span<const std::vector<int>* const> rows, int pad_id,
                        std::size_t width = 0);

// Rows are [CLS] + subwords truncated to max_len - 1, padded with PAD to the
// longest row, or to max_len when pad_to_max_len is set.
TokenizedBatch encode(const Vocab& vocab, std::span<const std::string> texts, std::size_t max_len,
                      bool pad_to_max_len = false);

std::string decode(const Vocab& vocab, std::span<const int> ids);

}  // namespace dualhead
