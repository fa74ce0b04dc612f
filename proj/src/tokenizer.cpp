#include "dualhead/tokenizer.hpp"

#include "dualhead/error.hpp"
#include "dualhead/unicode.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>

namespace dualhead {

namespace {

constexpr std::array<const char*, Vocab::special_count> kSpecialNames = {"<cls>", "<pad>", "<sep>",
                                                                         "<unk>"};
constexpr const char* kVocabMagic = "#dualhead-vocab v1";

std::string escape_token(const std::string& bytes) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (std::size_t pos = 0; pos < bytes.size();) {
    const auto byte = static_cast<unsigned char>(bytes[pos]);
    if (byte == '\\') {
      out += "\\\\";
      ++pos;
    } else if (byte >= 0x21 && byte < 0x7f) {
      out.push_back(static_cast<char>(byte));
      ++pos;
    } else if (const auto n = byte >= 0x80 ? utf8_sequence_length(bytes, pos) : 0; n > 0) {
      out.append(bytes, pos, n);
      pos += n;
    } else {
      out += "\\x";
      out.push_back(hex[byte >> 4]);
      out.push_back(hex[byte & 0xf]);
      ++pos;
    }
  }
  return out;
}

std::string unescape_token(std::string_view text, std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 1 < text.size() && text[i + 1] == '\\') {
      out.push_back('\\');
      ++i;
    } else if (i + 3 < text.size() && text[i + 1] == 'x') {
      const std::string digits(text.substr(i + 2, 2));
      std::size_t used = 0;
      int value = -1;
      try {
        value = std::stoi(digits, &used, 16);
      } catch (const std::exception&) {
      }
      if (used != 2 || value < 0) {
        throw DataError("vocab line " + std::to_string(line) + ": bad escape");
      }
      out.push_back(static_cast<char>(value));
      i += 3;
    } else {
      throw DataError("vocab line " + std::to_string(line) + ": bad escape");
    }
  }
  return out;
}

std::vector<int> apply_merges(const Vocab& vocab, std::vector<int> symbols) {
  const int unk = vocab.specials().unk;
  for (;;) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    int left = -1;
    int right = -1;
    int result = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (symbols[i] == unk || symbols[i + 1] == unk) continue;
      if (auto merge = vocab.merge_of(symbols[i], symbols[i + 1]); merge && merge->second < best_rank) {
        best_rank = merge->second;
        left = symbols[i];
        right = symbols[i + 1];
        result = merge->first;
      }
    }
    if (result < 0) return symbols;
    std::vector<int> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        merged.push_back(result);
        ++i;
      } else {
        merged.push_back(symbols[i]);
      }
    }
    symbols = std::move(merged);
  }
}

}  // namespace

Vocab::Vocab() {
  for (const char* name : kSpecialNames) tokens_.emplace_back(name);
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " not in vocabulary of size " +
                    std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocab::id(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::optional<int> Vocab::byte_id(unsigned char byte) const {
  const char c = static_cast<char>(byte);
  return id(std::string_view(&c, 1));
}

std::optional<std::pair<int, std::size_t>> Vocab::merge_of(int left, int right) const {
  if (auto it = merge_index_.find({left, right}); it != merge_index_.end()) return it->second;
  return std::nullopt;
}

int Vocab::add_token(std::string bytes) {
  if (bytes.empty()) throw DataError("empty token");
  const int id = static_cast<int>(tokens_.size());
  auto [it, inserted] = ids_.emplace(bytes, id);
  if (!inserted) throw DataError("duplicate token '" + escape_token(bytes) + "'");
  tokens_.push_back(std::move(bytes));
  return id;
}

void Vocab::add_merge(int left, int right, int result) {
  merge_index_.try_emplace({left, right}, result, merges_.size());
  merges_.push_back({left, right, result});
}

void Vocab::write(std::ostream& out) const {
  out << kVocabMagic << " size=" << tokens_.size() << " alphabet=" << alphabet_size_
      << " cls=" << specials_.cls << " pad=" << specials_.pad << " sep=" << specials_.sep
      << " unk=" << specials_.unk << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << (i < special_count ? tokens_[i] : escape_token(tokens_[i])) << '\n';
  }
  out << "#merges " << merges_.size() << '\n';
  for (const auto& merge : merges_) out << merge.left << ' ' << merge.right << '\n';
}

std::string Vocab::serialize() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

Vocab Vocab::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kVocabMagic, 0) != 0) {
    throw DataError("vocab: missing '" + std::string(kVocabMagic) + "' header");
  }
  std::size_t size = 0;
  std::size_t alphabet = 0;
  SpecialIds header_ids;
  {
    std::istringstream fields(line.substr(std::string_view(kVocabMagic).size()));
    std::string field;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw DataError("vocab header: malformed field '" + field + "'");
      const auto key = field.substr(0, eq);
      const auto value = std::stoul(field.substr(eq + 1));
      if (key == "size") size = value;
      else if (key == "alphabet") alphabet = value;
      else if (key == "cls") header_ids.cls = static_cast<int>(value);
      else if (key == "pad") header_ids.pad = static_cast<int>(value);
      else if (key == "sep") header_ids.sep = static_cast<int>(value);
      else if (key == "unk") header_ids.unk = static_cast<int>(value);
      else throw DataError("vocab header: unknown field '" + key + "'");
    }
  }
  Vocab vocab;
  const SpecialIds expected;
  if (header_ids.cls != expected.cls || header_ids.pad != expected.pad ||
      header_ids.sep != expected.sep || header_ids.unk != expected.unk) {
    throw DataError("vocab header: unsupported special-token ids");
  }
  if (size < special_count || alphabet > size - special_count) {
    throw DataError("vocab header: inconsistent size/alphabet");
  }
  for (std::size_t i = 0; i < size; ++i) {
    if (!std::getline(in, line)) throw DataError("vocab: truncated token list");
    if (i < special_count) {
      if (line != kSpecialNames[i]) throw DataError("vocab: expected special token " + std::string(kSpecialNames[i]));
      continue;
    }
    auto bytes = unescape_token(line, i + 2);
    if (i < special_count + alphabet && bytes.size() != 1) {
      throw DataError("vocab line " + std::to_string(i + 2) + ": alphabet entry is not one byte");
    }
    vocab.add_token(std::move(bytes));
  }
  vocab.alphabet_size_ = alphabet;
  if (!std::getline(in, line) || line.rfind("#merges ", 0) != 0) {
    throw DataError("vocab: missing merges section");
  }
  const auto merge_count = std::stoul(line.substr(8));
  for (std::size_t m = 0; m < merge_count; ++m) {
    int left = -1;
    int right = -1;
    if (!(in >> left >> right)) throw DataError("vocab: truncated merges section");
    const auto merged = vocab.token(left) + vocab.token(right);
    if (vocab.is_special(left) || vocab.is_special(right)) throw DataError("vocab: merge of a special token");
    const auto result = vocab.id(merged);
    if (!result) throw DataError("vocab: merge product '" + escape_token(merged) + "' missing");
    vocab.add_merge(left, right, *result);
  }
  return vocab;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  write(out);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary file " + path);
  return read(in);
}

std::vector<std::string> pre_tokenize(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto end = normalized.find(' ', start + 1);
    if (end == std::string_view::npos) end = normalized.size();
    words.emplace_back(normalized.substr(start, end - start));
    start = end;
  }
  return words;
}

Vocab train_vocab(std::span<const std::string> corpus, std::size_t target_size, std::size_t min_freq) {
  std::map<std::string, std::size_t> word_counts;
  std::array<bool, 256> seen{};
  for (const auto& line : corpus) {
    for (auto& word : pre_tokenize(normalize_text(line))) {
      for (char c : word) seen[static_cast<unsigned char>(c)] = true;
      ++word_counts[std::move(word)];
    }
  }
  if (word_counts.empty()) throw DataError("train_vocab: empty corpus");

  Vocab vocab;
  for (int byte = 0; byte < 256; ++byte) {
    if (seen[static_cast<std::size_t>(byte)]) vocab.add_token(std::string(1, static_cast<char>(byte)));
  }
  vocab.alphabet_size_ = vocab.size() - Vocab::special_count;
  if (target_size < vocab.size()) {
    throw ConfigError("train_vocab: target size " + std::to_string(target_size) +
                      " below specials + alphabet (" + std::to_string(vocab.size()) + ")");
  }

  struct Word {
    std::vector<int> symbols;
    std::size_t count;
  };
  std::vector<Word> words;
  words.reserve(word_counts.size());
  for (const auto& [text, count] : word_counts) {
    Word word{{}, count};
    for (char c : text) word.symbols.push_back(*vocab.byte_id(static_cast<unsigned char>(c)));
    words.push_back(std::move(word));
  }

  while (vocab.size() < target_size) {
    std::map<std::pair<int, int>, std::size_t> pair_counts;
    for (const auto& word : words) {
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
        pair_counts[{word.symbols[i], word.symbols[i + 1]}] += word.count;
      }
    }
    const std::pair<int, int>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_counts) {
      if (best == nullptr || count > best_count ||
          (count == best_count &&
           std::tie(vocab.token(pair.first), vocab.token(pair.second)) <
               std::tie(vocab.token(best->first), vocab.token(best->second)))) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < min_freq) break;

    const auto [left, right] = *best;
    std::string merged = vocab.token(left) + vocab.token(right);
    const auto existing = vocab.id(merged);
    const int result = existing ? *existing : vocab.add_token(std::move(merged));
    vocab.add_merge(left, right, result);

    for (auto& word : words) {
      std::vector<int> next;
      next.reserve(word.symbols.size());
      for (std::size_t i = 0; i < word.symbols.size(); ++i) {
        if (i + 1 < word.symbols.size() && word.symbols[i] == left && word.symbols[i + 1] == right) {
          next.push_back(result);
          ++i;
        } else {
          next.push_back(word.symbols[i]);
        }
      }
      word.symbols = std::move(next);
    }
  }
  return vocab;
}

std::vector<int> encode_text(const Vocab& vocab, std::string_view text) {
  std::vector<int> ids;
  for (const auto& word : pre_tokenize(normalize_text(text))) {
    std::vector<int> symbols;
    symbols.reserve(word.size());
    for (char c : word) {
      symbols.push_back(vocab.byte_id(static_cast<unsigned char>(c)).value_or(vocab.specials().unk));
    }
    for (int id : apply_merges(vocab, std::move(symbols))) ids.push_back(id);
  }
  return ids;
}

std::vector<int> encode_example(const Vocab& vocab, std::string_view text, std::size_t max_len) {
  std::vector<int> row{vocab.specials().cls};
  for (int id : encode_text(vocab, text)) {
    if (row.size() >= max_len) break;
    row.push_back(id);
  }
  return row;
}

TokenizedBatch pad_rows(std::span<const std::vector<int>* const> rows, int pad_id, std::size_t width) {
  TokenizedBatch batch;
  batch.batch = rows.size();
  batch.max_len = std::max<std::size_t>(width, 1);
  for (const auto* row : rows) batch.max_len = std::max(batch.max_len, row->size());
  batch.ids.assign(batch.batch * batch.max_len, pad_id);
  batch.mask.assign(batch.batch * batch.max_len, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto offset = static_cast<std::ptrdiff_t>(r * batch.max_len);
    batch.lengths.push_back(rows[r]->size());
    std::copy(rows[r]->begin(), rows[r]->end(), batch.ids.begin() + offset);
    std::fill_n(batch.mask.begin() + offset, rows[r]->size(), std::uint8_t{1});
  }
  return batch;
}

TokenizedBatch encode(const Vocab& vocab, std::span<const std::string> texts, std::size_t max_len,
                      bool pad_to_max_len) {
  if (max_len < 2) throw ConfigError("encode: max_len must be at least 2");
  std::vector<std::vector<int>> rows;
  rows.reserve(texts.size());
  for (const auto& text : texts) rows.push_back(encode_example(vocab, text, max_len));
  std::vector<const std::vector<int>*> views;
  for (const auto& row : rows) views.push_back(&row);
  return pad_rows(views, vocab.specials().pad, pad_to_max_len ? max_len : 0);
}

std::string decode(const Vocab& vocab, std::span<const int> ids) {
  std::string out;
  for (int id : ids) {
    const auto& bytes = vocab.token(id);
    if (!vocab.is_special(id)) out += bytes;
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

}  // namespace dualhead
