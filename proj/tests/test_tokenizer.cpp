#include "dualhead/dataset.hpp"
#include "dualhead/error.hpp"
#include "dualhead/tokenizer.hpp"
#include "dualhead/unicode.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace dualhead;

namespace {

std::vector<std::string> fixture_lines(std::size_t limit = 0) {
  std::ifstream in(DUALHEAD_TEST_DATA "/corpus_mixed.txt");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    lines.push_back(line);
    if (limit && lines.size() == limit) break;
  }
  return lines;
}

// Reference byte-pair trainer over explicit byte strings. Every word occurrence is
// kept separately (no frequency table) and pair counts are rebuilt from scratch.
std::vector<std::pair<std::string, std::string>> reference_merges(const std::vector<std::string>& corpus,
                                                                  std::size_t target_size,
                                                                  std::size_t min_freq) {
  std::vector<std::vector<std::string>> words;
  std::set<std::string> vocab;
  for (const auto& line : corpus) {
    std::istringstream in(nfc(line));
    std::string piece;
    bool first = true;
    while (in >> piece) {
      const std::string word = first ? piece : " " + piece;
      first = false;
      std::vector<std::string> symbols;
      for (char c : word) {
        symbols.emplace_back(1, c);
        vocab.insert(symbols.back());
      }
      words.push_back(symbols);
    }
  }
  std::vector<std::pair<std::string, std::string>> merges;
  while (vocab.size() + 4 < target_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) ++counts[{w[i], w[i + 1]}];
    }
    if (counts.empty()) break;
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    if (best->second < min_freq) break;
    const auto pair = best->first;
    merges.push_back(pair);
    vocab.insert(pair.first + pair.second);
    for (auto& w : words) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (i + 1 < w.size() && w[i] == pair.first && w[i + 1] == pair.second) {
          next.push_back(pair.first + pair.second);
          ++i;
        } else {
          next.push_back(w[i]);
        }
      }
      w = next;
    }
  }
  return merges;
}

std::size_t alphabet_of(const std::vector<std::string>& corpus) {
  std::set<unsigned char> bytes;
  for (const auto& line : corpus) {
    for (char c : normalize_text(line)) bytes.insert(static_cast<unsigned char>(c));
  }
  return bytes.size();
}

}  // namespace

TEST(TrainVocab, RepeatedWordBecomesOneToken) {
  std::vector<std::string> corpus(20, "namaste");
  auto vocab = train_vocab(corpus, 100, 2);
  ASSERT_TRUE(vocab.id("namaste").has_value());
  EXPECT_EQ(encode_text(vocab, "namaste"), std::vector<int>{*vocab.id("namaste")});
}

TEST(TrainVocab, NoBudgetMeansNoMerges) {
  std::vector<std::string> corpus{"abc abd", "अब तक"};
  const auto budget = Vocab::special_count + alphabet_of(corpus);
  auto vocab = train_vocab(corpus, budget, 1);
  EXPECT_TRUE(vocab.merges().empty());
  EXPECT_EQ(vocab.size(), budget);
  EXPECT_THROW(train_vocab(corpus, budget - 1, 1), ConfigError);
}

TEST(TrainVocab, EmptyCorpusRejected) {
  std::vector<std::string> corpus{"", "   "};
  EXPECT_THROW(train_vocab(corpus, 100, 1), DataError);
}

TEST(TrainVocab, MergeSequenceMatchesReference) {
  const auto corpus = fixture_lines(100);
  ASSERT_EQ(corpus.size(), 100u);
  auto vocab = train_vocab(corpus, 400, 2);
  const auto expected = reference_merges(corpus, 400, 2);
  ASSERT_EQ(vocab.merges().size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(vocab.token(vocab.merges()[i].left), expected[i].first) << "merge " << i;
    EXPECT_EQ(vocab.token(vocab.merges()[i].right), expected[i].second) << "merge " << i;
  }
}

TEST(TrainVocab, SpecialsAreDistinctAndFirst) {
  auto vocab = train_vocab(fixture_lines(50), 300, 2);
  const auto& s = vocab.specials();
  EXPECT_EQ(std::set<int>({s.cls, s.pad, s.sep, s.unk}).size(), 4u);
  for (int id : {s.cls, s.pad, s.sep, s.unk}) EXPECT_LT(static_cast<std::size_t>(id), vocab.size());
  for (int id : {s.cls, s.pad, s.sep, s.unk}) EXPECT_FALSE(vocab.id(vocab.token(id)).has_value());
  for (std::size_t i = Vocab::special_count; i < vocab.size(); ++i) {
    EXPECT_EQ(vocab.id(vocab.token(static_cast<int>(i))), static_cast<int>(i));
  }
}

TEST(Encode, EmptyStringIsClsThenPad) {
  auto vocab = train_vocab(fixture_lines(50), 300, 2);
  std::vector<std::string> texts{"", "yaar bhai"};
  auto batch = encode(vocab, texts, 16);
  EXPECT_EQ(batch.lengths[0], 1u);
  EXPECT_EQ(batch.id(0, 0), vocab.specials().cls);
  for (std::size_t j = 1; j < batch.max_len; ++j) {
    EXPECT_EQ(batch.id(0, j), vocab.specials().pad);
    EXPECT_EQ(batch.mask[j], 0);
  }
}

TEST(Encode, LongTextTruncatesToMaxLen) {
  auto vocab = train_vocab(fixture_lines(50), 300, 2);
  std::string text;
  for (int i = 0; i < 100; ++i) text += "viral खबर ";
  std::vector<std::string> texts{text};
  auto batch = encode(vocab, texts, 12);
  EXPECT_EQ(batch.max_len, 12u);
  EXPECT_EQ(batch.lengths[0], 12u);
  for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(batch.mask[j], 1);
}

TEST(Encode, RowLayoutInvariants) {
  auto vocab = train_vocab(fixture_lines(50), 300, 2);
  auto texts = fixture_lines(20);
  auto batch = encode(vocab, texts, 24, true);
  ASSERT_EQ(batch.max_len, 24u);
  for (std::size_t r = 0; r < batch.batch; ++r) {
    EXPECT_EQ(batch.id(r, 0), vocab.specials().cls);
    for (std::size_t j = 0; j < batch.max_len; ++j) {
      EXPECT_EQ(batch.mask[r * batch.max_len + j], j < batch.lengths[r] ? 1 : 0);
      if (j >= batch.lengths[r]) EXPECT_EQ(batch.id(r, j), vocab.specials().pad);
    }
  }
  auto again = encode(vocab, texts, 24, true);
  EXPECT_EQ(batch.ids, again.ids);
}

TEST(Encode, UnseenBytesMapToUnk) {
  auto vocab = train_vocab(std::vector<std::string>{"abc abc"}, 50, 1);
  auto ids = encode_text(vocab, "abz");
  EXPECT_NE(std::find(ids.begin(), ids.end(), vocab.specials().unk), ids.end());
  EXPECT_NO_THROW(encode_text(vocab, "\xff\xfe broken utf8"));
}

TEST(Encode, MaxLenBelowTwoRejected) {
  auto vocab = train_vocab(std::vector<std::string>{"abc"}, 50, 1);
  std::vector<std::string> texts{"abc"};
  EXPECT_THROW(encode(vocab, texts, 1), ConfigError);
}

TEST(Decode, SpecialsDropped) {
  auto vocab = train_vocab(std::vector<std::string>{"abc"}, 50, 1);
  std::vector<int> ids{vocab.specials().cls, vocab.specials().pad};
  EXPECT_EQ(decode(vocab, ids), "");
}

TEST(Decode, UnknownIdRejected) {
  auto vocab = train_vocab(std::vector<std::string>{"abc"}, 50, 1);
  std::vector<int> ids{static_cast<int>(vocab.size())};
  EXPECT_THROW(decode(vocab, ids), DataError);
}

TEST(Decode, MixedScriptRoundTrip) {
  const auto corpus = fixture_lines();
  auto vocab = train_vocab(corpus, 800, 2);
  const std::string text = "  आज   ki  खबर\tviral hai 🙏 ";
  EXPECT_EQ(decode(vocab, encode_example(vocab, text, 512)), normalize_text(text));
  EXPECT_EQ(decode(vocab, encode_example(vocab, text, 512)), "आज ki खबर viral hai 🙏");
}

TEST(Decode, EveryVocabularyWordRoundTrips) {
  auto vocab = train_vocab(fixture_lines(), 800, 2);
  for (std::size_t i = Vocab::special_count; i < vocab.size(); ++i) {
    const auto& w = vocab.token(static_cast<int>(i));
    if (!is_valid_utf8(w) || normalize_text(w).empty()) continue;
    EXPECT_EQ(decode(vocab, encode_text(vocab, w)), normalize_text(w)) << "token " << i;
  }
}

TEST(Unicode, NfcAndWhitespace) {
  // Decomposed a + combining acute composes; runs of whitespace collapse.
  EXPECT_EQ(normalize_text(" a\xCC\x81  b\n\tc "), "\xC3\xA1 b c");
  EXPECT_TRUE(is_valid_utf8("हिंदी"));
  EXPECT_FALSE(is_valid_utf8("\xe0\xa4"));
}

TEST(VocabFile, SaveLoadRoundTrip) {
  auto vocab = train_vocab(fixture_lines(), 600, 2);
  std::stringstream buffer;
  vocab.write(buffer);
  auto loaded = Vocab::read(buffer);
  EXPECT_EQ(loaded.serialize(), vocab.serialize());
  EXPECT_EQ(loaded.size(), vocab.size());
  std::vector<std::string> texts = fixture_lines(30);
  EXPECT_EQ(encode(loaded, texts, 64).ids, encode(vocab, texts, 64).ids);
}

TEST(VocabFile, HeaderListsSpecialIds) {
  auto vocab = train_vocab(std::vector<std::string>{"abc abc"}, 50, 1);
  const auto text = vocab.serialize();
  const auto header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header.rfind("#dualhead-vocab v1", 0), 0u) << header;
  EXPECT_NE(header.find("cls=0 pad=1 sep=2 unk=3"), std::string::npos) << header;
}

TEST(VocabFile, MalformedFileRejected) {
  std::istringstream bad("not a vocab\n");
  EXPECT_THROW(Vocab::read(bad), DataError);
}
