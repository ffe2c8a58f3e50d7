// Vocabularies, tokenized parallel corpora, word alignments and embedding
// file I/O. Input is expected to be pre-tokenized; tokenization here is
// whitespace splitting only.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bisenc/linalg.hpp"

namespace bisenc {

using WordId = std::uint32_t;

// Word <-> id bijection with four reserved entries at fixed ids 0..3.
// Real words follow, ordered by descending corpus frequency with
// lexicographic tie-break, truncated at a maximum size.
class Vocabulary {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr WordId kPad = 1;
  static constexpr WordId kBos = 2;
  static constexpr WordId kEos = 3;
  static constexpr std::size_t kNumReserved = 4;

  Vocabulary();

  std::size_t size() const { return words_.size(); }
  const std::string& word(WordId id) const;
  std::optional<WordId> find(std::string_view w) const;
  WordId id_or_unk(std::string_view w) const;
  std::uint64_t frequency(WordId id) const { return freq_[id]; }

  // Appends a non-reserved word; caller is responsible for ordering.
  WordId add(const std::string& w, std::uint64_t freq);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.freq_ == b.freq_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, WordId> index_;
};

struct SentenceIds {
  std::vector<WordId> ids;
  std::size_t length() const { return ids.size(); }
};

// 0-based (source index, target index) pairs, deduplicated and sorted.
struct AlignmentLinks {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> links;
  bool empty() const { return links.empty(); }
};

struct ParallelExample {
  SentenceIds source;
  SentenceIds target;
  AlignmentLinks alignment;
  bool has_alignment = false;
};

// Vocabulary plus the dense word vectors (one row per word).
struct EmbeddingTable {
  Vocabulary vocab;
  std::size_t dim = 0;
  Mat table;  // vocab.size() x dim
};

std::vector<std::string> split_ws(std::string_view line);

std::unordered_map<std::string, std::uint64_t> count_tokens(std::istream& in);

// Keeps the max_size most frequent words (reserved tokens do not count
// against max_size). Ties broken lexicographically. Throws on empty counts.
Vocabulary build_vocab(const std::unordered_map<std::string, std::uint64_t>& counts,
                       std::size_t max_size);

// One "word<TAB>frequency" line per non-reserved word, frequency-descending.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

SentenceIds to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::vector<std::string> to_words(const SentenceIds& sentence, const Vocabulary& vocab);

// Parses Pharaoh "i-j" pairs; validates indices against the sentence lengths.
AlignmentLinks parse_alignment_line(std::string_view line, std::size_t src_len,
                                    std::size_t tgt_len, std::size_t line_no);

// Reads line-parallel files (alignment optional: empty path = none).
// Rejects on line-count mismatch, empty sentences and malformed links,
// reporting the offending line number.
std::vector<ParallelExample> read_parallel(const std::string& src_path,
                                           const std::string& tgt_path,
                                           const std::string& align_path,
                                           const Vocabulary& src_vocab,
                                           const Vocabulary& tgt_vocab);

// word2vec text format: header "count dim", then "word v1 ... v_dim" lines.
// In-vocab rows are copied; vocabulary words missing from the file are
// randomly initialized. A word repeated in the file keeps its last
// occurrence (warning to stderr). dim must equal the configured dim.
EmbeddingTable load_word2vec_text(const std::string& path, const Vocabulary& vocab,
                                  std::size_t dim, Rng& rng);

// All rows uniform in +-sqrt(6 / (1 + dim)), the same law used for rows
// missing from an embedding file.
EmbeddingTable random_embedding_table(const Vocabulary& vocab, std::size_t dim, Rng& rng);

}  // namespace bisenc
