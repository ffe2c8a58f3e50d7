// Seeded synthetic bilingual corpora: a dictionary-translation task for
// retrieval experiments and a marker-disambiguation task where one source
// token translates two ways depending on a sentence-initial marker outside
// the local window.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bisenc {

struct SyntheticSplit {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  std::vector<std::string> align;
};

struct SyntheticData {
  SyntheticSplit train;
  SyntheticSplit heldout;
};

// Word-by-word translation through a seeded bijection; diagonal alignments.
// With alt_translation_prob > 0 each word independently switches to a fixed
// second translation, giving genuinely stochastic conditionals.
struct DictionaryTaskConfig {
  std::size_t vocab = 500;  // per side
  std::size_t train_pairs = 2000;
  std::size_t heldout_pairs = 200;
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  double alt_translation_prob = 0.0;
  std::uint64_t seed = 1;
};

SyntheticData gen_dictionary(const DictionaryTaskConfig& config);

namespace ambiguous_tokens {
inline constexpr const char* kMarkerA = "mka";
inline constexpr const char* kMarkerB = "mkb";
inline constexpr const char* kMarkerATarget = "MKA";
inline constexpr const char* kMarkerBTarget = "MKB";
inline constexpr const char* kAmbiguous = "amb";
inline constexpr const char* kSenseA = "ta";
inline constexpr const char* kSenseB = "tb";
}  // namespace ambiguous_tokens

// Sentences start with marker A or B (fair coin); fillers translate
// word-by-word; exactly one ambiguous token per sentence, at position
// >= amb_min_pos so the marker sits outside any local window of half-width
// amb_min_pos - 1. Its translation is decided by the marker alone.
struct AmbiguousTaskConfig {
  std::size_t filler_vocab = 40;
  std::size_t train_pairs = 2000;
  std::size_t heldout_pairs = 200;
  std::size_t min_len = 12;
  std::size_t max_len = 16;
  std::size_t amb_min_pos = 6;
  std::uint64_t seed = 1;
};

SyntheticData gen_ambiguous(const AmbiguousTaskConfig& config);

void write_lines(const std::vector<std::string>& lines, const std::string& path);

// Writes <prefix>.{train,heldout}.{src,tgt,align}.
void write_synthetic(const SyntheticData& data, const std::string& prefix);

}  // namespace bisenc
