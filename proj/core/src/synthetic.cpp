#include "bisenc/synthetic.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "bisenc/linalg.hpp"

namespace bisenc {

namespace {

std::string numbered_token(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%03zu", prefix, i);
  return buf;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string diagonal_alignment(std::size_t len) {
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) out += ' ';
    out += std::to_string(i) + "-" + std::to_string(i);
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  shuffle(perm, rng);
  return perm;
}

}  // namespace

SyntheticData gen_dictionary(const DictionaryTaskConfig& config) {
  if (config.vocab < 2) throw std::invalid_argument("gen_dictionary: vocab too small");
  if (config.min_len == 0 || config.min_len > config.max_len)
    throw std::invalid_argument("gen_dictionary: bad length range");
  Rng rng(config.seed);
  const auto primary = random_permutation(config.vocab, rng);

  auto make_split = [&](std::size_t pairs, SyntheticSplit& split) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t len =
          config.min_len + rng.uniform_index(config.max_len - config.min_len + 1);
      std::vector<std::string> src_tokens, tgt_tokens;
      src_tokens.reserve(len);
      tgt_tokens.reserve(len);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t w = rng.uniform_index(config.vocab);
        src_tokens.push_back(numbered_token('s', w));
        std::size_t translation = primary[w];
        if (config.alt_translation_prob > 0.0 && rng.bernoulli(config.alt_translation_prob)) {
          // fixed second translation: the next word's primary image, which is
          // always distinct from the first by injectivity
          translation = primary[(w + 1) % config.vocab];
        }
        tgt_tokens.push_back(numbered_token('t', translation));
      }
      split.src.push_back(join(src_tokens));
      split.tgt.push_back(join(tgt_tokens));
      split.align.push_back(diagonal_alignment(len));
    }
  };

  SyntheticData data;
  make_split(config.train_pairs, data.train);
  make_split(config.heldout_pairs, data.heldout);
  return data;
}

SyntheticData gen_ambiguous(const AmbiguousTaskConfig& config) {
  using namespace ambiguous_tokens;
  if (config.filler_vocab < 2) throw std::invalid_argument("gen_ambiguous: vocab too small");
  const std::size_t min_len = std::max(config.min_len, config.amb_min_pos + 1);
  if (min_len > config.max_len)
    throw std::invalid_argument("gen_ambiguous: max_len too small for amb_min_pos");
  Rng rng(config.seed);

  auto make_split = [&](std::size_t pairs, SyntheticSplit& split) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const bool marker_a = rng.bernoulli(0.5);
      const std::size_t len = min_len + rng.uniform_index(config.max_len - min_len + 1);
      const std::size_t amb_pos =
          config.amb_min_pos + rng.uniform_index(len - config.amb_min_pos);
      std::vector<std::string> src_tokens(len), tgt_tokens(len);
      src_tokens[0] = marker_a ? kMarkerA : kMarkerB;
      tgt_tokens[0] = marker_a ? kMarkerATarget : kMarkerBTarget;
      for (std::size_t i = 1; i < len; ++i) {
        if (i == amb_pos) {
          src_tokens[i] = kAmbiguous;
          tgt_tokens[i] = marker_a ? kSenseA : kSenseB;
        } else {
          const std::size_t w = rng.uniform_index(config.filler_vocab);
          src_tokens[i] = numbered_token('f', w);
          tgt_tokens[i] = numbered_token('g', w);
        }
      }
      split.src.push_back(join(src_tokens));
      split.tgt.push_back(join(tgt_tokens));
      split.align.push_back(diagonal_alignment(len));
    }
  };

  SyntheticData data;
  make_split(config.train_pairs, data.train);
  make_split(config.heldout_pairs, data.heldout);
  return data;
}

void write_lines(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_synthetic(const SyntheticData& data, const std::string& prefix) {
  write_lines(data.train.src, prefix + ".train.src");
  write_lines(data.train.tgt, prefix + ".train.tgt");
  write_lines(data.train.align, prefix + ".train.align");
  write_lines(data.heldout.src, prefix + ".heldout.src");
  write_lines(data.heldout.tgt, prefix + ".heldout.tgt");
  write_lines(data.heldout.align, prefix + ".heldout.align");
}

}  // namespace bisenc
