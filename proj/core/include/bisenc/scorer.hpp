// Joint-model probabilities as a log-linear feature: hypothesis scoring with
// per-word breakdowns, n-best rescoring, and a monotone phrase-based beam
// decoder that integrates the neural feature word-synchronously.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bisenc/corpus.hpp"
#include "bisenc/encoder.hpp"
#include "bisenc/joint.hpp"

namespace bisenc {

// Decoder feature slots, in order: neural log-prob, phrase log-prob,
// -(target length), -(unknown-word count).
inline const std::vector<std::string>& decoder_feature_names() {
  static const std::vector<std::string> names = {"nn", "phrase", "word_penalty", "unk"};
  return names;
}

struct Hypothesis {
  SentenceIds target;
  std::vector<std::string> surface;
  AlignmentLinks alignment;
  std::vector<double> features;
};

struct PhraseOption {
  std::vector<WordId> target_ids;
  std::vector<std::string> target_surface;
  AlignmentLinks internal;  // indices within the phrase pair
  double logprob = 0.0;
  bool unknown = false;  // identity fallback for uncovered words
};

// Keyed by source surface tokens so out-of-vocabulary words do not collide.
class PhraseTable {
 public:
  void add(std::vector<std::string> source, PhraseOption option);
  const std::vector<PhraseOption>* lookup(const std::vector<std::string>& source) const;
  std::size_t max_source_len() const { return max_source_len_; }
  std::size_t size() const { return entries_.size(); }

  // "src ||| tgt ||| i-j pairs ||| logprob" per line.
  static PhraseTable load(const std::string& path, const Vocabulary& tgt_vocab);

 private:
  std::map<std::vector<std::string>, std::vector<PhraseOption>> entries_;
  std::size_t max_source_len_ = 0;
};

struct FeatureWeights {
  std::vector<std::string> names;
  std::vector<double> values;

  // "name<TAB>value" per line.
  static FeatureWeights load(const std::string& path);

  // Values reordered to `required`; throws naming any missing or unexpected
  // feature.
  std::vector<double> require(const std::vector<std::string>& required) const;
};

struct ScoreBreakdown {
  double total = 0.0;
  std::vector<double> per_word;
};

// Sum over target positions of the joint-model log-prob; the sentence vector
// is computed once per source sentence. An empty hypothesis scores 0 with a
// warning.
ScoreBreakdown score_hypothesis(const SentenceIds& source, const Hypothesis& hyp,
                                const JointModelParams& jm, const EncoderParams* encoder,
                                LogProbMode mode = LogProbMode::kExact);

struct RescoreResult {
  std::vector<std::size_t> order;  // candidate indices, best first
  std::vector<double> scores;      // log-linear score per candidate (input order)
  std::vector<double> nn_scores;   // filled neural feature per candidate (input order)
};

// Log-linear rescoring: score = w_nn * nn + sum_k w_fk * f_k where f_k are
// the candidate's file features. Weight names must be exactly
// nn, f1, ..., fK. Stable descending sort; ties keep input order.
RescoreResult rescore_nbest(const SentenceIds& source, const std::vector<Hypothesis>& candidates,
                            const FeatureWeights& weights, const JointModelParams& jm,
                            const EncoderParams* encoder,
                            LogProbMode mode = LogProbMode::kExact);

struct DecodeConfig {
  std::size_t beam = 10;
  bool allow_unk = true;  // identity fallback for uncovered single words
  LogProbMode mode = LogProbMode::kExact;
};

// Left-to-right coverage of the source by phrases, no reordering. Hypotheses
// are extended word-synchronously so the target history and the affiliation
// are available when the neural feature is computed. Beam pruning by partial
// log-linear score. Throws, naming the position, if the source cannot be
// covered.
Hypothesis monotone_decode(const std::vector<std::string>& source_tokens,
                           const PhraseTable& table, const FeatureWeights& weights,
                           const JointModelParams& jm, const EncoderParams* encoder,
                           const DecodeConfig& config);

struct NbestEntry {
  std::size_t sent_id = 0;
  std::vector<std::string> tokens;
  std::string alignment_field;  // parsed against the source length at use
  std::vector<double> features;
};

// "sent_id ||| target tokens ||| alignment i-j pairs ||| f1 f2 ..." per line.
std::vector<NbestEntry> read_nbest(const std::string& path);

Hypothesis hypothesis_from_nbest(const NbestEntry& entry, const Vocabulary& tgt_vocab,
                                 std::size_t src_len, std::size_t line_no);

std::vector<std::string> split_fields(const std::string& line, const std::string& sep);

}  // namespace bisenc
