// Feed-forward joint model: predicts each target word from n-1 target
// history words, an m-word source window centered on the affiliated source
// word, and a global sentence vector taken from a frozen chunk encoder.
// Trained either with noise-contrastive estimation (normalizer fixed at 1)
// or, for small vocabularies, with the exact softmax.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bisenc/corpus.hpp"
#include "bisenc/encoder.hpp"
#include "bisenc/linalg.hpp"

namespace bisenc {

struct ContextWindow {
  std::vector<WordId> history;  // n-1 target ids, <s>-padded at sentence start
  std::vector<WordId> window;   // m source ids, boundary-padded
  Vec sentence_vec;             // pre-projection encoder output O (or zeros)
  WordId gold = 0;
};

struct JointModelParams {
  std::size_t order = 4;    // n
  std::size_t window = 11;  // m, odd
  std::size_t emb_dim = 192;
  std::size_t svec_dim = 192;
  bool use_sentence_vec = true;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;  // serves as both target input and output vocabulary
  Mat src_emb;           // |V_src| x emb_dim
  Mat tgt_emb;           // |V_tgt| x emb_dim
  Mat w1;                // hidden x input_width
  Vec b1;
  Mat w2;  // hidden x hidden
  Vec b2;
  Mat wo;  // |V_out| x hidden
  Vec bo;

  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t output_vocab_size() const { return wo.rows(); }
  std::size_t input_width() const {
    return (order - 1 + window) * emb_dim + svec_dim;
  }

  std::vector<ParamView> param_views();

  static JointModelParams init(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                               std::size_t order, std::size_t window, std::size_t emb_dim,
                               std::size_t svec_dim, std::size_t hidden, Rng& rng);
};

struct JointGrads {
  Mat src_emb, tgt_emb;
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
  Mat wo;
  Vec bo;

  static JointGrads zeros_like(const JointModelParams& p);
  void add(const JointGrads& other);
  void scale(double a);
  std::vector<ParamView> param_views();
};

struct JointTrace {
  Vec input;  // concatenated embeddings + sentence vector
  Vec h1_pre, h1;
  Vec h2_pre, h2;
};

// Source index affiliated with target position i. An aligned word takes the
// lower-median of its source links; an unaligned word inherits from the
// nearest aligned neighbor (right wins ties); with no links at all the result
// is min(i, src_len - 1). Total: always returns a valid index.
std::size_t affiliation(std::size_t target_index, const AlignmentLinks& links,
                        std::size_t src_len, std::size_t tgt_len);

// m ids centered at center; out-of-range positions become <s> / </s>.
// Throws on even m.
std::vector<WordId> extract_window(const SentenceIds& source, std::size_t center,
                                   std::size_t m);

// Builds the context for target position i. The example must carry an
// alignment. The sentence vector is passed in so callers can cache one
// encoder run per source sentence.
ContextWindow assemble_context(const ParallelExample& ex, std::size_t target_index,
                               std::size_t order, std::size_t window, Vec sentence_vec);

// Convenience: runs the encoder (infer mode, pre-projection output O) or
// substitutes zeros when the model ignores the sentence vector.
ContextWindow assemble_context(const ParallelExample& ex, std::size_t target_index,
                               const JointModelParams& params,
                               const EncoderParams* source_encoder);

Vec forward_logits(const ContextWindow& ctx, const JointModelParams& params);
JointTrace forward_trace(const ContextWindow& ctx, const JointModelParams& params);
Vec logits_from_trace(const JointTrace& trace, const JointModelParams& params);

// Unigram^power over the output vocabulary with add-one smoothing, so every
// word keeps support.
struct NoiseDistribution {
  Vec prob;
  Vec cdf;

  static NoiseDistribution from_counts(const std::vector<std::uint64_t>& counts, double power);
  double q(WordId w) const { return prob[w]; }
  WordId sample(Rng& rng) const;
  // Redraws a draw equal to gold up to 10 times, then keeps it.
  WordId sample_avoiding(WordId gold, Rng& rng) const;
};

struct NceConfig {
  std::size_t num_noise = 100;  // kappa
  double power = 0.75;          // unigram smoothing exponent
};

std::vector<std::uint64_t> output_counts(const std::vector<ParallelExample>& corpus,
                                         std::size_t vocab_size);

// NCE posterior P(data | w) with the normalizer fixed at 1:
// sigmoid(logit_w - log(kappa * q(w))).
double nce_posterior(double logit, double noise_log_mass);

// Loss of one example given kappa noise draws; gradients (only the gold and
// noise output rows plus the shared lower layers are touched) are
// accumulated into acc when non-null. Throws if q(w) = 0 for any noise id.
double nce_loss(const ContextWindow& ctx, const JointModelParams& params,
                const std::vector<WordId>& noise_ids, const NoiseDistribution& dist,
                JointGrads* acc = nullptr);

// Exact cross-entropy loss -log softmax(logits)[gold], full gradient.
double softmax_loss(const ContextWindow& ctx, const JointModelParams& params,
                    JointGrads* acc = nullptr);

enum class LogProbMode { kExact, kSelfNorm };

// kExact normalizes over the output vocabulary; kSelfNorm returns the raw
// gold logit (NCE trains the normalizer toward 1).
double log_prob(const ContextWindow& ctx, const JointModelParams& params, LogProbMode mode);

enum class JointLoss { kNce, kSoftmax };

struct TrainJointConfig {
  std::size_t epochs = 5;
  std::size_t minibatch = 32;
  double lr = 0.1;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  JointLoss loss = JointLoss::kNce;
  NceConfig nce;
  double heldout_fraction = 0.05;
  // Exact held-out perplexity is reported up to this output vocabulary size;
  // beyond it the (cheaper) self-normalized surrogate is logged instead.
  std::size_t exact_eval_max_vocab = 2000;
  bool halve_lr_on_regression = true;
  std::size_t threads = 1;
};

struct JointEpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double heldout_nll = 0.0;  // exact CE or self-norm surrogate
  double heldout_ppl = 0.0;  // exp(CE) when exact, NaN otherwise
  double lr = 0.0;
};

// SGD over shuffled per-word examples. Every example needs an alignment;
// the encoder is read-only throughout. Emits one
// "epoch<TAB>train_loss<TAB>heldout_nll<TAB>heldout_ppl" line per epoch.
std::vector<JointEpochStats> train_nnjm(const std::vector<ParallelExample>& corpus,
                                        const EncoderParams* source_encoder,
                                        JointModelParams& params,
                                        const TrainJointConfig& config,
                                        std::ostream* epoch_log = nullptr);

void save_joint(const JointModelParams& params, const std::string& path);
JointModelParams load_joint(const std::string& path);

void format_joint_epoch_line(std::ostream& out, const JointEpochStats& stats);

}  // namespace bisenc
