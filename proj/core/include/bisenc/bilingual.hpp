// Max-margin training of two chunk encoders (one per language) so that
// translation pairs score higher than randomly drawn non-translation pairs
// in a shared space. Similarity is the dot product of the projected
// vectors; higher means closer.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bisenc/corpus.hpp"
#include "bisenc/encoder.hpp"

namespace bisenc {

struct BilingualModel {
  EncoderParams source;
  EncoderParams target;

  std::size_t shared_dim() const { return source.out_dim(); }
};

struct TrainConfig {
  double margin = 1.0;
  double lambda = 1e-4;  // L2 weight
  double lr = 0.05;
  std::size_t epochs = 10;
  std::size_t minibatch = 16;
  std::size_t negatives = 1;  // per pair per epoch, resampled every epoch
  std::uint64_t seed = 1;
  bool symmetric_negatives = false;  // adds a source-side negative term
  double heldout_fraction = 0.05;    // trailing slice, logged only
  std::size_t eval_distractors = 99;
  std::size_t threads = 1;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_objective = 0.0;
  double heldout_objective = 0.0;
  double precision_at_1 = 0.0;
};

double similarity(const Vec& a, const Vec& b);

// max(0, margin + sim_neg - sim_pos)
double hinge_loss(double sim_pos, double sim_neg, double margin);

// Index of a target sentence drawn uniformly from the corpus excluding
// pair_index, redrawing any draw whose surface form equals the pair's own
// target. Throws if the corpus has no usable negative.
std::size_t sample_negative(std::size_t pair_index, const std::vector<ParallelExample>& corpus,
                            Rng& rng);

// Mean per-pair hinge loss plus lambda/2 * ||params||^2. The negative for
// each pair is a pure function of (seed, pair content), so the value does
// not depend on corpus order. Evaluated without dropout. An explicit
// negatives list (one target per pair) overrides the seeded draw.
double corpus_objective(const BilingualModel& model, const std::vector<ParallelExample>& pairs,
                        const TrainConfig& config,
                        const std::vector<SentenceIds>* negatives = nullptr);

// Fraction of held-out sources whose true translation outranks `distractors`
// uniformly sampled other targets (strictly). 0 distractors gives 1.0.
double retrieval_eval(const BilingualModel& model, const std::vector<ParallelExample>& heldout,
                      std::size_t distractors, std::uint64_t seed);

// Minibatch SGD on the max-margin objective. Splits off the trailing
// heldout_fraction of pairs for logging, trains on the rest, and emits one
// "epoch<TAB>train_obj<TAB>heldout_obj<TAB>p@1" line per epoch to epoch_log
// when given. Aborts if the objective turns non-finite.
std::vector<EpochStats> train_bilingual(BilingualModel& model,
                                        const std::vector<ParallelExample>& corpus,
                                        const TrainConfig& config,
                                        std::ostream* epoch_log = nullptr);

void save_bilingual(const BilingualModel& model, const std::string& path);
BilingualModel load_bilingual(const std::string& path);

void format_epoch_line(std::ostream& out, const EpochStats& stats);

}  // namespace bisenc
