#include "bisenc/bilingual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace bisenc {

namespace {

constexpr std::size_t kGradBlock = 8;  // examples per accumulator block

std::uint64_t hash_ids(std::uint64_t h, const std::vector<WordId>& ids) {
  // FNV-1a over the id stream, length-prefixed
  h = (h ^ ids.size()) * 0x100000001b3ULL;
  for (WordId id : ids) h = (h ^ id) * 0x100000001b3ULL;
  return h;
}

std::uint64_t hash_pair(const ParallelExample& ex) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = hash_ids(h, ex.source.ids);
  h = hash_ids(h, ex.target.ids);
  return h;
}

double model_l2(BilingualModel& model) {
  double acc = 0.0;
  for (auto& view : model.source.param_views())
    for (std::size_t i = 0; i < view.size; ++i) acc += view.data[i] * view.data[i];
  for (auto& view : model.target.param_views())
    for (std::size_t i = 0; i < view.size; ++i) acc += view.data[i] * view.data[i];
  return acc;
}

void apply_update(EncoderParams& params, EncoderGrads& grads, double lr, double l2) {
  auto pv = params.param_views();
  auto gv = grads.param_views();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (params.freeze_embeddings && pv[i].name == "embeddings") continue;
    sgd_step(pv[i].data, gv[i].data, pv[i].size, lr, l2);
  }
}

std::size_t sample_negative_impl(std::size_t pair_index,
                                 const std::vector<ParallelExample>& corpus, Rng& rng,
                                 bool source_side) {
  if (corpus.size() < 2)
    throw std::invalid_argument("sample_negative: corpus must hold at least two sentences");
  auto side = [source_side](const ParallelExample& ex) -> const std::vector<WordId>& {
    return source_side ? ex.source.ids : ex.target.ids;
  };
  const auto& own = side(corpus[pair_index]);
  bool usable = false;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i != pair_index && side(corpus[i]) != own) {
      usable = true;
      break;
    }
  }
  if (!usable)
    throw std::invalid_argument("sample_negative: no distinct sentence available");
  for (;;) {
    std::size_t j = rng.uniform_index(corpus.size() - 1);
    if (j >= pair_index) ++j;
    if (side(corpus[j]) != own) return j;
  }
}

// Distinct-surface negative pool in corpus-order-independent (sorted) order.
std::vector<const std::vector<WordId>*> sorted_target_pool(
    const std::vector<ParallelExample>& pairs) {
  std::vector<const std::vector<WordId>*> pool;
  pool.reserve(pairs.size());
  for (const auto& ex : pairs) pool.push_back(&ex.target.ids);
  std::sort(pool.begin(), pool.end(),
            [](const auto* a, const auto* b) { return *a < *b; });
  return pool;
}

}  // namespace

double similarity(const Vec& a, const Vec& b) { return dot(a, b); }

double hinge_loss(double sim_pos, double sim_neg, double margin) {
  if (margin <= 0.0) throw std::invalid_argument("hinge_loss: margin must be positive");
  const double v = margin + sim_neg - sim_pos;
  return v > 0.0 ? v : 0.0;
}

std::size_t sample_negative(std::size_t pair_index, const std::vector<ParallelExample>& corpus,
                            Rng& rng) {
  return sample_negative_impl(pair_index, corpus, rng, false);
}

double corpus_objective(const BilingualModel& model, const std::vector<ParallelExample>& pairs,
                        const TrainConfig& config, const std::vector<SentenceIds>* negatives) {
  if (pairs.empty()) throw std::invalid_argument("corpus_objective: empty corpus");
  if (negatives && negatives->size() != pairs.size())
    throw std::invalid_argument("corpus_objective: one negative per pair required");
  const auto pool = negatives ? std::vector<const std::vector<WordId>*>{}
                              : sorted_target_pool(pairs);
  double loss_sum = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& ex = pairs[p];
    const Vec of = encode_projected(ex.source, model.source, RunMode::kInfer).output;
    const Vec oe = encode_projected(ex.target, model.target, RunMode::kInfer).output;

    SentenceIds neg_sentence;
    if (negatives) {
      neg_sentence = (*negatives)[p];
    } else {
      Rng rng(Rng::mix(config.seed, hash_pair(ex)));
      const std::vector<WordId>* neg = nullptr;
      for (std::size_t attempt = 0; attempt < 1000; ++attempt) {
        const auto* cand = pool[rng.uniform_index(pool.size())];
        if (*cand != ex.target.ids) {
          neg = cand;
          break;
        }
      }
      if (neg == nullptr)
        throw std::invalid_argument("corpus_objective: no distinct negative available");
      neg_sentence.ids = *neg;
    }
    const Vec on = encode_projected(neg_sentence, model.target, RunMode::kInfer).output;
    loss_sum += hinge_loss(similarity(of, oe), similarity(of, on), config.margin);
  }
  auto& mutable_model = const_cast<BilingualModel&>(model);  // views are read here only
  return loss_sum / static_cast<double>(pairs.size()) +
         0.5 * config.lambda * model_l2(mutable_model);
}

double retrieval_eval(const BilingualModel& model, const std::vector<ParallelExample>& heldout,
                      std::size_t distractors, std::uint64_t seed) {
  if (heldout.empty()) throw std::invalid_argument("retrieval_eval: empty held-out set");
  const std::size_t n = heldout.size();
  std::vector<Vec> src(n), tgt(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = encode_projected(heldout[i].source, model.source, RunMode::kInfer).output;
    tgt[i] = encode_projected(heldout[i].target, model.target, RunMode::kInfer).output;
  }
  std::size_t hits = 0;
  std::vector<std::size_t> others(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    Rng rng(Rng::mix(seed, i));
    std::size_t count = std::min(distractors, others.size());
    // partial Fisher-Yates: the first `count` slots become the sample
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + rng.uniform_index(others.size() - k);
      std::swap(others[k], others[j]);
    }
    const double true_sim = similarity(src[i], tgt[i]);
    bool first = true;
    for (std::size_t k = 0; k < count; ++k) {
      if (similarity(src[i], tgt[others[k]]) >= true_sim) {
        first = false;
        break;
      }
    }
    if (first) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

void format_epoch_line(std::ostream& out, const EpochStats& stats) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.4f", stats.epoch, stats.train_objective,
                stats.heldout_objective, stats.precision_at_1);
  out << buf << '\n';
}

std::vector<EpochStats> train_bilingual(BilingualModel& model,
                                        const std::vector<ParallelExample>& corpus,
                                        const TrainConfig& config, std::ostream* epoch_log) {
  if (corpus.size() < 2)
    throw std::invalid_argument("train_bilingual: need at least two sentence pairs");
  if (model.source.out_dim() != model.target.out_dim())
    throw std::invalid_argument("train_bilingual: towers project into different dims");

  const std::size_t heldout_count = std::min(
      corpus.size() - 2,
      static_cast<std::size_t>(static_cast<double>(corpus.size()) * config.heldout_fraction));
  const std::size_t train_count = corpus.size() - heldout_count;
  const std::vector<ParallelExample> train(corpus.begin(), corpus.begin() + train_count);
  const std::vector<ParallelExample> heldout(corpus.begin() + train_count, corpus.end());

  std::vector<EpochStats> log;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(config.seed, epoch));
    shuffle(order, shuffle_rng);

    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += config.minibatch) {
      const std::size_t batch_end = std::min(order.size(), batch_start + config.minibatch);
      const std::size_t batch_size = batch_end - batch_start;
      const std::size_t blocks = (batch_size + kGradBlock - 1) / kGradBlock;

      std::vector<EncoderGrads> src_grads, tgt_grads;
      src_grads.reserve(blocks);
      tgt_grads.reserve(blocks);
      for (std::size_t b = 0; b < blocks; ++b) {
        src_grads.push_back(EncoderGrads::zeros_like(model.source));
        tgt_grads.push_back(EncoderGrads::zeros_like(model.target));
      }

      run_blocks(blocks, config.threads, [&](std::size_t block) {
        const std::size_t lo = batch_start + block * kGradBlock;
        const std::size_t hi = std::min(batch_end, lo + kGradBlock);
        for (std::size_t slot = lo; slot < hi; ++slot) {
          const ParallelExample& ex = train[order[slot]];
          Rng rng(Rng::mix(config.seed, Rng::mix(epoch, slot)));

          auto res_f = encode_projected(ex.source, model.source, RunMode::kTrain, &rng);
          auto res_e = encode_projected(ex.target, model.target, RunMode::kTrain, &rng);
          const double sim_pos = similarity(res_f.output, res_e.output);

          const double weight = 1.0 / static_cast<double>(config.negatives);
          Vec d_f(res_f.output.size(), 0.0);
          Vec d_e(res_e.output.size(), 0.0);
          for (std::size_t neg = 0; neg < config.negatives; ++neg) {
            const std::size_t neg_idx = sample_negative(order[slot], train, rng);
            auto res_n =
                encode_projected(train[neg_idx].target, model.target, RunMode::kTrain, &rng);
            if (hinge_loss(sim_pos, similarity(res_f.output, res_n.output), config.margin) >
                0.0) {
              // d/dO'_f = O'_neg - O'_e ; d/dO'_e = -O'_f ; d/dO'_neg = +O'_f
              axpy(weight, res_n.output, d_f);
              axpy(-weight, res_e.output, d_f);
              axpy(-weight, res_f.output, d_e);
              Vec d_n = res_f.output;
              for (double& v : d_n) v *= weight;
              encoder_backward(model.target, res_n.trace, d_n, tgt_grads[block]);
            }
            if (config.symmetric_negatives) {
              const std::size_t sneg_idx = sample_negative_impl(order[slot], train, rng, true);
              auto res_sn =
                  encode_projected(train[sneg_idx].source, model.source, RunMode::kTrain, &rng);
              if (hinge_loss(sim_pos, similarity(res_sn.output, res_e.output), config.margin) >
                  0.0) {
                axpy(weight, res_sn.output, d_e);
                axpy(-weight, res_f.output, d_e);
                axpy(-weight, res_e.output, d_f);
                Vec d_sn = res_e.output;
                for (double& v : d_sn) v *= weight;
                encoder_backward(model.source, res_sn.trace, d_sn, src_grads[block]);
              }
            }
          }
          encoder_backward(model.source, res_f.trace, d_f, src_grads[block]);
          encoder_backward(model.target, res_e.trace, d_e, tgt_grads[block]);
        }
      });

      for (std::size_t b = 1; b < blocks; ++b) {
        src_grads[0].add(src_grads[b]);
        tgt_grads[0].add(tgt_grads[b]);
      }
      const double inv_batch = 1.0 / static_cast<double>(batch_size);
      src_grads[0].scale(inv_batch);
      tgt_grads[0].scale(inv_batch);
      apply_update(model.source, src_grads[0], config.lr, config.lambda);
      apply_update(model.target, tgt_grads[0], config.lr, config.lambda);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_objective = corpus_objective(model, train, config);
    if (!heldout.empty()) {
      stats.heldout_objective = corpus_objective(model, heldout, config);
      stats.precision_at_1 =
          retrieval_eval(model, heldout, std::min(config.eval_distractors, heldout.size() - 1),
                         Rng::mix(config.seed, 0x65766131ULL));
    } else {
      stats.heldout_objective = std::numeric_limits<double>::quiet_NaN();
      stats.precision_at_1 = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(stats.train_objective))
      throw std::runtime_error("train_bilingual: objective became non-finite at epoch " +
                               std::to_string(epoch) + "; lower the learning rate");
    if (epoch_log) format_epoch_line(*epoch_log, stats);
    log.push_back(stats);
  }
  return log;
}

void save_bilingual(const BilingualModel& model, const std::string& path) {
  Snapshot snap("bilingual");
  encoder_to_snapshot(model.source, "src.", snap);
  encoder_to_snapshot(model.target, "tgt.", snap);
  snap.write(path);
}

BilingualModel load_bilingual(const std::string& path) {
  Snapshot snap = Snapshot::read(path);
  if (snap.kind() != "bilingual")
    throw std::runtime_error(path + ": expected a bilingual snapshot, got '" + snap.kind() +
                             "'");
  BilingualModel model;
  model.source = encoder_from_snapshot(snap, "src.");
  model.target = encoder_from_snapshot(snap, "tgt.");
  if (model.source.out_dim() != model.target.out_dim())
    throw std::runtime_error(path + ": towers project into different dims");
  return model;
}

}  // namespace bisenc
