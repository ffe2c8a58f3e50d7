#include "bisenc/joint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace bisenc {

namespace {

constexpr std::size_t kGradBlock = 8;

double softplus(double x) {
  // log(1 + e^x), stable for large |x|
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

// Backward through the shared layers given sparse output-row gradients.
void joint_backward(const JointModelParams& params, const ContextWindow& ctx,
                    const JointTrace& trace,
                    const std::vector<std::pair<WordId, double>>& d_logits, JointGrads& acc) {
  const std::size_t hidden = params.hidden_dim();
  Vec d_h2(hidden, 0.0);
  for (const auto& [id, g] : d_logits) {
    if (g == 0.0) continue;
    const double* wrow = params.wo.row(id);
    double* grow = acc.wo.row(id);
    for (std::size_t j = 0; j < hidden; ++j) {
      grow[j] += g * trace.h2[j];
      d_h2[j] += g * wrow[j];
    }
    acc.bo[id] += g;
  }

  Vec d_h2_pre(hidden);
  for (std::size_t j = 0; j < hidden; ++j)
    d_h2_pre[j] = trace.h2_pre[j] > 0.0 ? d_h2[j] : 0.0;
  add_outer(acc.w2, d_h2_pre, trace.h1);
  axpy(1.0, d_h2_pre, acc.b2);
  Vec d_h1 = matvec_transposed(params.w2, d_h2_pre);

  Vec d_h1_pre(hidden);
  for (std::size_t j = 0; j < hidden; ++j)
    d_h1_pre[j] = trace.h1_pre[j] > 0.0 ? d_h1[j] : 0.0;
  add_outer(acc.w1, d_h1_pre, trace.input);
  axpy(1.0, d_h1_pre, acc.b1);
  Vec d_input = matvec_transposed(params.w1, d_h1_pre);

  // Route input gradient into the two embedding blocks; the sentence-vector
  // slot has no trainable parameters behind it (the encoder stays frozen).
  const std::size_t d = params.emb_dim;
  std::size_t offset = 0;
  for (WordId id : ctx.history) {
    double* grow = acc.tgt_emb.row(id);
    for (std::size_t k = 0; k < d; ++k) grow[k] += d_input[offset + k];
    offset += d;
  }
  for (WordId id : ctx.window) {
    double* grow = acc.src_emb.row(id);
    for (std::size_t k = 0; k < d; ++k) grow[k] += d_input[offset + k];
    offset += d;
  }
}

void apply_update(JointModelParams& params, JointGrads& grads, double lr, double l2) {
  auto pv = params.param_views();
  auto gv = grads.param_views();
  for (std::size_t i = 0; i < pv.size(); ++i)
    sgd_step(pv[i].data, gv[i].data, pv[i].size, lr, l2);
}

}  // namespace

std::vector<ParamView> JointModelParams::param_views() {
  return {
      {"src_emb", src_emb.data(), src_emb.size()},
      {"tgt_emb", tgt_emb.data(), tgt_emb.size()},
      {"w1", w1.data(), w1.size()},
      {"b1", b1.data(), b1.size()},
      {"w2", w2.data(), w2.size()},
      {"b2", b2.data(), b2.size()},
      {"wo", wo.data(), wo.size()},
      {"bo", bo.data(), bo.size()},
  };
}

JointModelParams JointModelParams::init(const Vocabulary& src_vocab,
                                        const Vocabulary& tgt_vocab, std::size_t order,
                                        std::size_t window, std::size_t emb_dim,
                                        std::size_t svec_dim, std::size_t hidden, Rng& rng) {
  if (order < 2) throw std::invalid_argument("joint init: order must be >= 2");
  if (window % 2 == 0) throw std::invalid_argument("joint init: window must be odd");
  if (emb_dim == 0 || hidden == 0)
    throw std::invalid_argument("joint init: dims must be positive");
  JointModelParams p;
  p.order = order;
  p.window = window;
  p.emb_dim = emb_dim;
  p.svec_dim = svec_dim;
  p.src_vocab = src_vocab;
  p.tgt_vocab = tgt_vocab;
  const double emb_bound = std::sqrt(6.0 / static_cast<double>(1 + emb_dim));
  p.src_emb = Mat(src_vocab.size(), emb_dim);
  for (std::size_t i = 0; i < p.src_emb.size(); ++i)
    p.src_emb.data()[i] = rng.uniform(-emb_bound, emb_bound);
  p.tgt_emb = Mat(tgt_vocab.size(), emb_dim);
  for (std::size_t i = 0; i < p.tgt_emb.size(); ++i)
    p.tgt_emb.data()[i] = rng.uniform(-emb_bound, emb_bound);
  p.w1 = xavier_init(hidden, p.input_width(), rng);
  p.b1 = Vec(hidden, 0.0);
  p.w2 = xavier_init(hidden, hidden, rng);
  p.b2 = Vec(hidden, 0.0);
  p.wo = xavier_init(tgt_vocab.size(), hidden, rng);
  // Start near self-normalization: uniform output ~ 1/|V| per word.
  p.bo = Vec(tgt_vocab.size(), -std::log(static_cast<double>(tgt_vocab.size())));
  return p;
}

JointGrads JointGrads::zeros_like(const JointModelParams& p) {
  JointGrads g;
  g.src_emb = Mat(p.src_emb.rows(), p.src_emb.cols());
  g.tgt_emb = Mat(p.tgt_emb.rows(), p.tgt_emb.cols());
  g.w1 = Mat(p.w1.rows(), p.w1.cols());
  g.b1 = Vec(p.b1.size(), 0.0);
  g.w2 = Mat(p.w2.rows(), p.w2.cols());
  g.b2 = Vec(p.b2.size(), 0.0);
  g.wo = Mat(p.wo.rows(), p.wo.cols());
  g.bo = Vec(p.bo.size(), 0.0);
  return g;
}

void JointGrads::add(const JointGrads& o) {
  auto mine = param_views();
  auto theirs = const_cast<JointGrads&>(o).param_views();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].size != theirs[i].size) throw std::invalid_argument("grads: shape mismatch");
    for (std::size_t k = 0; k < mine[i].size; ++k) mine[i].data[k] += theirs[i].data[k];
  }
}

void JointGrads::scale(double a) {
  for (auto& view : param_views())
    for (std::size_t k = 0; k < view.size; ++k) view.data[k] *= a;
}

std::vector<ParamView> JointGrads::param_views() {
  return {
      {"src_emb", src_emb.data(), src_emb.size()},
      {"tgt_emb", tgt_emb.data(), tgt_emb.size()},
      {"w1", w1.data(), w1.size()},
      {"b1", b1.data(), b1.size()},
      {"w2", w2.data(), w2.size()},
      {"b2", b2.data(), b2.size()},
      {"wo", wo.data(), wo.size()},
      {"bo", bo.data(), bo.size()},
  };
}

std::size_t affiliation(std::size_t target_index, const AlignmentLinks& links,
                        std::size_t src_len, std::size_t tgt_len) {
  if (src_len == 0 || tgt_len == 0)
    throw std::invalid_argument("affiliation: empty sentence");
  if (target_index >= tgt_len)
    throw std::out_of_range("affiliation: target index out of range");

  std::vector<std::vector<std::size_t>> aligned(tgt_len);
  for (const auto& [s, t] : links.links) {
    if (s >= src_len || t >= tgt_len)
      throw std::invalid_argument("affiliation: link out of range");
    aligned[t].push_back(s);
  }
  auto middle = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];  // lower median
  };

  if (!aligned[target_index].empty()) return middle(aligned[target_index]);

  // Nearest aligned neighbor, right wins ties, then its middle rule.
  for (std::size_t d = 1; d < tgt_len; ++d) {
    if (target_index + d < tgt_len && !aligned[target_index + d].empty())
      return middle(aligned[target_index + d]);
    if (target_index >= d && !aligned[target_index - d].empty())
      return middle(aligned[target_index - d]);
  }
  // No links anywhere in the sentence.
  return std::min(target_index, src_len - 1);
}

std::vector<WordId> extract_window(const SentenceIds& source, std::size_t center,
                                   std::size_t m) {
  if (m % 2 == 0) throw std::invalid_argument("extract_window: window size must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(m / 2);
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(source.ids.size());
  std::vector<WordId> out;
  out.reserve(m);
  for (std::ptrdiff_t p = static_cast<std::ptrdiff_t>(center) - half;
       p <= static_cast<std::ptrdiff_t>(center) + half; ++p) {
    if (p < 0)
      out.push_back(Vocabulary::kBos);
    else if (p >= len)
      out.push_back(Vocabulary::kEos);
    else
      out.push_back(source.ids[static_cast<std::size_t>(p)]);
  }
  return out;
}

ContextWindow assemble_context(const ParallelExample& ex, std::size_t target_index,
                               std::size_t order, std::size_t window, Vec sentence_vec) {
  if (!ex.has_alignment)
    throw std::invalid_argument("assemble_context: example has no alignment");
  ContextWindow ctx;
  ctx.history.reserve(order - 1);
  for (std::size_t back = order - 1; back >= 1; --back) {
    if (target_index >= back)
      ctx.history.push_back(ex.target.ids[target_index - back]);
    else
      ctx.history.push_back(Vocabulary::kBos);
  }
  const std::size_t center =
      affiliation(target_index, ex.alignment, ex.source.ids.size(), ex.target.ids.size());
  ctx.window = extract_window(ex.source, center, window);
  ctx.sentence_vec = std::move(sentence_vec);
  ctx.gold = ex.target.ids[target_index];
  return ctx;
}

ContextWindow assemble_context(const ParallelExample& ex, std::size_t target_index,
                               const JointModelParams& params,
                               const EncoderParams* source_encoder) {
  Vec svec(params.svec_dim, 0.0);
  if (params.use_sentence_vec) {
    if (source_encoder == nullptr)
      throw std::invalid_argument("assemble_context: model wants a sentence vector but no "
                                  "encoder was provided");
    svec = encoder_forward(ex.source, *source_encoder, RunMode::kInfer).output;
    if (svec.size() != params.svec_dim)
      throw std::invalid_argument("assemble_context: encoder output dim does not match the "
                                  "model's sentence-vector slot");
  }
  return assemble_context(ex, target_index, params.order, params.window, std::move(svec));
}

JointTrace forward_trace(const ContextWindow& ctx, const JointModelParams& params) {
  if (ctx.history.size() != params.order - 1)
    throw std::invalid_argument("forward: history length does not match model order");
  if (ctx.window.size() != params.window)
    throw std::invalid_argument("forward: window length does not match model window");
  if (ctx.sentence_vec.size() != params.svec_dim)
    throw std::invalid_argument("forward: sentence vector has wrong length");

  JointTrace t;
  t.input.reserve(params.input_width());
  const std::size_t d = params.emb_dim;
  for (WordId id : ctx.history) {
    if (id >= params.tgt_emb.rows()) throw std::out_of_range("forward: target id out of range");
    const double* row = params.tgt_emb.row(id);
    t.input.insert(t.input.end(), row, row + d);
  }
  for (WordId id : ctx.window) {
    if (id >= params.src_emb.rows()) throw std::out_of_range("forward: source id out of range");
    const double* row = params.src_emb.row(id);
    t.input.insert(t.input.end(), row, row + d);
  }
  t.input.insert(t.input.end(), ctx.sentence_vec.begin(), ctx.sentence_vec.end());

  t.h1_pre = matvec(params.w1, t.input);
  axpy(1.0, params.b1, t.h1_pre);
  t.h1 = relu(t.h1_pre);
  t.h2_pre = matvec(params.w2, t.h1);
  axpy(1.0, params.b2, t.h2_pre);
  t.h2 = relu(t.h2_pre);
  return t;
}

Vec logits_from_trace(const JointTrace& trace, const JointModelParams& params) {
  Vec logits = matvec(params.wo, trace.h2);
  axpy(1.0, params.bo, logits);
  return logits;
}

Vec forward_logits(const ContextWindow& ctx, const JointModelParams& params) {
  return logits_from_trace(forward_trace(ctx, params), params);
}

NoiseDistribution NoiseDistribution::from_counts(const std::vector<std::uint64_t>& counts,
                                                 double power) {
  if (counts.empty()) throw std::invalid_argument("noise distribution: empty counts");
  NoiseDistribution dist;
  dist.prob.resize(counts.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    // add-one smoothing keeps full support
    dist.prob[i] = std::pow(static_cast<double>(counts[i] + 1), power);
    sum += dist.prob[i];
  }
  dist.cdf.resize(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    dist.prob[i] /= sum;
    acc += dist.prob[i];
    dist.cdf[i] = acc;
  }
  dist.cdf.back() = 1.0;
  return dist;
}

WordId NoiseDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const std::size_t idx = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
  return static_cast<WordId>(idx);
}

WordId NoiseDistribution::sample_avoiding(WordId gold, Rng& rng) const {
  WordId draw = gold;
  for (int attempt = 0; attempt < 10; ++attempt) {
    draw = sample(rng);
    if (draw != gold) return draw;
  }
  return draw;  // kept after 10 redraws; the bias is negligible
}

std::vector<std::uint64_t> output_counts(const std::vector<ParallelExample>& corpus,
                                         std::size_t vocab_size) {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& ex : corpus)
    for (WordId id : ex.target.ids) {
      if (id >= vocab_size) throw std::out_of_range("output_counts: id out of range");
      ++counts[id];
    }
  return counts;
}

double nce_posterior(double logit, double noise_log_mass) {
  return sigmoid(logit - noise_log_mass);
}

double nce_loss(const ContextWindow& ctx, const JointModelParams& params,
                const std::vector<WordId>& noise_ids, const NoiseDistribution& dist,
                JointGrads* acc) {
  if (dist.prob.size() != params.output_vocab_size())
    throw std::invalid_argument("nce_loss: noise distribution size mismatch");
  const double kappa = static_cast<double>(noise_ids.size());
  if (noise_ids.empty()) throw std::invalid_argument("nce_loss: no noise samples");

  const JointTrace trace = forward_trace(ctx, params);
  auto logit_of = [&](WordId w) {
    return dot_row(params.wo, w, trace.h2) + params.bo[w];
  };

  std::vector<std::pair<WordId, double>> d_logits;
  d_logits.reserve(noise_ids.size() + 1);

  if (dist.q(ctx.gold) <= 0.0)
    throw std::invalid_argument("nce_loss: noise distribution lacks support at the gold word");
  const double x_gold = logit_of(ctx.gold) - std::log(kappa * dist.q(ctx.gold));
  double loss = softplus(-x_gold);
  d_logits.emplace_back(ctx.gold, sigmoid(x_gold) - 1.0);

  for (WordId w : noise_ids) {
    if (w >= params.output_vocab_size())
      throw std::out_of_range("nce_loss: noise id out of range");
    if (dist.q(w) <= 0.0)
      throw std::invalid_argument("nce_loss: sampled noise word has zero probability");
    const double x = logit_of(w) - std::log(kappa * dist.q(w));
    loss += softplus(x);
    d_logits.emplace_back(w, sigmoid(x));
  }

  if (acc) joint_backward(params, ctx, trace, d_logits, *acc);
  return loss;
}

double softmax_loss(const ContextWindow& ctx, const JointModelParams& params,
                    JointGrads* acc) {
  const JointTrace trace = forward_trace(ctx, params);
  const Vec logits = logits_from_trace(trace, params);
  const Vec logp = log_softmax(logits);
  const double loss = -logp[ctx.gold];
  if (acc) {
    std::vector<std::pair<WordId, double>> d_logits;
    d_logits.reserve(logits.size());
    for (std::size_t w = 0; w < logits.size(); ++w) {
      double g = std::exp(logp[w]);
      if (w == ctx.gold) g -= 1.0;
      d_logits.emplace_back(static_cast<WordId>(w), g);
    }
    joint_backward(params, ctx, trace, d_logits, *acc);
  }
  return loss;
}

double log_prob(const ContextWindow& ctx, const JointModelParams& params, LogProbMode mode) {
  const JointTrace trace = forward_trace(ctx, params);
  if (mode == LogProbMode::kSelfNorm)
    return dot_row(params.wo, ctx.gold, trace.h2) + params.bo[ctx.gold];
  const Vec logits = logits_from_trace(trace, params);
  return log_softmax(logits)[ctx.gold];
}

void format_joint_epoch_line(std::ostream& out, const JointEpochStats& stats) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.4f", stats.epoch, stats.train_loss,
                stats.heldout_nll, stats.heldout_ppl);
  out << buf << '\n';
}

std::vector<JointEpochStats> train_nnjm(const std::vector<ParallelExample>& corpus,
                                        const EncoderParams* source_encoder,
                                        JointModelParams& params,
                                        const TrainJointConfig& config,
                                        std::ostream* epoch_log) {
  if (corpus.empty()) throw std::invalid_argument("train_nnjm: empty corpus");
  for (const auto& ex : corpus)
    if (!ex.has_alignment)
      throw std::invalid_argument("train_nnjm: every example needs an alignment");
  if (params.use_sentence_vec && source_encoder == nullptr)
    throw std::invalid_argument("train_nnjm: model wants a sentence vector but no encoder "
                                "was provided");

  const std::size_t heldout_sents = std::min(
      corpus.size() - 1,
      static_cast<std::size_t>(static_cast<double>(corpus.size()) * config.heldout_fraction));
  const std::size_t train_sents = corpus.size() - heldout_sents;

  // One encoder run per sentence; the cache is read-only during training.
  std::vector<Vec> svec(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (params.use_sentence_vec) {
      svec[s] = encoder_forward(corpus[s].source, *source_encoder, RunMode::kInfer).output;
      if (svec[s].size() != params.svec_dim)
        throw std::invalid_argument("train_nnjm: encoder output dim does not match the "
                                    "model's sentence-vector slot");
    } else {
      svec[s] = Vec(params.svec_dim, 0.0);
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> examples;  // (sentence, position)
  for (std::size_t s = 0; s < train_sents; ++s)
    for (std::size_t i = 0; i < corpus[s].target.ids.size(); ++i) examples.emplace_back(s, i);
  std::vector<std::pair<std::size_t, std::size_t>> heldout;
  for (std::size_t s = train_sents; s < corpus.size(); ++s)
    for (std::size_t i = 0; i < corpus[s].target.ids.size(); ++i) heldout.emplace_back(s, i);
  if (examples.empty()) throw std::invalid_argument("train_nnjm: no training examples");

  const NoiseDistribution dist = NoiseDistribution::from_counts(
      output_counts(std::vector<ParallelExample>(corpus.begin(), corpus.begin() + train_sents),
                    params.output_vocab_size()),
      config.nce.power);

  const bool exact_eval = params.output_vocab_size() <= config.exact_eval_max_vocab;
  double lr = config.lr;
  double best_heldout = std::numeric_limits<double>::infinity();
  std::vector<JointEpochStats> log;

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(config.seed, epoch));
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += config.minibatch) {
      const std::size_t batch_end = std::min(order.size(), batch_start + config.minibatch);
      const std::size_t batch_size = batch_end - batch_start;
      const std::size_t blocks = (batch_size + kGradBlock - 1) / kGradBlock;

      std::vector<JointGrads> grads;
      grads.reserve(blocks);
      for (std::size_t b = 0; b < blocks; ++b) grads.push_back(JointGrads::zeros_like(params));
      std::vector<double> block_loss(blocks, 0.0);

      run_blocks(blocks, config.threads, [&](std::size_t block) {
        const std::size_t lo = batch_start + block * kGradBlock;
        const std::size_t hi = std::min(batch_end, lo + kGradBlock);
        for (std::size_t slot = lo; slot < hi; ++slot) {
          const auto [s, i] = examples[order[slot]];
          const ContextWindow ctx =
              assemble_context(corpus[s], i, params.order, params.window, svec[s]);
          if (config.loss == JointLoss::kSoftmax) {
            block_loss[block] += softmax_loss(ctx, params, &grads[block]);
          } else {
            Rng rng(Rng::mix(config.seed, Rng::mix(epoch, slot)));
            std::vector<WordId> noise(config.nce.num_noise);
            for (auto& w : noise) w = dist.sample_avoiding(ctx.gold, rng);
            block_loss[block] += nce_loss(ctx, params, noise, dist, &grads[block]);
          }
        }
      });

      for (std::size_t b = 1; b < blocks; ++b) {
        grads[0].add(grads[b]);
        block_loss[0] += block_loss[b];
      }
      grads[0].scale(1.0 / static_cast<double>(batch_size));
      apply_update(params, grads[0], lr, config.l2);
      loss_sum += block_loss[0];
    }

    JointEpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(examples.size());
    stats.lr = lr;
    if (!heldout.empty()) {
      double nll = 0.0;
      for (const auto& [s, i] : heldout) {
        const ContextWindow ctx =
            assemble_context(corpus[s], i, params.order, params.window, svec[s]);
        nll -= log_prob(ctx, params, exact_eval ? LogProbMode::kExact : LogProbMode::kSelfNorm);
      }
      stats.heldout_nll = nll / static_cast<double>(heldout.size());
      stats.heldout_ppl = exact_eval ? std::exp(stats.heldout_nll)
                                     : std::numeric_limits<double>::quiet_NaN();
    } else {
      stats.heldout_nll = std::numeric_limits<double>::quiet_NaN();
      stats.heldout_ppl = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(stats.train_loss))
      throw std::runtime_error("train_nnjm: loss became non-finite at epoch " +
                               std::to_string(epoch) + "; lower the learning rate");
    if (epoch_log) format_joint_epoch_line(*epoch_log, stats);
    log.push_back(stats);

    if (config.halve_lr_on_regression && !heldout.empty() &&
        std::isfinite(stats.heldout_nll)) {
      if (stats.heldout_nll > best_heldout) lr *= 0.5;
      best_heldout = std::min(best_heldout, stats.heldout_nll);
    }
  }
  return log;
}

void save_joint(const JointModelParams& p, const std::string& path) {
  Snapshot snap("joint");
  std::vector<std::string> src_words, tgt_words;
  for (WordId id = Vocabulary::kNumReserved; id < p.src_vocab.size(); ++id)
    src_words.push_back(p.src_vocab.word(id));
  for (WordId id = Vocabulary::kNumReserved; id < p.tgt_vocab.size(); ++id)
    tgt_words.push_back(p.tgt_vocab.word(id));
  snap.put_strings("src_vocab", src_words);
  snap.put_strings("tgt_vocab", tgt_words);
  snap.put_i64("order", static_cast<std::int64_t>(p.order));
  snap.put_i64("window", static_cast<std::int64_t>(p.window));
  snap.put_i64("emb_dim", static_cast<std::int64_t>(p.emb_dim));
  snap.put_i64("svec_dim", static_cast<std::int64_t>(p.svec_dim));
  snap.put_i64("use_sentence_vec", p.use_sentence_vec ? 1 : 0);
  snap.put_mat("src_emb", p.src_emb);
  snap.put_mat("tgt_emb", p.tgt_emb);
  snap.put_mat("w1", p.w1);
  snap.put_vec("b1", p.b1);
  snap.put_mat("w2", p.w2);
  snap.put_vec("b2", p.b2);
  snap.put_mat("wo", p.wo);
  snap.put_vec("bo", p.bo);
  snap.write(path);
}

JointModelParams load_joint(const std::string& path) {
  Snapshot snap = Snapshot::read(path);
  if (snap.kind() != "joint")
    throw std::runtime_error(path + ": expected a joint-model snapshot, got '" + snap.kind() +
                             "'");
  JointModelParams p;
  for (const auto& w : snap.get_strings("src_vocab")) p.src_vocab.add(w, 0);
  for (const auto& w : snap.get_strings("tgt_vocab")) p.tgt_vocab.add(w, 0);
  p.order = static_cast<std::size_t>(snap.get_i64("order"));
  p.window = static_cast<std::size_t>(snap.get_i64("window"));
  p.emb_dim = static_cast<std::size_t>(snap.get_i64("emb_dim"));
  p.svec_dim = static_cast<std::size_t>(snap.get_i64("svec_dim"));
  p.use_sentence_vec = snap.get_i64("use_sentence_vec") != 0;
  p.src_emb = snap.get_mat("src_emb");
  p.tgt_emb = snap.get_mat("tgt_emb");
  p.w1 = snap.get_mat("w1");
  p.b1 = snap.get_vec("b1");
  p.w2 = snap.get_mat("w2");
  p.b2 = snap.get_vec("b2");
  p.wo = snap.get_mat("wo");
  p.bo = snap.get_vec("bo");
  if (p.w1.cols() != p.input_width())
    throw std::runtime_error(path + ": hidden layer width does not match the model header");
  return p;
}

}  // namespace bisenc
