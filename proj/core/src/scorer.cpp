#include "bisenc/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bisenc {

namespace {

Vec source_sentence_vec(const SentenceIds& source, const JointModelParams& jm,
                        const EncoderParams* encoder) {
  if (!jm.use_sentence_vec) return Vec(jm.svec_dim, 0.0);
  if (encoder == nullptr)
    throw std::invalid_argument("scorer: model wants a sentence vector but no encoder given");
  Vec svec = encoder_forward(source, *encoder, RunMode::kInfer).output;
  if (svec.size() != jm.svec_dim)
    throw std::invalid_argument("scorer: encoder output dim does not match the model");
  return svec;
}

// Partial hypothesis during monotone decoding.
struct DecodeHyp {
  std::vector<WordId> target_ids;
  std::vector<std::string> surface;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> links;
  std::vector<double> features;  // decoder_feature_names() order
  double score = 0.0;
};

}  // namespace

void PhraseTable::add(std::vector<std::string> source, PhraseOption option) {
  if (source.empty()) throw std::invalid_argument("phrase table: empty source phrase");
  max_source_len_ = std::max(max_source_len_, source.size());
  entries_[std::move(source)].push_back(std::move(option));
}

const std::vector<PhraseOption>* PhraseTable::lookup(
    const std::vector<std::string>& source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> split_fields(const std::string& line, const std::string& sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
  return fields;
}

PhraseTable PhraseTable::load(const std::string& path, const Vocabulary& tgt_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  PhraseTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, "|||");
    if (fields.size() != 4)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'src ||| tgt ||| links ||| logprob'");
    const auto src_tokens = split_ws(fields[0]);
    const auto tgt_tokens = split_ws(fields[1]);
    if (src_tokens.empty() || tgt_tokens.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty phrase side");
    PhraseOption opt;
    opt.target_surface = tgt_tokens;
    for (const auto& tok : tgt_tokens) opt.target_ids.push_back(tgt_vocab.id_or_unk(tok));
    opt.internal =
        parse_alignment_line(fields[2], src_tokens.size(), tgt_tokens.size(), line_no);
    try {
      std::size_t pos = 0;
      opt.logprob = std::stod(fields[3], &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad logprob field");
    }
    table.add(src_tokens, std::move(opt));
  }
  return table;
}

FeatureWeights FeatureWeights::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  FeatureWeights w;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected name<TAB>value");
    const std::string name = line.substr(0, tab);
    if (std::find(w.names.begin(), w.names.end(), name) != w.names.end())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate weight '" +
                               name + "'");
    try {
      std::size_t pos = 0;
      w.values.push_back(std::stod(line.substr(tab + 1), &pos));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad value field");
    }
    w.names.push_back(name);
  }
  return w;
}

std::vector<double> FeatureWeights::require(const std::vector<std::string>& required) const {
  if (names.size() != required.size())
    throw std::invalid_argument("weights: expected " + std::to_string(required.size()) +
                                " features, got " + std::to_string(names.size()));
  std::vector<double> out(required.size());
  for (std::size_t i = 0; i < required.size(); ++i) {
    const auto it = std::find(names.begin(), names.end(), required[i]);
    if (it == names.end())
      throw std::invalid_argument("weights: missing feature '" + required[i] + "'");
    out[i] = values[static_cast<std::size_t>(it - names.begin())];
  }
  return out;
}

ScoreBreakdown score_hypothesis(const SentenceIds& source, const Hypothesis& hyp,
                                const JointModelParams& jm, const EncoderParams* encoder,
                                LogProbMode mode) {
  ScoreBreakdown out;
  if (hyp.target.ids.empty()) {
    std::cerr << "[bisenc] warning: scoring an empty hypothesis, score is 0\n";
    return out;
  }
  const Vec svec = source_sentence_vec(source, jm, encoder);
  ParallelExample ex;
  ex.source = source;
  ex.target = hyp.target;
  ex.alignment = hyp.alignment;
  ex.has_alignment = true;
  out.per_word.reserve(hyp.target.ids.size());
  for (std::size_t i = 0; i < hyp.target.ids.size(); ++i) {
    const ContextWindow ctx = assemble_context(ex, i, jm.order, jm.window, svec);
    const double lp = log_prob(ctx, jm, mode);
    out.per_word.push_back(lp);
    out.total += lp;
  }
  return out;
}

RescoreResult rescore_nbest(const SentenceIds& source, const std::vector<Hypothesis>& candidates,
                            const FeatureWeights& weights, const JointModelParams& jm,
                            const EncoderParams* encoder, LogProbMode mode) {
  std::size_t file_features = 0;
  if (!candidates.empty()) file_features = candidates[0].features.size();
  for (const auto& c : candidates)
    if (c.features.size() != file_features)
      throw std::invalid_argument("rescore: candidates disagree on feature count");

  std::vector<std::string> required = {"nn"};
  for (std::size_t k = 1; k <= file_features; ++k) required.push_back("f" + std::to_string(k));
  const std::vector<double> w = weights.require(required);

  RescoreResult res;
  res.scores.resize(candidates.size());
  res.nn_scores.resize(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    res.nn_scores[c] = score_hypothesis(source, candidates[c], jm, encoder, mode).total;
    double score = w[0] * res.nn_scores[c];
    for (std::size_t k = 0; k < file_features; ++k)
      score += w[k + 1] * candidates[c].features[k];
    res.scores[c] = score;
  }
  res.order.resize(candidates.size());
  std::iota(res.order.begin(), res.order.end(), std::size_t{0});
  std::stable_sort(res.order.begin(), res.order.end(),
                   [&](std::size_t a, std::size_t b) { return res.scores[a] > res.scores[b]; });
  return res;
}

Hypothesis monotone_decode(const std::vector<std::string>& source_tokens,
                           const PhraseTable& table, const FeatureWeights& weights,
                           const JointModelParams& jm, const EncoderParams* encoder,
                           const DecodeConfig& config) {
  if (source_tokens.empty()) throw std::invalid_argument("decode: empty source");
  if (config.beam == 0) throw std::invalid_argument("decode: beam must be positive");
  const std::vector<double> w = weights.require(decoder_feature_names());
  const std::size_t n_features = w.size();

  SentenceIds source = to_ids(source_tokens, jm.src_vocab);
  const Vec svec = source_sentence_vec(source, jm, encoder);
  const std::size_t n = source_tokens.size();

  // Score the target words a phrase appends, given the partial hypothesis.
  auto extend = [&](const DecodeHyp& hyp, std::size_t src_pos, const PhraseOption& opt) {
    DecodeHyp next = hyp;
    const std::size_t base = next.target_ids.size();
    for (const auto& [s, t] : opt.internal.links)
      next.links.emplace_back(static_cast<std::uint32_t>(src_pos + s),
                              static_cast<std::uint32_t>(base + t));
    next.target_ids.insert(next.target_ids.end(), opt.target_ids.begin(),
                           opt.target_ids.end());
    next.surface.insert(next.surface.end(), opt.target_surface.begin(),
                        opt.target_surface.end());

    AlignmentLinks partial;
    partial.links = next.links;
    std::sort(partial.links.begin(), partial.links.end());
    ParallelExample ex;
    ex.source = source;
    ex.target.ids = next.target_ids;
    ex.alignment = partial;
    ex.has_alignment = true;
    for (std::size_t t = 0; t < opt.target_ids.size(); ++t) {
      const ContextWindow ctx =
          assemble_context(ex, base + t, jm.order, jm.window, svec);
      next.features[0] += log_prob(ctx, jm, config.mode);
    }
    next.features[1] += opt.logprob;
    next.features[2] -= static_cast<double>(opt.target_ids.size());
    if (opt.unknown) next.features[3] -= 1.0;
    next.score = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) next.score += w[f] * next.features[f];
    return next;
  };

  std::vector<std::vector<DecodeHyp>> stacks(n + 1);
  DecodeHyp empty;
  empty.features.assign(n_features, 0.0);
  stacks[0].push_back(std::move(empty));

  std::size_t first_gap = n;  // smallest reached position with no outgoing phrase
  for (std::size_t j = 0; j < n; ++j) {
    auto& stack = stacks[j];
    if (stack.empty()) continue;
    std::stable_sort(stack.begin(), stack.end(),
                     [](const DecodeHyp& a, const DecodeHyp& b) { return a.score > b.score; });
    if (stack.size() > config.beam) stack.resize(config.beam);

    const std::size_t max_span = std::min(table.max_source_len(), n - j);
    bool extended = false;
    for (std::size_t span = 1; span <= std::max<std::size_t>(max_span, 1); ++span) {
      if (j + span > n) break;
      const std::vector<std::string> key(source_tokens.begin() + j,
                                         source_tokens.begin() + j + span);
      const std::vector<PhraseOption>* options = table.lookup(key);
      std::vector<PhraseOption> fallback;
      if (options == nullptr && span == 1 && config.allow_unk) {
        PhraseOption unk;
        unk.target_surface = {source_tokens[j]};
        unk.target_ids = {jm.tgt_vocab.id_or_unk(source_tokens[j])};
        unk.internal.links = {{0, 0}};
        unk.logprob = 0.0;
        unk.unknown = true;
        fallback.push_back(std::move(unk));
        options = &fallback;
      }
      if (options == nullptr) continue;
      extended = true;
      for (const auto& hyp : stack)
        for (const auto& opt : *options) stacks[j + span].push_back(extend(hyp, j, opt));
    }
    if (!extended) first_gap = std::min(first_gap, j);
  }

  auto& final_stack = stacks[n];
  if (final_stack.empty()) {
    const std::size_t gap = first_gap < n ? first_gap : 0;
    throw std::runtime_error("decode: no phrase covers source position " +
                             std::to_string(gap) + " (token '" + source_tokens[gap] + "')");
  }
  const DecodeHyp* best = &final_stack[0];
  for (const auto& hyp : final_stack)
    if (hyp.score > best->score) best = &hyp;

  Hypothesis out;
  out.target.ids = best->target_ids;
  out.surface = best->surface;
  out.alignment.links = best->links;
  std::sort(out.alignment.links.begin(), out.alignment.links.end());
  out.alignment.links.erase(std::unique(out.alignment.links.begin(), out.alignment.links.end()),
                            out.alignment.links.end());
  out.features = best->features;
  return out;
}

std::vector<NbestEntry> read_nbest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<NbestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, "|||");
    if (fields.size() != 4)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'sent_id ||| tokens ||| links ||| features'");
    NbestEntry e;
    try {
      std::size_t pos = 0;
      const auto id_tokens = split_ws(fields[0]);
      if (id_tokens.size() != 1) throw std::invalid_argument("sent_id");
      e.sent_id = std::stoul(id_tokens[0], &pos);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad sent_id field");
    }
    e.tokens = split_ws(fields[1]);
    if (e.tokens.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty hypothesis");
    e.alignment_field = fields[2];
    for (const auto& tok : split_ws(fields[3])) {
      try {
        std::size_t pos = 0;
        e.features.push_back(std::stod(tok, &pos));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad feature '" +
                                 tok + "'");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

Hypothesis hypothesis_from_nbest(const NbestEntry& entry, const Vocabulary& tgt_vocab,
                                 std::size_t src_len, std::size_t line_no) {
  Hypothesis hyp;
  hyp.surface = entry.tokens;
  hyp.target = to_ids(entry.tokens, tgt_vocab);
  hyp.alignment =
      parse_alignment_line(entry.alignment_field, src_len, entry.tokens.size(), line_no);
  hyp.features = entry.features;
  return hyp;
}

}  // namespace bisenc
