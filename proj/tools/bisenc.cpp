// bisenc command-line tool: trains the bilingual chunk encoder and the
// neural joint model, embeds sentences, scores/rescoring hypotheses, runs
// the monotone decoder, generates synthetic corpora and verifies gradients.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bisenc/bilingual.hpp"
#include "bisenc/corpus.hpp"
#include "bisenc/encoder.hpp"
#include "bisenc/gradcheck.hpp"
#include "bisenc/joint.hpp"
#include "bisenc/scorer.hpp"
#include "bisenc/synthetic.hpp"

namespace {

using namespace bisenc;

// Configuration problems detected after parsing (missing files and the like).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& flag) {
  std::ifstream in(path);
  if (!in) throw UsageError(flag + ": cannot open '" + path + "'");
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::size_t default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

Vocabulary vocab_from_corpus(const std::string& path, std::size_t max_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open corpus '" + path + "'");
  return build_vocab(count_tokens(in), max_size);
}

std::vector<std::string> read_all_lines(const std::string& path) {
  std::vector<std::string> lines;
  if (path == "-") {
    std::string line;
    while (std::getline(std::cin, line)) lines.push_back(line);
    return lines;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct OutputStream {
  explicit OutputStream(const std::string& path) {
    if (!path.empty() && path != "-") {
      file.open(path, std::ios::binary | std::ios::trunc);
      if (!file) throw UsageError("cannot open output '" + path + "'");
      out = &file;
    } else {
      out = &std::cout;
    }
  }
  std::ostream& stream() { return *out; }
  std::ofstream file;
  std::ostream* out = nullptr;
};

// ---------------------------------------------------------------------------
// train-encoder

struct TrainEncoderArgs {
  std::string src, tgt, output, epoch_log;
  std::string src_embeddings, tgt_embeddings;
  std::string save_src_vocab, save_tgt_vocab;
  std::size_t src_vocab_size = 16000, tgt_vocab_size = 16000;
  std::size_t embed_dim = 192, window = 3, filters = 100, chunks = 4, out_dim = 192;
  double dropout = 0.5;
  TrainConfig train;
};

int run_train_encoder(const TrainEncoderArgs& args) {
  require_file(args.src, "--src");
  require_file(args.tgt, "--tgt");

  std::cerr << "[bisenc] building vocabularies\n";
  const Vocabulary src_vocab = vocab_from_corpus(args.src, args.src_vocab_size);
  const Vocabulary tgt_vocab = vocab_from_corpus(args.tgt, args.tgt_vocab_size);
  if (!args.save_src_vocab.empty()) save_vocab(src_vocab, args.save_src_vocab);
  if (!args.save_tgt_vocab.empty()) save_vocab(tgt_vocab, args.save_tgt_vocab);

  Rng src_rng(Rng::mix(args.train.seed, 1));
  Rng tgt_rng(Rng::mix(args.train.seed, 2));
  BilingualModel model;
  model.source = EncoderParams::init(src_vocab, args.embed_dim, args.window, args.filters,
                                     args.chunks, args.out_dim, args.dropout, src_rng);
  model.target = EncoderParams::init(tgt_vocab, args.embed_dim, args.window, args.filters,
                                     args.chunks, args.out_dim, args.dropout, tgt_rng);
  if (!args.src_embeddings.empty()) {
    require_file(args.src_embeddings, "--src-embeddings");
    Rng rng(Rng::mix(args.train.seed, 3));
    model.source.embeddings =
        load_word2vec_text(args.src_embeddings, src_vocab, args.embed_dim, rng);
  }
  if (!args.tgt_embeddings.empty()) {
    require_file(args.tgt_embeddings, "--tgt-embeddings");
    Rng rng(Rng::mix(args.train.seed, 4));
    model.target.embeddings =
        load_word2vec_text(args.tgt_embeddings, tgt_vocab, args.embed_dim, rng);
  }

  const auto corpus = read_parallel(args.src, args.tgt, "", src_vocab, tgt_vocab);
  std::cerr << "[bisenc] training on " << corpus.size() << " sentence pairs\n";

  std::ofstream log_file;
  std::ostream* log = &std::cerr;
  if (!args.epoch_log.empty()) {
    log_file.open(args.epoch_log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw UsageError("--epoch-log: cannot open '" + args.epoch_log + "'");
    log = &log_file;
  }
  train_bilingual(model, corpus, args.train, log);
  save_bilingual(model, args.output);
  std::cerr << "[bisenc] wrote " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-nnjm

struct TrainNnjmArgs {
  std::string src, tgt, align, encoder, output, epoch_log, save_tgt_vocab;
  std::size_t tgt_vocab_size = 32000;
  std::size_t order = 4, window = 11, hidden = 512, emb_dim = 192;
  bool zero_sentence_vec = false;
  TrainJointConfig train;
};

int run_train_nnjm(const TrainNnjmArgs& args) {
  require_file(args.src, "--src");
  require_file(args.tgt, "--tgt");
  require_file(args.align, "--align");
  require_file(args.encoder, "--encoder");

  const BilingualModel encoder = load_bilingual(args.encoder);
  const Vocabulary& src_vocab = encoder.source.embeddings.vocab;
  const Vocabulary tgt_vocab = vocab_from_corpus(args.tgt, args.tgt_vocab_size);
  if (!args.save_tgt_vocab.empty()) save_vocab(tgt_vocab, args.save_tgt_vocab);

  const auto corpus = read_parallel(args.src, args.tgt, args.align, src_vocab, tgt_vocab);
  std::cerr << "[bisenc] training joint model on " << corpus.size() << " sentence pairs\n";

  Rng init_rng(Rng::mix(args.train.seed, 100));
  JointModelParams params =
      JointModelParams::init(src_vocab, tgt_vocab, args.order, args.window, args.emb_dim,
                             encoder.source.out_dim(), args.hidden, init_rng);
  params.use_sentence_vec = !args.zero_sentence_vec;

  std::ofstream log_file;
  std::ostream* log = &std::cerr;
  if (!args.epoch_log.empty()) {
    log_file.open(args.epoch_log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw UsageError("--epoch-log: cannot open '" + args.epoch_log + "'");
    log = &log_file;
  }
  train_nnjm(corpus, &encoder.source, params, args.train, log);
  save_joint(params, args.output);
  std::cerr << "[bisenc] wrote " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// embed

int run_embed(const std::string& model_path, const std::string& side,
              const std::string& input, const std::string& output) {
  require_file(model_path, "--model");
  const BilingualModel model = load_bilingual(model_path);
  const EncoderParams& tower = side == "target" ? model.target : model.source;

  OutputStream out(output);
  const auto lines = read_all_lines(input);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto tokens = split_ws(lines[i]);
    if (tokens.empty())
      throw std::runtime_error("embed: line " + std::to_string(i + 1) + " is empty");
    const SentenceIds ids = to_ids(tokens, tower.embeddings.vocab);
    const Vec vec = encoder_forward(ids, tower, RunMode::kInfer).output;
    std::string line;
    for (std::size_t d = 0; d < vec.size(); ++d) {
      if (d) line += ' ';
      line += fmt("%.8g", vec[d]);
    }
    out.stream() << line << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string model, encoder, src, tgt, align, output;
  bool self_norm = false;
};

int run_score(const ScoreArgs& args) {
  require_file(args.model, "--model");
  require_file(args.src, "--src");
  require_file(args.tgt, "--tgt");
  require_file(args.align, "--align");
  const JointModelParams jm = load_joint(args.model);
  BilingualModel enc;
  const EncoderParams* enc_ptr = nullptr;
  if (jm.use_sentence_vec) {
    if (args.encoder.empty())
      throw UsageError("--encoder is required: the model uses a sentence vector");
    require_file(args.encoder, "--encoder");
    enc = load_bilingual(args.encoder);
    enc_ptr = &enc.source;
  }

  const auto corpus = read_parallel(args.src, args.tgt, args.align, jm.src_vocab, jm.tgt_vocab);
  const LogProbMode mode = args.self_norm ? LogProbMode::kSelfNorm : LogProbMode::kExact;
  OutputStream out(args.output);
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    Hypothesis hyp;
    hyp.target = corpus[s].target;
    hyp.alignment = corpus[s].alignment;
    const ScoreBreakdown breakdown =
        score_hypothesis(corpus[s].source, hyp, jm, enc_ptr, mode);
    for (std::size_t i = 0; i < breakdown.per_word.size(); ++i) {
      out.stream() << s << '\t' << i << '\t' << jm.tgt_vocab.word(corpus[s].target.ids[i])
                   << '\t' << fmt("%.10g", breakdown.per_word[i]) << '\n';
    }
    out.stream() << s << "\ttotal\t" << fmt("%.10g", breakdown.total) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::string src, phrase_table, weights, model, encoder, output, alignment_out;
  std::size_t beam = 10;
  bool self_norm = false;
  bool no_unk_fallback = false;
};

int run_decode(const DecodeArgs& args) {
  require_file(args.src, "--src");
  require_file(args.phrase_table, "--phrase-table");
  require_file(args.weights, "--weights");
  require_file(args.model, "--model");
  const JointModelParams jm = load_joint(args.model);
  BilingualModel enc;
  const EncoderParams* enc_ptr = nullptr;
  if (jm.use_sentence_vec) {
    if (args.encoder.empty())
      throw UsageError("--encoder is required: the model uses a sentence vector");
    require_file(args.encoder, "--encoder");
    enc = load_bilingual(args.encoder);
    enc_ptr = &enc.source;
  }
  const PhraseTable table = PhraseTable::load(args.phrase_table, jm.tgt_vocab);
  const FeatureWeights weights = FeatureWeights::load(args.weights);

  DecodeConfig config;
  config.beam = args.beam;
  config.allow_unk = !args.no_unk_fallback;
  config.mode = args.self_norm ? LogProbMode::kSelfNorm : LogProbMode::kExact;

  OutputStream out(args.output);
  std::ofstream align_out;
  if (!args.alignment_out.empty()) {
    align_out.open(args.alignment_out, std::ios::binary | std::ios::trunc);
    if (!align_out) throw UsageError("--alignment-out: cannot open");
  }
  const auto lines = read_all_lines(args.src);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto tokens = split_ws(lines[i]);
    if (tokens.empty())
      throw std::runtime_error("decode: source line " + std::to_string(i + 1) + " is empty");
    const Hypothesis best = monotone_decode(tokens, table, weights, jm, enc_ptr, config);
    std::string line;
    for (std::size_t t = 0; t < best.surface.size(); ++t) {
      if (t) line += ' ';
      line += best.surface[t];
    }
    out.stream() << line << '\n';
    if (align_out) {
      std::string aline;
      for (std::size_t l = 0; l < best.alignment.links.size(); ++l) {
        if (l) aline += ' ';
        aline += std::to_string(best.alignment.links[l].first) + "-" +
                 std::to_string(best.alignment.links[l].second);
      }
      align_out << aline << '\n';
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// rescore

struct RescoreArgs {
  std::string src, nbest, weights, model, encoder, output;
  bool self_norm = false;
};

int run_rescore(const RescoreArgs& args) {
  require_file(args.src, "--src");
  require_file(args.nbest, "--nbest");
  require_file(args.weights, "--weights");
  require_file(args.model, "--model");
  const JointModelParams jm = load_joint(args.model);
  BilingualModel enc;
  const EncoderParams* enc_ptr = nullptr;
  if (jm.use_sentence_vec) {
    if (args.encoder.empty())
      throw UsageError("--encoder is required: the model uses a sentence vector");
    require_file(args.encoder, "--encoder");
    enc = load_bilingual(args.encoder);
    enc_ptr = &enc.source;
  }
  const FeatureWeights weights = FeatureWeights::load(args.weights);
  const LogProbMode mode = args.self_norm ? LogProbMode::kSelfNorm : LogProbMode::kExact;

  const auto src_lines = read_all_lines(args.src);
  std::vector<SentenceIds> sources(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i)
    sources[i] = to_ids(split_ws(src_lines[i]), jm.src_vocab);

  const auto entries = read_nbest(args.nbest);
  OutputStream out(args.output);

  // Process contiguous groups that share a sent_id, keeping file order.
  std::size_t pos = 0;
  while (pos < entries.size()) {
    std::size_t end = pos;
    while (end < entries.size() && entries[end].sent_id == entries[pos].sent_id) ++end;
    const std::size_t sent_id = entries[pos].sent_id;
    if (sent_id >= sources.size())
      throw std::runtime_error("rescore: sent_id " + std::to_string(sent_id) +
                               " out of range for " + std::to_string(sources.size()) +
                               " source sentences");
    std::vector<Hypothesis> candidates;
    for (std::size_t e = pos; e < end; ++e)
      candidates.push_back(hypothesis_from_nbest(entries[e], jm.tgt_vocab,
                                                 sources[sent_id].ids.size(), e + 1));
    const RescoreResult res =
        rescore_nbest(sources[sent_id], candidates, weights, jm, enc_ptr, mode);
    for (std::size_t rank = 0; rank < res.order.size(); ++rank) {
      const std::size_t c = res.order[rank];
      const NbestEntry& entry = entries[pos + c];
      std::string line = std::to_string(sent_id) + " |||";
      for (const auto& tok : entry.tokens) line += " " + tok;
      line += " |||";
      for (const auto& link : split_ws(entry.alignment_field)) line += " " + link;
      line += " ||| " + fmt("%.10g", res.nn_scores[c]);
      for (double f : entry.features) line += " " + fmt("%.10g", f);
      out.stream() << line << '\n';
    }
    pos = end;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval-retrieval

int run_eval_retrieval(const std::string& model_path, const std::string& src,
                       const std::string& tgt, std::size_t distractors, std::uint64_t seed) {
  require_file(model_path, "--model");
  require_file(src, "--src");
  require_file(tgt, "--tgt");
  const BilingualModel model = load_bilingual(model_path);
  const auto pairs = read_parallel(src, tgt, "", model.source.embeddings.vocab,
                                   model.target.embeddings.vocab);
  const double p1 = retrieval_eval(model, pairs, distractors, seed);
  std::cout << "p@1\t" << fmt("%.6f", p1) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gen-synthetic

struct GenArgs {
  std::string task = "dictionary";
  std::string out_prefix;
  std::uint64_t seed = 1;
  std::size_t vocab = 500, pairs = 2000, heldout = 200;
  std::size_t min_len = 8, max_len = 16;
  double alt_prob = 0.0;
  std::size_t filler_vocab = 40, amb_min_pos = 6;
};

int run_gen_synthetic(const GenArgs& args) {
  SyntheticData data;
  if (args.task == "dictionary") {
    DictionaryTaskConfig config;
    config.vocab = args.vocab;
    config.train_pairs = args.pairs;
    config.heldout_pairs = args.heldout;
    config.min_len = args.min_len;
    config.max_len = args.max_len;
    config.alt_translation_prob = args.alt_prob;
    config.seed = args.seed;
    data = gen_dictionary(config);
  } else {
    AmbiguousTaskConfig config;
    config.filler_vocab = args.filler_vocab;
    config.train_pairs = args.pairs;
    config.heldout_pairs = args.heldout;
    config.min_len = args.min_len;
    config.max_len = args.max_len;
    config.amb_min_pos = args.amb_min_pos;
    config.seed = args.seed;
    data = gen_ambiguous(config);
  }
  write_synthetic(data, args.out_prefix);
  std::cerr << "[bisenc] wrote " << args.out_prefix << ".{train,heldout}.{src,tgt,align}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilingual chunk-based sentence encoder and neural joint model toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "optional key=value config file; flags override it");

  // train-encoder -----------------------------------------------------------
  TrainEncoderArgs te;
  te.train.threads = default_threads();
  auto* cmd_te = app.add_subcommand("train-encoder",
                                    "train the bilingual sentence encoder on parallel text");
  cmd_te->add_option("--src", te.src, "source corpus, one sentence per line")->required();
  cmd_te->add_option("--tgt", te.tgt, "target corpus, parallel by line")->required();
  cmd_te->add_option("--output", te.output, "model snapshot to write")->required();
  cmd_te->add_option("--epoch-log", te.epoch_log, "write per-epoch statistics to this file");
  cmd_te->add_option("--src-embeddings", te.src_embeddings,
                     "word2vec text embeddings for the source side");
  cmd_te->add_option("--tgt-embeddings", te.tgt_embeddings,
                     "word2vec text embeddings for the target side");
  cmd_te->add_option("--save-src-vocab", te.save_src_vocab, "write the source vocabulary");
  cmd_te->add_option("--save-tgt-vocab", te.save_tgt_vocab, "write the target vocabulary");
  cmd_te->add_option("--src-vocab-size", te.src_vocab_size, "source vocabulary size");
  cmd_te->add_option("--tgt-vocab-size", te.tgt_vocab_size, "target vocabulary size");
  cmd_te->add_option("--embed-dim", te.embed_dim, "word embedding dimension");
  cmd_te->add_option("--window", te.window, "convolution window h");
  cmd_te->add_option("--filters", te.filters, "number of filters L");
  cmd_te->add_option("--chunks", te.chunks, "pooling chunks C (1 = max-over-time)");
  cmd_te->add_option("--out-dim", te.out_dim, "encoder output dimension");
  cmd_te->add_option("--dropout", te.dropout, "dropout rate after pooling");
  cmd_te->add_option("--margin", te.train.margin, "hinge margin");
  cmd_te->add_option("--lambda", te.train.lambda, "L2 weight");
  cmd_te->add_option("--lr", te.train.lr, "learning rate");
  cmd_te->add_option("--epochs", te.train.epochs, "training epochs");
  cmd_te->add_option("--batch", te.train.minibatch, "minibatch size");
  cmd_te->add_option("--negatives", te.train.negatives, "negatives per pair per epoch");
  cmd_te->add_option("--seed", te.train.seed, "random seed");
  cmd_te->add_flag("--symmetric-negatives", te.train.symmetric_negatives,
                   "also draw source-side negatives");
  cmd_te->add_option("--threads", te.train.threads, "worker threads");

  // train-nnjm --------------------------------------------------------------
  TrainNnjmArgs tn;
  tn.train.threads = default_threads();
  auto* cmd_tn = app.add_subcommand("train-nnjm", "train the neural joint model");
  cmd_tn->add_option("--src", tn.src, "source corpus")->required();
  cmd_tn->add_option("--tgt", tn.tgt, "target corpus")->required();
  cmd_tn->add_option("--align", tn.align, "Pharaoh alignments, parallel by line")->required();
  cmd_tn->add_option("--encoder", tn.encoder, "trained encoder snapshot")->required();
  cmd_tn->add_option("--output", tn.output, "model snapshot to write")->required();
  cmd_tn->add_option("--epoch-log", tn.epoch_log, "write per-epoch statistics to this file");
  cmd_tn->add_option("--save-tgt-vocab", tn.save_tgt_vocab, "write the target vocabulary");
  cmd_tn->add_option("--tgt-vocab-size", tn.tgt_vocab_size, "target vocabulary size");
  cmd_tn->add_option("--order", tn.order, "n-gram order n (n-1 history words)");
  cmd_tn->add_option("--ctx-window", tn.window, "source window m (odd)");
  cmd_tn->add_option("--hidden", tn.hidden, "hidden layer width");
  cmd_tn->add_option("--joint-embed-dim", tn.emb_dim, "input embedding dimension");
  cmd_tn->add_flag("--zero-sentence-vector", tn.zero_sentence_vec,
                   "feed zeros instead of the encoder sentence vector");
  cmd_tn->add_option("--kappa", tn.train.nce.num_noise, "NCE noise samples per example");
  cmd_tn->add_option("--noise-power", tn.train.nce.power, "unigram smoothing exponent");
  std::string tn_loss = "nce";
  cmd_tn->add_option("--loss", tn_loss, "training loss")
      ->check(CLI::IsMember({"nce", "softmax"}));
  cmd_tn->add_option("--lr", tn.train.lr, "learning rate");
  cmd_tn->add_option("--l2", tn.train.l2, "L2 weight");
  cmd_tn->add_option("--epochs", tn.train.epochs, "training epochs");
  cmd_tn->add_option("--batch", tn.train.minibatch, "minibatch size");
  cmd_tn->add_option("--seed", tn.train.seed, "random seed");
  cmd_tn->add_option("--threads", tn.train.threads, "worker threads");

  // embed ---------------------------------------------------------------
  std::string em_model, em_side = "source", em_input = "-", em_output;
  auto* cmd_em = app.add_subcommand("embed", "print one sentence vector per input line");
  cmd_em->add_option("--model", em_model, "encoder snapshot")->required();
  cmd_em->add_option("--side", em_side, "which tower to use")
      ->check(CLI::IsMember({"source", "target"}));
  cmd_em->add_option("--input", em_input, "input file ('-' for stdin)");
  cmd_em->add_option("--output", em_output, "output file (default stdout)");

  // score ---------------------------------------------------------------
  ScoreArgs sc;
  auto* cmd_sc = app.add_subcommand("score", "per-word joint-model log-probabilities");
  cmd_sc->add_option("--model", sc.model, "joint-model snapshot")->required();
  cmd_sc->add_option("--encoder", sc.encoder, "encoder snapshot (for the sentence vector)");
  cmd_sc->add_option("--src", sc.src, "source corpus")->required();
  cmd_sc->add_option("--tgt", sc.tgt, "target corpus")->required();
  cmd_sc->add_option("--align", sc.align, "alignments")->required();
  cmd_sc->add_option("--output", sc.output, "output file (default stdout)");
  cmd_sc->add_flag("--self-norm", sc.self_norm, "skip softmax normalization");

  // decode --------------------------------------------------------------
  DecodeArgs dc;
  auto* cmd_dc = app.add_subcommand("decode", "monotone phrase-based beam decoding");
  cmd_dc->add_option("--src", dc.src, "source sentences")->required();
  cmd_dc->add_option("--phrase-table", dc.phrase_table, "phrase table")->required();
  cmd_dc->add_option("--weights", dc.weights, "log-linear weights")->required();
  cmd_dc->add_option("--model", dc.model, "joint-model snapshot")->required();
  cmd_dc->add_option("--encoder", dc.encoder, "encoder snapshot");
  cmd_dc->add_option("--output", dc.output, "output file (default stdout)");
  cmd_dc->add_option("--alignment-out", dc.alignment_out, "write hypothesis alignments here");
  cmd_dc->add_option("--beam", dc.beam, "beam size");
  cmd_dc->add_flag("--self-norm", dc.self_norm, "skip softmax normalization");
  cmd_dc->add_flag("--no-unk-fallback", dc.no_unk_fallback,
                   "fail on uncovered words instead of passing them through");

  // rescore -------------------------------------------------------------
  RescoreArgs rs;
  auto* cmd_rs = app.add_subcommand("rescore", "rerank an n-best list");
  cmd_rs->add_option("--src", rs.src, "source sentences")->required();
  cmd_rs->add_option("--nbest", rs.nbest, "n-best list")->required();
  cmd_rs->add_option("--weights", rs.weights, "log-linear weights (nn, f1..fK)")->required();
  cmd_rs->add_option("--model", rs.model, "joint-model snapshot")->required();
  cmd_rs->add_option("--encoder", rs.encoder, "encoder snapshot");
  cmd_rs->add_option("--output", rs.output, "output file (default stdout)");
  cmd_rs->add_flag("--self-norm", rs.self_norm, "skip softmax normalization");

  // grad-check ----------------------------------------------------------
  std::uint64_t gc_seed = 1;
  auto* cmd_gc = app.add_subcommand("grad-check",
                                    "finite-difference verification of all gradients");
  cmd_gc->add_option("--seed", gc_seed, "random seed");

  // gen-synthetic ---------------------------------------------------------
  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-synthetic", "generate a synthetic bilingual corpus");
  cmd_gen->add_option("--task", gen.task, "corpus family")
      ->check(CLI::IsMember({"dictionary", "ambiguous"}));
  cmd_gen->add_option("--out-prefix", gen.out_prefix, "output path prefix")->required();
  cmd_gen->add_option("--seed", gen.seed, "random seed");
  cmd_gen->add_option("--vocab", gen.vocab, "dictionary vocabulary size per side");
  cmd_gen->add_option("--pairs", gen.pairs, "training pairs");
  cmd_gen->add_option("--heldout", gen.heldout, "held-out pairs");
  cmd_gen->add_option("--min-len", gen.min_len, "minimum sentence length");
  cmd_gen->add_option("--max-len", gen.max_len, "maximum sentence length");
  cmd_gen->add_option("--alt-prob", gen.alt_prob,
                      "probability of the alternative translation (dictionary)");
  cmd_gen->add_option("--filler-vocab", gen.filler_vocab, "filler vocabulary (ambiguous)");
  cmd_gen->add_option("--amb-min-pos", gen.amb_min_pos,
                      "minimum position of the ambiguous token (ambiguous)");

  // eval-retrieval --------------------------------------------------------
  std::string er_model, er_src, er_tgt;
  std::size_t er_distractors = 99;
  std::uint64_t er_seed = 1;
  auto* cmd_er = app.add_subcommand("eval-retrieval",
                                    "precision@1 of translation retrieval on held-out pairs");
  cmd_er->add_option("--model", er_model, "encoder snapshot")->required();
  cmd_er->add_option("--src", er_src, "held-out source sentences")->required();
  cmd_er->add_option("--tgt", er_tgt, "held-out target sentences")->required();
  cmd_er->add_option("--distractors", er_distractors, "distractors per query");
  cmd_er->add_option("--seed", er_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_te->parsed()) return run_train_encoder(te);
    if (cmd_tn->parsed()) {
      tn.train.loss = tn_loss == "softmax" ? JointLoss::kSoftmax : JointLoss::kNce;
      return run_train_nnjm(tn);
    }
    if (cmd_em->parsed()) return run_embed(em_model, em_side, em_input, em_output);
    if (cmd_sc->parsed()) return run_score(sc);
    if (cmd_dc->parsed()) return run_decode(dc);
    if (cmd_rs->parsed()) return run_rescore(rs);
    if (cmd_gc->parsed()) {
      const bool ok = run_all_gradient_checks(gc_seed, std::cout);
      return ok ? 0 : 1;
    }
    if (cmd_gen->parsed()) return run_gen_synthetic(gen);
    if (cmd_er->parsed())
      return run_eval_retrieval(er_model, er_src, er_tgt, er_distractors, er_seed);
  } catch (const UsageError& e) {
    std::cerr << "bisenc: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bisenc: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
