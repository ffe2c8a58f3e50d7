#include "bisenc/bilingual.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bisenc/gradcheck.hpp"
#include "bisenc/synthetic.hpp"

using namespace bisenc;
using Catch::Approx;

namespace {

Vocabulary words(char prefix, std::size_t count) {
  Vocabulary v;
  for (std::size_t i = 0; i < count; ++i) v.add(prefix + std::to_string(i), 1);
  return v;
}

// Two-dimensional pass-through encoder: h=1, two indicator filters, C=1 and
// identity heads, so a one-word sentence encodes to its own embedding
// (component-wise relu). Lets tests pin similarities exactly.
EncoderParams passthrough_encoder(const Vocabulary& vocab,
                                  const std::vector<std::pair<double, double>>& rows) {
  EncoderParams p;
  p.embeddings.vocab = vocab;
  p.embeddings.dim = 2;
  p.embeddings.table = Mat(vocab.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.embeddings.table(Vocabulary::kNumReserved + i, 0) = rows[i].first;
    p.embeddings.table(Vocabulary::kNumReserved + i, 1) = rows[i].second;
  }
  p.conv.window = 1;
  p.conv.weights = Mat(2, 2);
  p.conv.weights(0, 0) = 1.0;
  p.conv.weights(1, 1) = 1.0;
  p.conv.bias = Vec(2, 0.0);
  p.chunks = 1;
  p.fc1_w = Mat(2, 2);
  p.fc1_w(0, 0) = p.fc1_w(1, 1) = 1.0;
  p.fc1_b = Vec(2, 0.0);
  p.fc2_w = p.fc1_w;
  p.fc2_b = Vec(2, 0.0);
  p.proj_w = p.fc1_w;
  p.proj_b = Vec(2, 0.0);
  p.dropout = 0.0;
  return p;
}

ParallelExample pair_of(std::vector<WordId> f, std::vector<WordId> e) {
  ParallelExample ex;
  ex.source.ids = std::move(f);
  ex.target.ids = std::move(e);
  return ex;
}

std::vector<ParallelExample> dictionary_corpus(std::size_t vocab, std::size_t pairs,
                                               std::uint64_t seed, Vocabulary& src_vocab,
                                               Vocabulary& tgt_vocab) {
  DictionaryTaskConfig config;
  config.vocab = vocab;
  config.train_pairs = pairs;
  config.heldout_pairs = 0;
  config.min_len = 4;
  config.max_len = 9;
  config.seed = seed;
  const SyntheticData data = gen_dictionary(config);
  std::stringstream src_text, tgt_text;
  for (const auto& line : data.train.src) src_text << line << '\n';
  for (const auto& line : data.train.tgt) tgt_text << line << '\n';
  src_vocab = build_vocab(count_tokens(src_text), vocab);
  tgt_vocab = build_vocab(count_tokens(tgt_text), vocab);

  std::vector<ParallelExample> corpus;
  for (std::size_t i = 0; i < data.train.src.size(); ++i) {
    corpus.push_back(pair_of(to_ids(split_ws(data.train.src[i]), src_vocab).ids,
                             to_ids(split_ws(data.train.tgt[i]), tgt_vocab).ids));
  }
  return corpus;
}

}  // namespace

TEST_CASE("similarity is the dot product") {
  REQUIRE(similarity({1.0, 0.0}, {0.0, 1.0}) == 0.0);
  REQUIRE(similarity({1.0, 2.0}, {1.0, 2.0}) == 5.0);
  REQUIRE(similarity({1.0, 2.0}, {3.0, -1.0}) == similarity({3.0, -1.0}, {1.0, 2.0}));
  REQUIRE_THROWS_AS(similarity({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("hinge_loss algebra") {
  REQUIRE(hinge_loss(2.0, 0.5, 1.0) == 0.0);
  REQUIRE(hinge_loss(0.7, 0.7, 1.0) == 1.0);
  REQUIRE(hinge_loss(0.2, 0.6, 1.0) == Approx(1.4));
  REQUIRE_THROWS_AS(hinge_loss(1.0, 1.0, 0.0), std::invalid_argument);

  SECTION("non-negative, zero exactly when the margin is met") {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const double pos = rng.uniform(-3.0, 3.0);
      const double neg = rng.uniform(-3.0, 3.0);
      const double margin = rng.uniform(0.1, 2.0);
      const double loss = hinge_loss(pos, neg, margin);
      REQUIRE(loss >= 0.0);
      REQUIRE((loss == 0.0) == (pos - neg >= margin));
    }
  }
}

TEST_CASE("sample_negative") {
  SECTION("two-sentence corpus always picks the other one") {
    std::vector<ParallelExample> corpus{pair_of({4}, {4}), pair_of({5}, {5})};
    Rng rng(1);
    for (int i = 0; i < 20; ++i) REQUIRE(sample_negative(0, corpus, rng) == 1);
  }
  SECTION("10^4 draws over 10 sentences stay within 3 sigma of uniform") {
    std::vector<ParallelExample> corpus;
    for (WordId w = 0; w < 10; ++w) corpus.push_back(pair_of({w + 4}, {w + 4}));
    Rng rng(99);
    std::vector<std::size_t> counts(10, 0);
    const std::size_t draws = 10000;
    for (std::size_t i = 0; i < draws; ++i) ++counts[sample_negative(3, corpus, rng)];
    REQUIRE(counts[3] == 0);
    const double expected = static_cast<double>(draws) / 9.0;
    const double sigma = std::sqrt(static_cast<double>(draws) * (1.0 / 9.0) * (8.0 / 9.0));
    for (std::size_t j = 0; j < 10; ++j) {
      if (j == 3) continue;
      REQUIRE(std::abs(static_cast<double>(counts[j]) - expected) < 3.0 * sigma);
    }
  }
  SECTION("duplicate surface forms are never returned") {
    std::vector<ParallelExample> corpus{pair_of({4}, {4, 5}), pair_of({5}, {4, 5}),
                                        pair_of({6}, {6})};
    Rng rng(7);
    for (int i = 0; i < 50; ++i) REQUIRE(sample_negative(0, corpus, rng) == 2);
  }
  SECTION("degenerate corpora rejected") {
    std::vector<ParallelExample> one{pair_of({4}, {4})};
    Rng rng(1);
    REQUIRE_THROWS_AS(sample_negative(0, one, rng), std::invalid_argument);
    std::vector<ParallelExample> same{pair_of({4}, {4}), pair_of({5}, {4})};
    REQUIRE_THROWS_AS(sample_negative(0, same, rng), std::invalid_argument);
  }
}

TEST_CASE("corpus_objective") {
  // a0 <-> p0 and a1 <-> p1 with orthogonal, well separated encodings
  Vocabulary sv = words('a', 2), tv = words('p', 2);
  BilingualModel model;
  model.source = passthrough_encoder(sv, {{4.0, 0.0}, {0.0, 4.0}});
  model.target = passthrough_encoder(tv, {{4.0, 0.0}, {0.0, 4.0}});
  std::vector<ParallelExample> corpus{pair_of({4}, {4}), pair_of({5}, {5})};
  TrainConfig config;
  config.margin = 1.0;

  SECTION("all margins satisfied and lambda zero gives zero") {
    config.lambda = 0.0;
    REQUIRE(corpus_objective(model, corpus, config) == 0.0);
  }
  SECTION("single pair mean equals that pair's loss") {
    config.lambda = 0.0;
    std::vector<ParallelExample> single{pair_of({4}, {4})};
    // sim_pos = 16; explicit negative with sim_neg = 16.4 gives hinge 1.4
    Vocabulary tv2 = words('p', 3);
    model.target = passthrough_encoder(tv2, {{4.0, 0.0}, {0.0, 4.0}, {4.1, 0.0}});
    const std::vector<SentenceIds> negatives{SentenceIds{{6}}};
    REQUIRE(corpus_objective(model, single, config, &negatives) == Approx(1.4));
  }
  SECTION("zero parameters leave only the margin, L2 term vanishes") {
    BilingualModel zero;
    zero.source = passthrough_encoder(sv, {{0.0, 0.0}, {0.0, 0.0}});
    zero.target = passthrough_encoder(tv, {{0.0, 0.0}, {0.0, 0.0}});
    for (auto& view : zero.source.param_views())
      for (std::size_t i = 0; i < view.size; ++i) view.data[i] = 0.0;
    for (auto& view : zero.target.param_views())
      for (std::size_t i = 0; i < view.size; ++i) view.data[i] = 0.0;
    config.lambda = 10.0;
    REQUIRE(corpus_objective(zero, corpus, config) == Approx(1.0));  // hinge = margin
  }
  SECTION("invariant under pair reordering") {
    Vocabulary sv4 = words('a', 4), tv4 = words('p', 4);
    BilingualModel m4;
    Rng rng(21);
    m4.source = EncoderParams::init(sv4, 3, 2, 2, 1, 3, 0.0, rng);
    m4.target = EncoderParams::init(tv4, 3, 2, 2, 1, 3, 0.0, rng);
    std::vector<ParallelExample> pairs{pair_of({4, 5}, {4, 5}), pair_of({5, 6}, {5, 6}),
                                       pair_of({6, 7}, {6, 7}), pair_of({7, 4}, {7, 4})};
    config.lambda = 1e-3;
    const double before = corpus_objective(m4, pairs, config);
    std::vector<ParallelExample> shuffled{pairs[2], pairs[0], pairs[3], pairs[1]};
    REQUIRE(corpus_objective(m4, shuffled, config) == Approx(before).margin(1e-12));
  }
  SECTION("empty corpus rejected") {
    REQUIRE_THROWS_AS(corpus_objective(model, {}, config), std::invalid_argument);
  }
}

TEST_CASE("bilingual hinge gradients match finite differences") {
  const GradCheckReport report = check_bilingual_gradients(2718);
  for (const auto& group : report.groups) {
    CAPTURE(group.group, group.max_rel_err);
    REQUIRE(group.pass);
  }
  REQUIRE(report.groups.size() == 18);  // both towers, every family
}

TEST_CASE("retrieval_eval") {
  Vocabulary sv = words('a', 2), tv = words('p', 2);
  BilingualModel model;
  model.source = passthrough_encoder(sv, {{4.0, 0.0}, {0.0, 4.0}});
  model.target = passthrough_encoder(tv, {{4.0, 0.0}, {0.0, 4.0}});
  std::vector<ParallelExample> pairs{pair_of({4}, {4}), pair_of({5}, {5})};

  SECTION("zero distractors give precision 1") {
    REQUIRE(retrieval_eval(model, pairs, 0, 1) == 1.0);
  }
  SECTION("separable encodings give precision 1") {
    REQUIRE(retrieval_eval(model, pairs, 1, 1) == 1.0);
  }
  SECTION("precision invariant under a positive scaling of all similarities") {
    Vocabulary sv8 = words('a', 8), tv8 = words('p', 8);
    Rng rng(50);
    BilingualModel a;
    a.source = EncoderParams::init(sv8, 3, 2, 2, 1, 3, 0.0, rng);
    a.target = EncoderParams::init(tv8, 3, 2, 2, 1, 3, 0.0, rng);
    std::vector<ParallelExample> held;
    for (WordId w = 0; w < 8; ++w) held.push_back(pair_of({w + 4, (w + 1) % 8 + 4}, {w + 4}));
    const double base = retrieval_eval(a, held, 5, 7);
    // scaling every source projection weight by c > 0 multiplies every
    // similarity by the same c, a strictly increasing transform
    BilingualModel b = a;
    for (auto& view : b.source.param_views()) {
      if (view.name != "proj.w") continue;
      for (std::size_t i = 0; i < view.size; ++i) view.data[i] *= 3.0;
    }
    REQUIRE(retrieval_eval(b, held, 5, 7) == base);
  }
}

TEST_CASE("train_bilingual") {
  SECTION("margin-satisfied corpus leaves parameters unchanged except L2 decay") {
    Vocabulary sv = words('a', 2), tv = words('p', 2);
    BilingualModel model;
    model.source = passthrough_encoder(sv, {{4.0, 0.0}, {0.0, 4.0}});
    model.target = passthrough_encoder(tv, {{4.0, 0.0}, {0.0, 4.0}});
    std::vector<ParallelExample> corpus{pair_of({4}, {4}), pair_of({5}, {5})};
    TrainConfig config;
    config.epochs = 1;
    config.lr = 0.1;
    config.lambda = 0.0;
    config.minibatch = 2;
    config.heldout_fraction = 0.0;
    const Mat before = model.source.embeddings.table;
    train_bilingual(model, corpus, config);
    REQUIRE(model.source.embeddings.table == before);

    // with lambda > 0 each minibatch shrinks weights by lr*lambda
    config.lambda = 0.5;
    const double w = model.source.conv.weights(0, 0);
    train_bilingual(model, corpus, config);
    REQUIRE(model.source.conv.weights(0, 0) == Approx(w * (1.0 - 0.1 * 0.5)));
  }

  SECTION("objective decreases on a synthetic dictionary corpus") {
    Vocabulary sv, tv;
    const auto corpus = dictionary_corpus(30, 120, 5, sv, tv);
    BilingualModel model;
    Rng rng(17);
    model.source = EncoderParams::init(sv, 8, 3, 4, 2, 8, 0.0, rng);
    model.target = EncoderParams::init(tv, 8, 3, 4, 2, 8, 0.0, rng);
    TrainConfig config;
    config.epochs = 5;
    config.lr = 0.02;
    config.lambda = 0.0;
    config.minibatch = 8;
    config.seed = 11;
    const std::size_t train_count =
        corpus.size() - static_cast<std::size_t>(corpus.size() * config.heldout_fraction);
    const double initial = corpus_objective(
        model, std::vector<ParallelExample>(corpus.begin(), corpus.begin() + train_count),
        config);
    const auto log = train_bilingual(model, corpus, config);
    REQUIRE(log.size() == 5);
    // smoothed (two-epoch mean) objective never increases
    std::vector<double> smoothed;
    smoothed.push_back((initial + log[0].train_objective) / 2.0);
    for (std::size_t e = 1; e < log.size(); ++e)
      smoothed.push_back((log[e - 1].train_objective + log[e].train_objective) / 2.0);
    for (std::size_t e = 1; e < smoothed.size(); ++e)
      REQUIRE(smoothed[e] <= smoothed[e - 1] + 1e-9);
  }

  SECTION("same seed twice gives bit-identical snapshots") {
    Vocabulary sv, tv;
    const auto corpus = dictionary_corpus(20, 40, 8, sv, tv);
    TrainConfig config;
    config.epochs = 2;
    config.lr = 0.05;
    config.seed = 123;
    config.minibatch = 8;

    auto run = [&](const std::string& path) {
      BilingualModel model;
      Rng rng(9);
      model.source = EncoderParams::init(sv, 6, 3, 3, 2, 6, 0.5, rng);
      model.target = EncoderParams::init(tv, 6, 3, 3, 2, 6, 0.5, rng);
      train_bilingual(model, corpus, config);
      save_bilingual(model, path);
    };
    run("bi_run_a.bsnc");
    run("bi_run_b.bsnc");
    std::ifstream a("bi_run_a.bsnc", std::ios::binary), b("bi_run_b.bsnc", std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    REQUIRE(sa.str() == sb.str());
    REQUIRE(sa.str().size() > 0);
    std::remove("bi_run_a.bsnc");
    std::remove("bi_run_b.bsnc");
  }

  SECTION("epoch log format") {
    EpochStats stats{3, 1.25, 2.5, 0.75};
    std::ostringstream out;
    format_epoch_line(out, stats);
    REQUIRE(out.str() == "3\t1.250000\t2.500000\t0.7500\n");
  }
}
