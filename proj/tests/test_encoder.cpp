#include "bisenc/encoder.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bisenc/gradcheck.hpp"

using namespace bisenc;
using Catch::Approx;

namespace {

Vocabulary words(std::size_t count) {
  Vocabulary v;
  for (std::size_t i = 0; i < count; ++i) v.add("w" + std::to_string(i), 1);
  return v;
}

// Independent chunker: materializes the chunk sizes directly and scans.
Vec brute_force_chunk_max(const Vec& y, std::size_t chunks) {
  std::vector<std::size_t> sizes(chunks, y.size() / chunks);
  sizes[chunks - 1] = y.size() - (chunks - 1) * (y.size() / chunks);
  Vec out;
  std::size_t pos = 0;
  for (std::size_t size : sizes) {
    double best = y[pos];
    for (std::size_t i = pos; i < pos + size; ++i) best = std::max(best, y[i]);
    out.push_back(best);
    pos += size;
  }
  return out;
}

// Single-filter single-chunk identity pipeline over scalar embeddings;
// handy for pinning exact gradient routing.
EncoderParams scalar_encoder(const Vec& embedding_values) {
  Vocabulary vocab = words(embedding_values.size());
  EncoderParams p;
  p.embeddings.vocab = vocab;
  p.embeddings.dim = 1;
  p.embeddings.table = Mat(vocab.size(), 1);
  for (std::size_t i = 0; i < embedding_values.size(); ++i)
    p.embeddings.table(Vocabulary::kNumReserved + i, 0) = embedding_values[i];
  p.conv.window = 1;
  p.conv.weights = Mat(1, 1, 1.0);
  p.conv.bias = Vec(1, 0.0);
  p.chunks = 1;
  p.fc1_w = Mat(1, 1, 1.0);
  p.fc1_b = Vec(1, 0.0);
  p.fc2_w = Mat(1, 1, 1.0);
  p.fc2_b = Vec(1, 0.0);
  p.proj_w = Mat(1, 1, 1.0);
  p.proj_b = Vec(1, 0.0);
  p.dropout = 0.0;
  return p;
}

}  // namespace

TEST_CASE("embed_sentence padding") {
  Rng rng(3);
  Vocabulary vocab = words(12);
  EmbeddingTable tab = random_embedding_table(vocab, 4, rng);

  SECTION("long enough sentence gets no padding") {
    SentenceIds s;
    for (std::size_t i = 0; i < 10; ++i) s.ids.push_back(Vocabulary::kNumReserved + i);
    const Mat x = embed_sentence(s, tab, 3, 4);
    REQUIRE(x.rows() == 10);
  }
  SECTION("short sentence padded to chunks + window - 1 with zero rows") {
    SentenceIds s{{4, 5}};
    const Mat x = embed_sentence(s, tab, 3, 4);
    REQUIRE(x.rows() == 6);
    for (std::size_t r = 2; r < 6; ++r)
      for (std::size_t c = 0; c < 4; ++c) REQUIRE(x(r, c) == 0.0);
    // real rows are the word vectors
    for (std::size_t c = 0; c < 4; ++c) REQUIRE(x(0, c) == tab.table(4, c));
  }
  SECTION("column count equals the embedding dim") {
    EmbeddingTable wide = random_embedding_table(vocab, 192, rng);
    SentenceIds s{{4, 5, 6}};
    REQUIRE(embed_sentence(s, wide, 3, 4).cols() == 192);
  }
}

TEST_CASE("convolve hand computations") {
  Mat x(4, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 2.0;
  x(2, 0) = 3.0;
  x(3, 0) = 4.0;
  ConvLayer conv;
  conv.window = 3;
  conv.weights = Mat(1, 3, 1.0);
  conv.bias = Vec(1, 0.0);

  SECTION("sliding sums") {
    const auto maps = convolve(x, conv);
    REQUIRE(maps.size() == 1);
    REQUIRE(maps[0] == Vec{6.0, 9.0});
  }
  SECTION("relu clamps") {
    conv.bias[0] = -100.0;
    const auto maps = convolve(x, conv);
    REQUIRE(maps[0] == Vec{0.0, 0.0});
  }
  SECTION("map length formula") {
    Mat x10(10, 1, 0.5);
    const auto maps = convolve(x10, conv);
    REQUIRE(maps[0].size() == 8);
  }
  SECTION("input shorter than the window rejected") {
    REQUIRE_THROWS_AS(convolve(Mat(2, 1), conv), std::invalid_argument);
  }
}

TEST_CASE("chunk_max_pool definition") {
  SECTION("even split") {
    const PoolResult r = chunk_max_pool({3, 1, 4, 1, 5, 9, 2, 6}, 4);
    REQUIRE(r.values == Vec{3, 4, 9, 6});
  }
  SECTION("one chunk equals max-over-time") {
    const PoolResult r = chunk_max_pool({5, 2, 7}, 1);
    REQUIRE(r.values == Vec{7});
  }
  SECTION("last chunk absorbs the modulus") {
    const PoolResult r = chunk_max_pool({1, 2, 3, 4, 5}, 2);
    REQUIRE(r.values == Vec{2, 5});
  }
  SECTION("shorter than the chunk count rejected") {
    REQUIRE_THROWS_AS(chunk_max_pool({1.0, 2.0}, 3), std::invalid_argument);
  }
  SECTION("ties keep the first index") {
    const PoolResult r = chunk_max_pool({7, 7, 7, 7}, 2);
    REQUIRE(r.argmax == std::vector<std::size_t>{0, 2});
  }
}

TEST_CASE("chunk_max_pool matches the brute-force oracle on 10^4 instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t chunks = 1 + rng.uniform_index(8);
    const std::size_t len = chunks + rng.uniform_index(40);
    Vec y(len);
    for (auto& v : y) v = rng.uniform(-5.0, 5.0);
    const PoolResult fast = chunk_max_pool(y, chunks);
    REQUIRE(fast.values == brute_force_chunk_max(y, chunks));
    // argmax indices land inside their chunk
    const auto bounds = chunk_bounds(len, chunks);
    std::size_t total = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      REQUIRE(fast.argmax[c] >= bounds[c].first);
      REQUIRE(fast.argmax[c] < bounds[c].second);
      total += bounds[c].second - bounds[c].first;
    }
    REQUIRE(total == len);
    // one chunk means the global max
    const PoolResult global = chunk_max_pool(y, 1);
    REQUIRE(global.values[0] == *std::max_element(y.begin(), y.end()));
  }
}

TEST_CASE("encoder_forward shapes and determinism") {
  Rng rng(8);
  Vocabulary vocab = words(10);
  EncoderParams params = EncoderParams::init(vocab, 192, 3, 100, 4, 192, 0.5, rng);
  SentenceIds s;
  for (std::size_t i = 0; i < 10; ++i) s.ids.push_back(Vocabulary::kNumReserved + i);

  SECTION("pooled length L*C and output length out_dim") {
    const auto res = encoder_forward(s, params, RunMode::kInfer);
    REQUIRE(res.trace.pooled.size() == 400);
    REQUIRE(res.output.size() == 192);
  }
  SECTION("infer mode is deterministic") {
    const auto a = encoder_forward(s, params, RunMode::kInfer);
    const auto b = encoder_forward(s, params, RunMode::kInfer);
    REQUIRE(a.output == b.output);
  }
  SECTION("dropout zero in train mode equals infer mode") {
    params.dropout = 0.0;
    Rng train_rng(5);
    const auto a = encoder_forward(s, params, RunMode::kTrain, &train_rng);
    const auto b = encoder_forward(s, params, RunMode::kInfer);
    REQUIRE(a.output == b.output);
  }
  SECTION("train mode with dropout needs an rng") {
    REQUIRE_THROWS_AS(encoder_forward(s, params, RunMode::kTrain, nullptr),
                      std::invalid_argument);
  }
}

TEST_CASE("project_shared") {
  Rng rng(9);
  Vocabulary vocab = words(6);
  EncoderParams params = EncoderParams::init(vocab, 4, 3, 3, 2, 5, 0.0, rng);

  SECTION("identity weights pass non-negative vectors through") {
    params.proj_w = Mat(5, 5);
    for (std::size_t i = 0; i < 5; ++i) params.proj_w(i, i) = 1.0;
    params.proj_b = Vec(5, 0.0);
    const Vec o{0.5, 0.0, 1.5, 2.0, 0.25};
    REQUIRE(project_shared(o, params) == o);
  }
  SECTION("negative pre-activations are zeroed") {
    params.proj_w = Mat(5, 5);
    for (std::size_t i = 0; i < 5; ++i) params.proj_w(i, i) = 1.0;
    params.proj_b = Vec(5, 0.0);
    params.proj_b[2] = -100.0;
    const Vec out = project_shared({1.0, 1.0, 1.0, 1.0, 1.0}, params);
    REQUIRE(out[2] == 0.0);
    REQUIRE(out[0] == 1.0);
  }
  SECTION("output length equals out_dim") {
    const Vec out = project_shared(Vec(5, 0.3), params);
    REQUIRE(out.size() == 5);
  }
}

TEST_CASE("encoder backward") {
  SECTION("zero upstream gradient gives zero everywhere") {
    Rng rng(10);
    Vocabulary vocab = words(8);
    EncoderParams params = EncoderParams::init(vocab, 4, 3, 3, 2, 5, 0.0, rng);
    SentenceIds s{{4, 5, 6, 7, 8}};
    const auto res = encode_projected(s, params, RunMode::kInfer);
    EncoderGrads grads = EncoderGrads::zeros_like(params);
    encoder_backward(params, res.trace, Vec(5, 0.0), grads);
    for (auto& view : grads.param_views())
      for (std::size_t i = 0; i < view.size; ++i) REQUIRE(view.data[i] == 0.0);
  }

  SECTION("non-argmax positions receive no gradient") {
    EncoderParams params = scalar_encoder({2.0, 1.0});
    SentenceIds s{{4, 5}};  // values 2.0 and 1.0; max picks position 0
    const auto res = encode_projected(s, params, RunMode::kInfer);
    EncoderGrads grads = EncoderGrads::zeros_like(params);
    encoder_backward(params, res.trace, Vec{1.0}, grads);
    REQUIRE(grads.embeddings(4, 0) != 0.0);
    REQUIRE(grads.embeddings(5, 0) == 0.0);
  }

  SECTION("trace/parameter mismatch rejected") {
    Rng rng(11);
    Vocabulary vocab = words(8);
    EncoderParams params = EncoderParams::init(vocab, 4, 3, 3, 2, 5, 0.0, rng);
    SentenceIds s{{4, 5, 6, 7, 8}};
    const auto res = encode_projected(s, params, RunMode::kInfer);
    EncoderGrads grads = EncoderGrads::zeros_like(params);
    REQUIRE_THROWS_AS(encoder_backward(params, res.trace, Vec(4, 0.0), grads),
                      std::invalid_argument);
    EncoderParams other = EncoderParams::init(vocab, 4, 3, 5, 2, 5, 0.0, rng);
    REQUIRE_THROWS_AS(encoder_backward(other, res.trace, Vec(5, 0.0), grads),
                      std::invalid_argument);
  }

  SECTION("gradient entering at O skips the projection group") {
    Rng rng(12);
    Vocabulary vocab = words(8);
    EncoderParams params = EncoderParams::init(vocab, 4, 3, 3, 2, 5, 0.0, rng);
    SentenceIds s{{4, 5, 6, 7, 8}};
    const auto res = encoder_forward(s, params, RunMode::kInfer);
    EncoderGrads grads = EncoderGrads::zeros_like(params);
    encoder_backward_from_output(params, res.trace, Vec(5, 1.0), grads);
    for (std::size_t i = 0; i < grads.proj_w.size(); ++i)
      REQUIRE(grads.proj_w.data()[i] == 0.0);
    // and a backward from O' on a projection-free trace is rejected
    REQUIRE_THROWS_AS(encoder_backward(params, res.trace, Vec(5, 1.0), grads),
                      std::invalid_argument);
  }
}

TEST_CASE("encoder finite-difference gradient check") {
  const GradCheckReport report = check_encoder_gradients(314159);
  CAPTURE(report.title);
  for (const auto& group : report.groups) {
    CAPTURE(group.group, group.max_rel_err);
    REQUIRE(group.pass);
  }
  REQUIRE(report.all_pass);
  // every parameter family shows up
  REQUIRE(report.groups.size() == 9);
}

TEST_CASE("encoder snapshot round trip is bit-exact") {
  Rng rng(13);
  Vocabulary vocab = words(9);
  EncoderParams params = EncoderParams::init(vocab, 6, 3, 4, 2, 7, 0.25, rng);
  const std::string path_a = "encoder_test_a.bsnc";
  const std::string path_b = "encoder_test_b.bsnc";
  save_encoder(params, path_a);
  EncoderParams loaded = load_encoder(path_a);
  save_encoder(loaded, path_b);

  std::ifstream a(path_a, std::ios::binary), b(path_b, std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  REQUIRE(sa.str() == sb.str());
  REQUIRE(loaded.embeddings.table == params.embeddings.table);
  REQUIRE(loaded.conv.weights == params.conv.weights);
  REQUIRE(loaded.chunks == params.chunks);
  REQUIRE(loaded.dropout == params.dropout);
  REQUIRE(loaded.embeddings.vocab.size() == params.embeddings.vocab.size());
  for (WordId id = 0; id < params.embeddings.vocab.size(); ++id)
    REQUIRE(loaded.embeddings.vocab.word(id) == params.embeddings.vocab.word(id));

  // a sentence encodes identically through the reloaded model
  SentenceIds s{{4, 5, 6, 7, 8}};
  REQUIRE(encoder_forward(s, params, RunMode::kInfer).output ==
          encoder_forward(s, loaded, RunMode::kInfer).output);

  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}
