#include "bisenc/corpus.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace bisenc;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("corpus_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("vocabulary reserves fixed ids") {
  Vocabulary v;
  REQUIRE(v.size() == 4);
  REQUIRE(v.word(Vocabulary::kUnk) == "<unk>");
  REQUIRE(v.word(Vocabulary::kPad) == "<pad>");
  REQUIRE(v.word(Vocabulary::kBos) == "<s>");
  REQUIRE(v.word(Vocabulary::kEos) == "</s>");
  REQUIRE(v.id_or_unk("missing") == Vocabulary::kUnk);
}

TEST_CASE("build_vocab ordering") {
  SECTION("frequency order") {
    std::istringstream in("a a b");
    const Vocabulary v = build_vocab(count_tokens(in), 10);
    REQUIRE(v.size() == 6);
    REQUIRE(*v.find("a") < *v.find("b"));
  }
  SECTION("lexicographic tie-break") {
    std::istringstream in("b a");
    const Vocabulary v = build_vocab(count_tokens(in), 5);
    REQUIRE(*v.find("a") < *v.find("b"));
  }
  SECTION("truncation at max size with reserved on top") {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < 50000; ++i)
      counts["type" + std::to_string(i)] = 1 + (i % 97);
    const Vocabulary v = build_vocab(counts, 16000);
    REQUIRE(v.size() == 16004);
  }
  SECTION("empty corpus rejected") {
    REQUIRE_THROWS_AS(build_vocab({}, 10), std::invalid_argument);
  }
}

TEST_CASE("vocab file round trip is byte-identical and deterministic") {
  std::istringstream in("the cat sat on the mat the cat");
  const Vocabulary v = build_vocab(count_tokens(in), 100);
  const std::string path_a = temp_path("vocab_a.txt");
  const std::string path_b = temp_path("vocab_b.txt");
  save_vocab(v, path_a);
  std::istringstream in2("the cat sat on the mat the cat");
  save_vocab(build_vocab(count_tokens(in2), 100), path_b);
  REQUIRE(read_file(path_a) == read_file(path_b));

  const Vocabulary loaded = load_vocab(path_a);
  REQUIRE(loaded == v);
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("ids to words round trip for in-vocab sentences") {
  std::istringstream in("alpha beta gamma delta");
  const Vocabulary v = build_vocab(count_tokens(in), 100);
  const std::vector<std::string> tokens{"gamma", "alpha", "delta"};
  const SentenceIds ids = to_ids(tokens, v);
  REQUIRE(to_words(ids, v) == tokens);
  REQUIRE(to_ids(to_words(ids, v), v).ids == ids.ids);
}

TEST_CASE("alignment parsing") {
  SECTION("pharaoh pairs") {
    const AlignmentLinks links = parse_alignment_line("0-0 1-2", 3, 3, 1);
    REQUIRE(links.links ==
            std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 0}, {1, 2}});
  }
  SECTION("out-of-range source rejected") {
    REQUIRE_THROWS_WITH(parse_alignment_line("5-0", 3, 2, 7),
                        Catch::Matchers::ContainsSubstring("line 7"));
  }
  SECTION("empty line gives empty set") {
    REQUIRE(parse_alignment_line("", 4, 4, 1).empty());
  }
  SECTION("malformed link rejected") {
    REQUIRE_THROWS_AS(parse_alignment_line("1_2", 4, 4, 1), std::runtime_error);
    REQUIRE_THROWS_AS(parse_alignment_line("a-1", 4, 4, 1), std::runtime_error);
    REQUIRE_THROWS_AS(parse_alignment_line("1-", 4, 4, 1), std::runtime_error);
  }
}

TEST_CASE("read_parallel") {
  const std::string src = temp_path("par.src");
  const std::string tgt = temp_path("par.tgt");
  const std::string align = temp_path("par.align");
  write_file(src, "a b c\nd e\n");
  write_file(tgt, "x y\nz w v\n");

  std::istringstream sin("a b c d e");
  const Vocabulary sv = build_vocab(count_tokens(sin), 100);
  std::istringstream tin("x y z w v");
  const Vocabulary tv = build_vocab(count_tokens(tin), 100);

  SECTION("without alignment") {
    const auto pairs = read_parallel(src, tgt, "", sv, tv);
    REQUIRE(pairs.size() == 2);
    REQUIRE_FALSE(pairs[0].has_alignment);
    REQUIRE(pairs[0].source.ids.size() == 3);
    REQUIRE(pairs[1].target.ids.size() == 3);
  }
  SECTION("with alignment") {
    write_file(align, "0-0 2-1\n\n");
    const auto pairs = read_parallel(src, tgt, align, sv, tv);
    REQUIRE(pairs[0].alignment.links.size() == 2);
    REQUIRE(pairs[1].alignment.links.empty());
    REQUIRE(pairs[1].has_alignment);
  }
  SECTION("line count mismatch rejected") {
    const std::string tgt_short = temp_path("par_short.tgt");
    write_file(tgt_short, "x y\n");
    REQUIRE_THROWS_WITH(read_parallel(src, tgt_short, "", sv, tv),
                        Catch::Matchers::ContainsSubstring("line 2"));
    std::remove(tgt_short.c_str());
  }
  SECTION("unknown words map to <unk>") {
    const std::string src2 = temp_path("par2.src");
    write_file(src2, "a mystery c\nd e\n");
    const auto pairs = read_parallel(src2, tgt, "", sv, tv);
    REQUIRE(pairs[0].source.ids[1] == Vocabulary::kUnk);
    std::remove(src2.c_str());
  }
  std::remove(src.c_str());
  std::remove(tgt.c_str());
  std::remove(align.c_str());
}

TEST_CASE("word2vec text loading") {
  std::istringstream vin("alpha beta gamma");
  const Vocabulary v = build_vocab(count_tokens(vin), 100);
  const std::string path = temp_path("emb.txt");

  SECTION("accepts matching dims, copies rows, randomizes the rest") {
    write_file(path, "2 3\nalpha 1 2 3\ngamma -1 0.5 0\n");
    Rng rng(4);
    const EmbeddingTable tab = load_word2vec_text(path, v, 3, rng);
    REQUIRE(tab.dim == 3);
    REQUIRE(tab.table.rows() == v.size());
    const double* row = tab.table.row(*v.find("alpha"));
    REQUIRE(row[0] == 1.0);
    REQUIRE(row[1] == 2.0);
    REQUIRE(row[2] == 3.0);
    // beta is absent from the file: randomly initialized within the row bound
    const double bound = std::sqrt(6.0 / 4.0);
    const double* beta = tab.table.row(*v.find("beta"));
    for (int d = 0; d < 3; ++d) REQUIRE(std::abs(beta[d]) <= bound);
  }
  SECTION("dim mismatch rejected") {
    write_file(path, "1 100\nalpha 1 2 3\n");
    Rng rng(4);
    REQUIRE_THROWS_WITH(load_word2vec_text(path, v, 192, rng),
                        Catch::Matchers::ContainsSubstring(":1"));
  }
  SECTION("malformed line rejected with its number") {
    write_file(path, "2 3\nalpha 1 2 3\ngamma 1 2\n");
    Rng rng(4);
    REQUIRE_THROWS_WITH(load_word2vec_text(path, v, 3, rng),
                        Catch::Matchers::ContainsSubstring(":3"));
  }
  SECTION("repeated word keeps the last occurrence") {
    write_file(path, "2 2\nalpha 1 1\nalpha 9 9\n");
    Rng rng(4);
    const EmbeddingTable tab = load_word2vec_text(path, v, 2, rng);
    REQUIRE(tab.table.row(*v.find("alpha"))[0] == 9.0);
  }
  std::remove(path.c_str());
}
