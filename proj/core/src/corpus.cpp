#include "bisenc/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace bisenc {

namespace {

const char* kReservedWords[Vocabulary::kNumReserved] = {"<unk>", "<pad>", "<s>", "</s>"};

std::runtime_error file_error(const std::string& path, const std::string& what) {
  return std::runtime_error(path + ": " + what);
}

std::runtime_error line_error(const std::string& path, std::size_t line_no,
                              const std::string& what) {
  return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Vocabulary::Vocabulary() {
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    words_.emplace_back(kReservedWords[i]);
    freq_.push_back(0);
    index_.emplace(kReservedWords[i], static_cast<WordId>(i));
  }
}

const std::string& Vocabulary::word(WordId id) const {
  if (id >= words_.size()) throw std::out_of_range("Vocabulary::word: id out of range");
  return words_[id];
}

std::optional<WordId> Vocabulary::find(std::string_view w) const {
  auto it = index_.find(std::string(w));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::id_or_unk(std::string_view w) const {
  auto id = find(w);
  return id ? *id : kUnk;
}

WordId Vocabulary::add(const std::string& w, std::uint64_t freq) {
  auto it = index_.find(w);
  if (it != index_.end()) throw std::invalid_argument("Vocabulary::add: duplicate word " + w);
  const auto id = static_cast<WordId>(words_.size());
  words_.push_back(w);
  freq_.push_back(freq);
  index_.emplace(w, id);
  return id;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::unordered_map<std::string, std::uint64_t> count_tokens(std::istream& in) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : split_ws(line)) ++counts[tok];
  }
  return counts;
}

Vocabulary build_vocab(const std::unordered_map<std::string, std::uint64_t>& counts,
                       std::size_t max_size) {
  Vocabulary vocab;
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  entries.reserve(counts.size());
  for (const auto& [word, freq] : counts) {
    if (vocab.find(word)) continue;  // reserved literals never re-enter
    entries.emplace_back(word, freq);
  }
  if (entries.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > max_size) entries.resize(max_size);
  for (const auto& [word, freq] : entries) vocab.add(word, freq);
  return vocab;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw file_error(path, "cannot open for writing");
  for (WordId id = Vocabulary::kNumReserved; id < vocab.size(); ++id) {
    out << vocab.word(id) << '\t' << vocab.frequency(id) << '\n';
  }
  if (!out) throw file_error(path, "write failed");
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw file_error(path, "cannot open");
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw line_error(path, line_no, "expected word<TAB>frequency");
    std::uint64_t freq = 0;
    try {
      freq = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw line_error(path, line_no, "bad frequency field");
    }
    vocab.add(line.substr(0, tab), freq);
  }
  return vocab;
}

SentenceIds to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  SentenceIds s;
  s.ids.reserve(tokens.size());
  for (const auto& tok : tokens) s.ids.push_back(vocab.id_or_unk(tok));
  return s;
}

std::vector<std::string> to_words(const SentenceIds& sentence, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(sentence.ids.size());
  for (WordId id : sentence.ids) out.push_back(vocab.word(id));
  return out;
}

AlignmentLinks parse_alignment_line(std::string_view line, std::size_t src_len,
                                    std::size_t tgt_len, std::size_t line_no) {
  AlignmentLinks out;
  for (const auto& tok : split_ws(line)) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == tok.size())
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad alignment link '" +
                               tok + "'");
    std::size_t i = 0, j = 0;
    try {
      std::size_t pos = 0;
      i = std::stoul(tok.substr(0, dash), &pos);
      if (pos != dash) throw std::invalid_argument("trailing");
      j = std::stoul(tok.substr(dash + 1), &pos);
      if (pos != tok.size() - dash - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": bad alignment link '" +
                               tok + "'");
    }
    if (i >= src_len || j >= tgt_len)
      throw std::runtime_error("line " + std::to_string(line_no) + ": link " + tok +
                               " out of range for lengths " + std::to_string(src_len) + "/" +
                               std::to_string(tgt_len));
    out.links.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  }
  std::sort(out.links.begin(), out.links.end());
  out.links.erase(std::unique(out.links.begin(), out.links.end()), out.links.end());
  return out;
}

std::vector<ParallelExample> read_parallel(const std::string& src_path,
                                           const std::string& tgt_path,
                                           const std::string& align_path,
                                           const Vocabulary& src_vocab,
                                           const Vocabulary& tgt_vocab) {
  std::ifstream src_in(src_path, std::ios::binary);
  if (!src_in) throw file_error(src_path, "cannot open");
  std::ifstream tgt_in(tgt_path, std::ios::binary);
  if (!tgt_in) throw file_error(tgt_path, "cannot open");
  std::ifstream align_in;
  const bool with_alignment = !align_path.empty();
  if (with_alignment) {
    align_in.open(align_path, std::ios::binary);
    if (!align_in) throw file_error(align_path, "cannot open");
  }

  std::vector<ParallelExample> out;
  std::string src_line, tgt_line, align_line;
  std::size_t line_no = 0;
  for (;;) {
    const bool got_src = static_cast<bool>(std::getline(src_in, src_line));
    const bool got_tgt = static_cast<bool>(std::getline(tgt_in, tgt_line));
    bool got_align = false;
    if (with_alignment) got_align = static_cast<bool>(std::getline(align_in, align_line));
    ++line_no;
    if (!got_src && !got_tgt && (!with_alignment || !got_align)) break;
    if (got_src != got_tgt || (with_alignment && got_align != got_src)) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": line counts differ across parallel files");
    }

    ParallelExample ex;
    const auto src_tokens = split_ws(src_line);
    const auto tgt_tokens = split_ws(tgt_line);
    if (src_tokens.empty()) throw line_error(src_path, line_no, "empty sentence");
    if (tgt_tokens.empty()) throw line_error(tgt_path, line_no, "empty sentence");
    ex.source = to_ids(src_tokens, src_vocab);
    ex.target = to_ids(tgt_tokens, tgt_vocab);
    if (with_alignment) {
      ex.alignment =
          parse_alignment_line(align_line, src_tokens.size(), tgt_tokens.size(), line_no);
      ex.has_alignment = true;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

EmbeddingTable random_embedding_table(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be positive");
  EmbeddingTable tab;
  tab.vocab = vocab;
  tab.dim = dim;
  tab.table = Mat(vocab.size(), dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(1 + dim));
  for (std::size_t i = 0; i < tab.table.size(); ++i)
    tab.table.data()[i] = rng.uniform(-bound, bound);
  return tab;
}

EmbeddingTable load_word2vec_text(const std::string& path, const Vocabulary& vocab,
                                  std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw file_error(path, "cannot open");

  std::string line;
  if (!std::getline(in, line)) throw line_error(path, 1, "missing header");
  std::istringstream header(line);
  std::uint64_t declared_count = 0, declared_dim = 0;
  if (!(header >> declared_count >> declared_dim))
    throw line_error(path, 1, "header must be 'count dim'");
  std::string extra;
  if (header >> extra) throw line_error(path, 1, "header must be 'count dim'");
  if (declared_dim != dim)
    throw line_error(path, 1,
                     "embedding dim " + std::to_string(declared_dim) +
                         " does not match configured dim " + std::to_string(dim));

  // Rows not covered by the file keep their random initialization.
  EmbeddingTable tab = random_embedding_table(vocab, dim, rng);
  std::vector<bool> seen(vocab.size(), false);
  std::size_t line_no = 1;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != dim + 1)
      throw line_error(path, line_no,
                       "expected word + " + std::to_string(dim) + " values, got " +
                           std::to_string(tokens.size() ? tokens.size() - 1 : 0));
    const auto id = vocab.find(tokens[0]);
    ++loaded;
    if (!id) continue;
    if (seen[*id])
      std::cerr << "[bisenc] warning: " << path << ":" << line_no << ": word '" << tokens[0]
                << "' repeated, keeping last occurrence\n";
    seen[*id] = true;
    double* row = tab.table.row(*id);
    for (std::size_t d = 0; d < dim; ++d) {
      try {
        std::size_t pos = 0;
        row[d] = std::stod(tokens[d + 1], &pos);
        if (pos != tokens[d + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw line_error(path, line_no, "bad numeric field '" + tokens[d + 1] + "'");
      }
    }
  }
  if (loaded != declared_count)
    std::cerr << "[bisenc] warning: " << path << ": header declares " << declared_count
              << " words, file has " << loaded << "\n";
  return tab;
}

}  // namespace bisenc
