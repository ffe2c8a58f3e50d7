#include "bisenc/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bisenc {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'N', 'C'};
constexpr std::uint16_t kVersion = 1;

void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint8_t read_u8(std::istream& in) {
  const int c = in.get();
  if (c == EOF) throw std::runtime_error("snapshot: truncated file");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (in.gcount() != 8) throw std::runtime_error("snapshot: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string read_string(std::istream& in) {
  const std::uint64_t len = read_u64(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(in.gcount()) != len)
    throw std::runtime_error("snapshot: truncated file");
  return s;
}

}  // namespace

Snapshot::Entry& Snapshot::append(const std::string& name, Tag tag) {
  for (const auto& e : entries_)
    if (e.name == name) throw std::invalid_argument("snapshot: duplicate entry " + name);
  entries_.push_back(Entry{name, tag, 0, 0.0, {}, {}, {}});
  return entries_.back();
}

const Snapshot::Entry& Snapshot::find(const std::string& name, Tag tag) const {
  for (const auto& e : entries_) {
    if (e.name != name) continue;
    if (e.tag != tag) throw std::runtime_error("snapshot: entry " + name + " has wrong type");
    return e;
  }
  throw std::runtime_error("snapshot: missing entry " + name);
}

void Snapshot::put_i64(const std::string& name, std::int64_t v) { append(name, Tag::kI64).i64 = v; }
void Snapshot::put_f64(const std::string& name, double v) { append(name, Tag::kF64).f64 = v; }
void Snapshot::put_vec(const std::string& name, const Vec& v) { append(name, Tag::kVec).vec = v; }
void Snapshot::put_mat(const std::string& name, const Mat& m) { append(name, Tag::kMat).mat = m; }
void Snapshot::put_strings(const std::string& name, const std::vector<std::string>& v) {
  append(name, Tag::kStrings).strings = v;
}

std::int64_t Snapshot::get_i64(const std::string& name) const { return find(name, Tag::kI64).i64; }
double Snapshot::get_f64(const std::string& name) const { return find(name, Tag::kF64).f64; }
const Vec& Snapshot::get_vec(const std::string& name) const { return find(name, Tag::kVec).vec; }
const Mat& Snapshot::get_mat(const std::string& name) const { return find(name, Tag::kMat).mat; }
const std::vector<std::string>& Snapshot::get_strings(const std::string& name) const {
  return find(name, Tag::kStrings).strings;
}

bool Snapshot::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

void Snapshot::write(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out.write(kMagic, 4);
    write_u64(out, kVersion);
    write_string(out, kind_);
    write_u64(out, entries_.size());
    for (const auto& e : entries_) {
      write_string(out, e.name);
      write_u8(out, static_cast<std::uint8_t>(e.tag));
      switch (e.tag) {
        case Tag::kI64:
          write_u64(out, static_cast<std::uint64_t>(e.i64));
          break;
        case Tag::kF64:
          write_f64(out, e.f64);
          break;
        case Tag::kVec:
          write_u64(out, e.vec.size());
          for (double v : e.vec) write_f64(out, v);
          break;
        case Tag::kMat:
          write_u64(out, e.mat.rows());
          write_u64(out, e.mat.cols());
          for (std::size_t i = 0; i < e.mat.size(); ++i) write_f64(out, e.mat.data()[i]);
          break;
        case Tag::kStrings:
          write_u64(out, e.strings.size());
          for (const auto& s : e.strings) write_string(out, s);
          break;
      }
    }
    if (!out) throw std::runtime_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error(path + ": rename failed");
  }
}

Snapshot Snapshot::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a snapshot file");
  const std::uint64_t version = read_u64(in);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported snapshot version " + std::to_string(version));
  Snapshot snap(read_string(in));
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    const Tag tag = static_cast<Tag>(read_u8(in));
    Entry& e = snap.append(name, tag);
    switch (tag) {
      case Tag::kI64:
        e.i64 = static_cast<std::int64_t>(read_u64(in));
        break;
      case Tag::kF64:
        e.f64 = read_f64(in);
        break;
      case Tag::kVec: {
        const std::uint64_t n = read_u64(in);
        e.vec.resize(n);
        for (std::uint64_t k = 0; k < n; ++k) e.vec[k] = read_f64(in);
        break;
      }
      case Tag::kMat: {
        const std::uint64_t r = read_u64(in);
        const std::uint64_t c = read_u64(in);
        e.mat = Mat(r, c);
        for (std::size_t k = 0; k < e.mat.size(); ++k) e.mat.data()[k] = read_f64(in);
        break;
      }
      case Tag::kStrings: {
        const std::uint64_t n = read_u64(in);
        e.strings.resize(n);
        for (std::uint64_t k = 0; k < n; ++k) e.strings[k] = read_string(in);
        break;
      }
      default:
        throw std::runtime_error(path + ": unknown entry tag");
    }
  }
  return snap;
}

}  // namespace bisenc
