// Versioned binary container for model snapshots. A snapshot is an ordered
// list of named entries (integers, doubles, vectors, matrices, string lists)
// behind a magic/version/kind header. Doubles are stored as raw IEEE-754
// bytes so save/load round trips are bit-exact. Writes go through a
// temporary file plus rename.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bisenc/linalg.hpp"

namespace bisenc {

class Snapshot {
 public:
  explicit Snapshot(std::string kind = "") : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void put_i64(const std::string& name, std::int64_t v);
  void put_f64(const std::string& name, double v);
  void put_vec(const std::string& name, const Vec& v);
  void put_mat(const std::string& name, const Mat& m);
  void put_strings(const std::string& name, const std::vector<std::string>& v);

  std::int64_t get_i64(const std::string& name) const;
  double get_f64(const std::string& name) const;
  const Vec& get_vec(const std::string& name) const;
  const Mat& get_mat(const std::string& name) const;
  const std::vector<std::string>& get_strings(const std::string& name) const;

  bool has(const std::string& name) const;

  // Atomic: writes <path>.tmp then renames over <path>.
  void write(const std::string& path) const;
  static Snapshot read(const std::string& path);

 private:
  enum class Tag : std::uint8_t { kI64 = 0, kF64 = 1, kVec = 2, kMat = 3, kStrings = 4 };

  struct Entry {
    std::string name;
    Tag tag;
    std::int64_t i64 = 0;
    double f64 = 0.0;
    Vec vec;
    Mat mat;
    std::vector<std::string> strings;
  };

  const Entry& find(const std::string& name, Tag tag) const;
  Entry& append(const std::string& name, Tag tag);

  std::string kind_;
  std::vector<Entry> entries_;  // ordered; names unique
};

}  // namespace bisenc
