// Dense double-precision vectors/matrices, activations, seeded RNG and the
// SGD update shared by both networks. Everything here is deliberately small:
// the models in this toolkit never exceed a few million parameters.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace bisenc {

using Vec = std::vector<double>;

// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), store_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return store_.size(); }
  bool empty() const { return store_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return store_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return store_[r * cols_ + c]; }

  double* row(std::size_t r) { return store_.data() + r * cols_; }
  const double* row(std::size_t r) const { return store_.data() + r * cols_; }

  double* data() { return store_.data(); }
  const double* data() const { return store_.data(); }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v) { store_.assign(store_.size(), v); }

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.store_ == b.store_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> store_;
};

// Named view over a flat parameter (or gradient) block. Parameter structs
// expose their tensors through this so that the SGD update, the L2 norm and
// the finite-difference checks can walk every group uniformly.
struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

// Deterministic seedable generator. All stochastic choices in the toolkit
// (init, dropout, negative sampling, noise draws, shuffles) go through this
// class; the draw sequence depends only on the seed, never on the platform's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). Lemire's multiply-with-rejection.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Stable combiner for deriving per-example/per-epoch streams from one seed.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::mt19937_64 gen_;
};

// Seeded Fisher-Yates; used instead of std::shuffle so shuffles are
// reproducible independent of the standard library.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

// y = M x. Throws std::invalid_argument on dimension mismatch.
Vec matvec(const Mat& m, const Vec& x);
// y = M^T x (used by backprop; avoids materializing transposes).
Vec matvec_transposed(const Mat& m, const Vec& x);
// acc += a b^T.
void add_outer(Mat& acc, const Vec& a, const Vec& b);
void axpy(double alpha, const Vec& x, Vec& y);

double dot(const Vec& a, const Vec& b);
// Dot product of one matrix row with a vector.
double dot_row(const Mat& m, std::size_t row, const Vec& v);

Vec relu(const Vec& v);
// Numerically stable softmax (max-subtraction). Throws on empty input.
Vec softmax(const Vec& v);
// log(softmax(v)), via log-sum-exp.
Vec log_softmax(const Vec& v);
double log_sum_exp(const Vec& v);

// theta <- theta - lr * (grad + l2 * theta)
void sgd_step(double* params, const double* grad, std::size_t n, double lr, double l2);
void sgd_step(Vec& params, const Vec& grad, double lr, double l2);
void sgd_step(Mat& params, const Mat& grad, double lr, double l2);

// Entries uniform in +-sqrt(6 / (rows + cols)), filled row-major.
Mat xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

double squared_norm(const Mat& m);
double squared_norm(const Vec& v);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Runs fn(block) for block in [0, blocks). With threads <= 1 this is a plain
// loop; otherwise blocks are handed to a fixed-size pool. Callers that need
// reproducible sums must keep per-block accumulators and reduce them in block
// order afterwards.
void run_blocks(std::size_t blocks, std::size_t threads,
                const std::function<void(std::size_t)>& fn);

}  // namespace bisenc
