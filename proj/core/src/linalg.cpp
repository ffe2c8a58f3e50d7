#include "bisenc/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace bisenc {

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t bound = n;
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combine
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

Vec matvec(const Mat& m, const Vec& x) {
  if (m.cols() != x.size())
    throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(m.cols()) +
                                " cols vs " + std::to_string(x.size()) + " len)");
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec matvec_transposed(const Mat& m, const Vec& x) {
  if (m.rows() != x.size())
    throw std::invalid_argument("matvec_transposed: dimension mismatch");
  Vec y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r);
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += xr * row[c];
  }
  return y;
}

void add_outer(Mat& acc, const Vec& a, const Vec& b) {
  if (acc.rows() != a.size() || acc.cols() != b.size())
    throw std::invalid_argument("add_outer: dimension mismatch");
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = acc.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += ar * b[c];
  }
}

void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double dot_row(const Mat& m, std::size_t row, const Vec& v) {
  if (m.cols() != v.size()) throw std::invalid_argument("dot_row: length mismatch");
  const double* r = m.row(row);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += r[i] * v[i];
  return acc;
}

Vec relu(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

Vec softmax(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& e : out) e /= sum;
  return out;
}

double log_sum_exp(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

Vec log_softmax(const Vec& v) {
  const double lse = log_sum_exp(v);
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  return out;
}

void sgd_step(double* params, const double* grad, std::size_t n, double lr, double l2) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: lr must be non-negative");
  if (l2 < 0.0) throw std::invalid_argument("sgd_step: l2 must be non-negative");
  for (std::size_t i = 0; i < n; ++i) params[i] -= lr * (grad[i] + l2 * params[i]);
}

void sgd_step(Vec& params, const Vec& grad, double lr, double l2) {
  if (params.size() != grad.size()) throw std::invalid_argument("sgd_step: shape mismatch");
  sgd_step(params.data(), grad.data(), params.size(), lr, l2);
}

void sgd_step(Mat& params, const Mat& grad, double lr, double l2) {
  if (!params.same_shape(grad)) throw std::invalid_argument("sgd_step: shape mismatch");
  sgd_step(params.data(), grad.data(), params.size(), lr, l2);
}

Mat xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("xavier_init: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

double squared_norm(const Mat& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
  return acc;
}

double squared_norm(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Mat& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i])) return false;
  return true;
}

void run_blocks(std::size_t blocks, std::size_t threads,
                const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  const std::size_t workers = std::min(threads, blocks);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= blocks) return;
        fn(b);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bisenc
