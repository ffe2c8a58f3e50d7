#include "bisenc/linalg.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace bisenc;
using Catch::Approx;

TEST_CASE("matvec basics") {
  SECTION("identity") {
    Mat id(3, 3);
    for (std::size_t i = 0; i < 3; ++i) id(i, i) = 1.0;
    const Vec y = matvec(id, {1.0, 2.0, 3.0});
    REQUIRE(y == Vec{1.0, 2.0, 3.0});
  }
  SECTION("hand-computed 2x2") {
    Mat m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = 1.0;
    m(1, 0) = 0.0;
    m(1, 1) = 2.0;
    const Vec y = matvec(m, {3.0, 4.0});
    REQUIRE(y == Vec{7.0, 8.0});
  }
  SECTION("basis vector extracts a column") {
    Rng rng(7);
    const Mat m = xavier_init(5, 4, rng);
    for (std::size_t j = 0; j < 4; ++j) {
      Vec e(4, 0.0);
      e[j] = 1.0;
      const Vec y = matvec(m, e);
      for (std::size_t i = 0; i < 5; ++i) REQUIRE(y[i] == m(i, j));
    }
  }
  SECTION("dimension mismatch rejected") {
    REQUIRE_THROWS_AS(matvec(Mat(2, 3), Vec{1.0, 2.0}), std::invalid_argument);
  }
}

TEST_CASE("matvec distributes over vector addition") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(8);
    const std::size_t cols = 1 + rng.uniform_index(8);
    const Mat m = xavier_init(rows, cols, rng);
    Vec a(cols), b(cols);
    for (auto& x : a) x = rng.uniform(-10.0, 10.0);
    for (auto& x : b) x = rng.uniform(-10.0, 10.0);
    Vec sum = a;
    axpy(1.0, b, sum);
    const Vec lhs = matvec(m, sum);
    Vec rhs = matvec(m, a);
    axpy(1.0, matvec(m, b), rhs);
    for (std::size_t i = 0; i < rows; ++i) REQUIRE(lhs[i] == Approx(rhs[i]).margin(1e-10));
  }
}

TEST_CASE("relu") {
  REQUIRE(relu({-2.0, 0.0, 3.0}) == Vec{0.0, 0.0, 3.0});
  REQUIRE(relu({-1.0, -5.0}) == Vec{0.0, 0.0});
  REQUIRE(relu({1.0, 2.5}) == Vec{1.0, 2.5});
}

TEST_CASE("softmax") {
  SECTION("symmetry") {
    const Vec p = softmax({0.0, 0.0});
    REQUIRE(p[0] == Approx(0.5));
    REQUIRE(p[1] == Approx(0.5));
  }
  SECTION("overflow-safe symmetry") {
    const Vec p = softmax({1000.0, 1000.0});
    REQUIRE(p[0] == Approx(0.5));
    REQUIRE(p[1] == Approx(0.5));
  }
  SECTION("exp inverts log") {
    const Vec p = softmax({std::log(1.0), std::log(2.0), std::log(3.0)});
    REQUIRE(p[0] == Approx(1.0 / 6.0));
    REQUIRE(p[1] == Approx(2.0 / 6.0));
    REQUIRE(p[2] == Approx(3.0 / 6.0));
  }
  SECTION("entries positive, sum to one") {
    Rng rng(3);
    Vec v(17);
    for (auto& x : v) x = rng.uniform(-40.0, 40.0);
    const Vec p = softmax(v);
    double sum = 0.0;
    for (double x : p) {
      REQUIRE(x > 0.0);
      sum += x;
    }
    REQUIRE(sum == Approx(1.0).margin(1e-9));
  }
  SECTION("invariant under constant shift") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      Vec v(1 + rng.uniform_index(10));
      for (auto& x : v) x = rng.uniform(-5.0, 5.0);
      const double shift = rng.uniform(-100.0, 100.0);
      Vec shifted = v;
      for (auto& x : shifted) x += shift;
      const Vec a = softmax(v);
      const Vec b = softmax(shifted);
      for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(a[i] == Approx(b[i]).margin(1e-9));
    }
  }
  SECTION("empty input rejected") { REQUIRE_THROWS_AS(softmax({}), std::invalid_argument); }
}

TEST_CASE("sgd_step") {
  SECTION("zero gradient is a fixed point") {
    Vec theta{1.0};
    sgd_step(theta, {0.0}, 0.1, 0.0);
    REQUIRE(theta[0] == 1.0);
  }
  SECTION("plain step") {
    Vec theta{1.0};
    sgd_step(theta, {0.5}, 0.1, 0.0);
    REQUIRE(theta[0] == Approx(0.95));
  }
  SECTION("pure decay") {
    Vec theta{2.0};
    sgd_step(theta, {0.0}, 0.1, 0.5);
    REQUIRE(theta[0] == Approx(1.9));
  }
  SECTION("lr zero is identity") {
    Rng rng(9);
    Vec theta(20), grad(20);
    for (auto& x : theta) x = rng.uniform(-3.0, 3.0);
    for (auto& x : grad) x = rng.uniform(-3.0, 3.0);
    Vec before = theta;
    sgd_step(theta, grad, 0.0, 0.7);
    REQUIRE(theta == before);
  }
  SECTION("shape mismatch rejected") {
    Vec theta{1.0, 2.0};
    const Vec grad{1.0};
    REQUIRE_THROWS_AS(sgd_step(theta, grad, 0.1, 0.0), std::invalid_argument);
    Mat tm(2, 2);
    REQUIRE_THROWS_AS(sgd_step(tm, Mat(2, 3), 0.1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("xavier_init") {
  SECTION("deterministic given the seed") {
    Rng a(42), b(42);
    REQUIRE(xavier_init(7, 9, a) == xavier_init(7, 9, b));
  }
  SECTION("bounds") {
    Rng rng(1);
    const Mat m = xavier_init(6, 10, rng);
    const double bound = std::sqrt(6.0 / 16.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      REQUIRE(m.data()[i] <= bound);
      REQUIRE(m.data()[i] >= -bound);
    }
  }
  SECTION("Monte-Carlo mean over 10^4 entries") {
    Rng rng(123);
    const Mat m = xavier_init(100, 100, rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) mean += m.data()[i];
    mean /= static_cast<double>(m.size());
    REQUIRE(std::abs(mean) < 0.01);
  }
}

TEST_CASE("rng determinism and ranges") {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.uniform_index(17) < 17);
  }
  REQUIRE_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("seeded shuffle is a permutation and reproducible") {
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> copy = items;
  Rng a(31), b(31);
  shuffle(items, a);
  shuffle(copy, b);
  REQUIRE(items == copy);
  std::sort(copy.begin(), copy.end());
  REQUIRE(copy == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}
