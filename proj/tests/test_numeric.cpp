#include <doctest.h>
#include <stdexcept>

#include <cmath>
#include <numbers>

#include "adaptlab/numeric.hpp"
#include "adaptlab/oracles.hpp"
#include "adaptlab/rng.hpp"

using namespace adaptlab;

TEST_CASE("softmax basics") {
  CHECK(softmax({0.0, 0.0}) == Vector{0.5, 0.5});
  CHECK(softmax({1000.0, 1000.0}) == Vector{0.5, 0.5});
  Vector p = softmax({1.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.7310586).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.2689414).epsilon(1e-6));
  CHECK_THROWS_AS(softmax({}), std::invalid_argument);
}

TEST_CASE("softmax shift invariance and normalization") {
  RngStream rng(1, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t len = 1 + rng.next_u64() % 8;
    Vector z(len);
    for (double& v : z) v = 10.0 * rng.next_unit() - 5.0;
    Vector a = softmax(z);
    double sum = 0.0;
    for (double v : a) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    double c = 100.0 * rng.next_unit() - 50.0;
    Vector shifted = z;
    for (double& v : shifted) v += c;
    Vector b = softmax(shifted);
    for (std::size_t i = 0; i < len; ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }
}

TEST_CASE("log_sigmoid values and tails") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(-0.6931472).epsilon(1e-6));
  CHECK(log_sigmoid(-100.0) == doctest::Approx(-100.0).epsilon(1e-12));
  CHECK(log_sigmoid(0.1) == doctest::Approx(-0.6443967).epsilon(1e-6));
  CHECK(std::isfinite(log_sigmoid(-700.0)));
  CHECK(std::isfinite(log_sigmoid(700.0)));
  RngStream rng(2, 1);
  for (int rep = 0; rep < 50; ++rep) {
    double x = 20.0 * rng.next_unit() - 10.0;
    CHECK(log_sigmoid(x) == doctest::Approx(std::log(sigmoid(x))).epsilon(1e-12));
  }
}

TEST_CASE("sparsemax examples") {
  CHECK(sparsemax({0.5, 0.5}) == Vector{0.5, 0.5});
  Vector p = sparsemax({2.0, 0.0});
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[1] == 0.0);
  Vector q = sparsemax({0.3, 0.2, 0.1});
  Vector oracle = simplex_projection_bruteforce({0.3, 0.2, 0.1});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(q[i] - oracle[i]) <= 1e-12);
  }
  CHECK_THROWS_AS(sparsemax({}), std::invalid_argument);
}

TEST_CASE("sparsemax equals brute-force projection on random vectors") {
  RngStream rng(3, 1);
  for (int rep = 0; rep < 300; ++rep) {
    std::size_t len = 1 + rng.next_u64() % 6;
    Vector z(len);
    for (double& v : z) v = 6.0 * rng.next_unit() - 3.0;
    Vector fast = sparsemax(z);
    Vector oracle = simplex_projection_bruteforce(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      CHECK(std::abs(fast[i] - oracle[i]) <= 1e-12);
      CHECK(fast[i] >= 0.0);
      sum += fast[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("sparsemax shift invariance") {
  RngStream rng(4, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t len = 2 + rng.next_u64() % 5;
    Vector z(len);
    for (double& v : z) v = 4.0 * rng.next_unit() - 2.0;
    double c = 20.0 * rng.next_unit() - 10.0;
    Vector shifted = z;
    for (double& v : shifted) v += c;
    Vector a = sparsemax(z);
    Vector b = sparsemax(shifted);
    for (std::size_t i = 0; i < len; ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }
}

TEST_CASE("rmsnorm examples") {
  CHECK(rmsnorm({1.0, 1.0}, {1.0, 1.0}, 0.0) == Vector{1.0, 1.0});
  Vector out = rmsnorm({3.0, 4.0}, {1.0, 1.0}, 0.0);
  CHECK(out[0] == doctest::Approx(0.8485281).epsilon(1e-6));
  CHECK(out[1] == doctest::Approx(1.1313708).epsilon(1e-6));
  CHECK(rmsnorm({0.0, 0.0}, {1.0, 1.0}, 1e-6) == Vector{0.0, 0.0});
  CHECK_THROWS_AS(rmsnorm({1.0}, {1.0, 2.0}, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(rmsnorm({0.0}, {1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rmsnorm({1.0}, {1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("rmsnorm output has unit rms for unit gain") {
  RngStream rng(5, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t len = 1 + rng.next_u64() % 10;
    Vector x(len);
    for (double& v : x) v = rng.next_gaussian();
    if (l2_norm(x) == 0.0) continue;
    Vector out = rmsnorm(x, Vector(len, 1.0), 0.0);
    double ms = 0.0;
    for (double v : out) ms += v * v;
    CHECK(std::abs(std::sqrt(ms / static_cast<double>(len)) - 1.0) <= 1e-9);
  }
}

TEST_CASE("swiglu examples") {
  CHECK(swiglu({0.0}, {5.0}) == Vector{0.0});
  CHECK(swiglu({1.0}, {2.0})[0] == doctest::Approx(1.4621172).epsilon(1e-6));
  CHECK(swiglu({-20.0}, {1.0})[0] == doctest::Approx(-4.122e-8).epsilon(1e-3));
  CHECK_THROWS_AS(swiglu({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("rope_rotate examples") {
  std::array<double, 2> pair = {0.3, -1.7};
  CHECK(rope_rotate(pair, 0, 10000.0, 1, 8) == pair);

  // theta_base chosen so the angle for pair_index 1 of dim 4 is exactly pi/2
  double base = 4.0 / (std::numbers::pi * std::numbers::pi);
  auto turned = rope_rotate({1.0, 0.0}, 1, base, 1, 4);
  CHECK(std::abs(turned[0] - 0.0) <= 1e-12);
  CHECK(std::abs(turned[1] - 1.0) <= 1e-12);

  auto unit = rope_rotate({1.0, 0.0}, 1, 10000.0, 0, 4);
  CHECK(unit[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
  CHECK(unit[1] == doctest::Approx(std::sin(1.0)).epsilon(1e-15));

  CHECK_THROWS_AS(rope_rotate(pair, 1, 10.0, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(rope_rotate(pair, 1, 10.0, 2, 4), std::invalid_argument);
}

TEST_CASE("rope_rotate preserves the pair norm") {
  RngStream rng(6, 1);
  for (int rep = 0; rep < 200; ++rep) {
    std::array<double, 2> pair = {3.0 * rng.next_gaussian(), 3.0 * rng.next_gaussian()};
    std::size_t dim = 2 * (1 + rng.next_u64() % 16);
    auto out = rope_rotate(pair, static_cast<long>(rng.next_u64() % 4096), 1e6,
                           rng.next_u64() % (dim / 2), dim);
    CHECK(std::abs(std::hypot(out[0], out[1]) - std::hypot(pair[0], pair[1])) <= 1e-12);
  }
}

TEST_CASE("rng streams reproduce bit-exactly") {
  RngStream a(123, 45);
  RngStream b(123, 45);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngStream c(123, 45);
  RngStream d(123, 46);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) {
    any_diff = any_diff || (c.next_u64() != d.next_u64());
  }
  CHECK(any_diff);

  RngStream e = RngStream(9, 9).split("layer").split(3);
  RngStream f = RngStream(9, 9).split("layer").split(3);
  for (int i = 0; i < 20; ++i) {
    CHECK(e.next_gaussian() == f.next_gaussian());
  }
}

TEST_CASE("rng uniforms and gaussians are sane") {
  RngStream rng(7, 1);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(std::sqrt(var) - 1.0) < 3.0 / std::sqrt(2.0 * n));
}

TEST_CASE("matrix shape stays fixed and rows copy") {
  Matrix m(3, 2, 1.5);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  m(1, 1) = 4.0;
  Vector r = m.row(1);
  CHECK(r == Vector{1.5, 4.0});
  CHECK_THROWS_AS(m.set_row(0, {1.0}), std::invalid_argument);
}
