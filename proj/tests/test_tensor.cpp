#include <doctest.h>

#include <cmath>

#include "bcnet/tensor.hpp"
#include "oracles.hpp"

using namespace bcnet;

TEST_CASE("tensor construction enforces dims") {
  CHECK_THROWS_AS(Tensor(Dims{}), ShapeError);
  CHECK_THROWS_AS(Tensor(Dims{2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor(Dims{1, 1, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f, 3.0f}), ShapeError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
}

TEST_CASE("matmul examples") {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor a({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, a) == a);

  Rng rng(3);
  const Tensor any = oracle::random_tensor({3, 4}, rng);
  const Tensor z = matmul(Tensor({2, 3}), any);
  CHECK(z.dims() == Dims{2, 4});
  for (float v : z.values()) CHECK(v == 0.0f);

  // Expected values from the triple-loop oracle.
  const auto want = oracle::matmul({1, 2, 3, 4}, {5, 6, 7, 8}, 2, 2, 2);
  CHECK(want == std::vector<double>{19, 22, 43, 50});
  const Tensor c = matmul(a, Tensor({2, 2}, {5, 6, 7, 8}));
  CHECK(c == Tensor({2, 2}, {19, 22, 43, 50}));
}

TEST_CASE("matmul shape error names both shapes") {
  try {
    matmul(Tensor({2, 3}), Tensor({4, 5}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("matmul agrees with the naive oracle on odd tile sizes") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = oracle::random_dim(rng, 1, 19), k = oracle::random_dim(rng, 1, 300),
                      n = oracle::random_dim(rng, 1, 37);
    const Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, n}, rng);
    const auto want = oracle::matmul({a.values().begin(), a.values().end()},
                                     {b.values().begin(), b.values().end()}, m, k, n);
    CHECK(oracle::max_abs_diff(matmul(a, b), want) <= 1e-5);
  }
}

TEST_CASE("matmul associativity") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = oracle::random_dim(rng, 1, 8), k = oracle::random_dim(rng, 1, 8),
                      l = oracle::random_dim(rng, 1, 8), n = oracle::random_dim(rng, 1, 8);
    const Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, l}, rng),
                 c = oracle::random_tensor({l, n}, rng);
    const Tensor left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    double d = 0;
    for (std::size_t i = 0; i < left.size(); ++i) d = std::max(d, double(std::abs(left[i] - right[i])));
    CHECK(d <= 1e-3);
  }
}

TEST_CASE("relu") {
  CHECK(relu(Tensor({3}, {-1, 0, 2})) == Tensor({3}, {0, 0, 2}));
  const Tensor pos({4}, {0, 1, 2.5f, 7});
  CHECK(relu(pos) == pos);
  Rng rng(9);
  const Tensor x = oracle::random_tensor({5, 7}, rng);
  CHECK(relu(relu(x)) == relu(x));
  CHECK(std::isnan(relu(Tensor({2}, {NAN, 1}))[0]));
}

TEST_CASE("softmax_rows examples") {
  const Tensor u = softmax_rows(Tensor({1, 3}, {0, 0, 0}));
  for (float v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  const Tensor big = softmax_rows(Tensor({1, 3}, {1000, 1000, 1000}));
  for (float v : big.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  const Tensor logs = softmax_rows(Tensor({1, 3}, {0, float(std::log(2.0)), float(std::log(3.0))}));
  CHECK(logs[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(logs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(logs[2] == doctest::Approx(1.0 / 2.0).epsilon(1e-6));
}

TEST_CASE("softmax_rows handles large magnitudes and rejects non-finite input") {
  const Tensor y = softmax_rows(Tensor({2, 2}, {1e4f, -1e4f, -1e4f, 1e4f}));
  for (float v : y.values()) CHECK(std::isfinite(v));
  CHECK(y[0] == 1.0f);
  try {
    softmax_rows(Tensor({2, 2}, {0, 1, NAN, 2}));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("[1,0]") != std::string::npos);
  }
}

TEST_CASE("softmax_rows: rows sum to one and are shift invariant") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = oracle::random_dim(rng, 1, 6), n = oracle::random_dim(rng, 1, 9);
    const Tensor x = oracle::random_tensor({m, n}, rng, -100, 100);
    Tensor shifted = x;
    for (std::size_t i = 0; i < m; ++i) {
      const float c = static_cast<float>(uniform_real(rng, -50, 50));
      for (std::size_t j = 0; j < n; ++j) shifted.at(i, j) += c;
    }
    const Tensor p = softmax_rows(x), q = softmax_rows(shifted);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) {
        s += p.at(i, j);
        // Wide logit gaps underflow to exactly 0 in float; positivity is checked below.
        CHECK(p.at(i, j) >= 0.0f);
        CHECK(p.at(i, j) <= 1.0f);
        CHECK(std::abs(p.at(i, j) - q.at(i, j)) <= 1e-6);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("softmax_rows entries are strictly positive for moderate logits") {
  Rng rng(23);
  const Tensor p = softmax_rows(oracle::random_tensor({20, 5}, rng, -10, 10));
  for (float v : p.values()) {
    CHECK(v > 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("reshape") {
  Rng rng(2);
  const Tensor x = oracle::random_tensor({2, 3}, rng);
  const Tensor flat = reshape(x, {6});
  CHECK(flat.dims() == Dims{6});
  CHECK(reshape(flat, {2, 3}) == x);
  CHECK(reshape(Tensor({1, 7, 7, 512}), {1, 25088}).dims() == Dims{1, 25088});
  CHECK_THROWS_AS(reshape(x, {4, 2}), ShapeError);
}
