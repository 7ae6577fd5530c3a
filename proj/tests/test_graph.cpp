#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/fixture.hpp"
#include "termspan/graph.hpp"
#include "termspan/sha256.hpp"

using namespace termspan;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("forward values of basic ops") {
  ad::Graph g;
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  ad::Var va = g.constant(a);
  ad::Var vb = g.constant(b);
  CHECK(g.value(g.matmul(va, vb)) == a * b);
  CHECK(g.value(g.add(va, vb)) == a + b);
  CHECK(g.value(g.cmul(va, vb)) == a.cwiseProduct(b));
  CHECK(g.value(g.matmul_t(va, vb)) == a.transpose() * b);
  CHECK(g.value(g.mean_all(va))(0, 0) == doctest::Approx(2.5));
  CHECK(g.value(g.max_cols(va))(0, 0) == 2);
  CHECK(g.value(g.max_cols(va))(1, 0) == 4);
  CHECK(g.value(g.flatten(va)).rows() == 4);
  CHECK(g.value(g.flatten(va))(1, 0) == 3);  // column-major
}

TEST_CASE("softmax output is a probability vector") {
  ad::Graph g;
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    ad::Var v = g.constant(random_matrix(1 + rng.below(9), 1, rng));
    const Matrix p = g.value(g.softmax(v));
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("backward matches finite differences across composite expressions") {
  Rng rng(7);
  ParameterStore store;
  Parameter& w = store.add("w", 4, 6);
  Parameter& b = store.add("b", 4, 1);
  Parameter& q = store.add("q", 4, 1);
  init_uniform(w, rng, 0.8);
  init_uniform(b, rng, 0.8);
  init_uniform(q, rng, 0.8);
  const Matrix x = random_matrix(6, 3, rng);

  const auto loss = [&](bool accumulate) {
    ad::Graph g;
    ad::Var vx = g.constant(x);
    ad::Var h = g.tanh(g.affine(g.param(w), vx, g.param(b)));       // 4x3
    ad::Var scores = g.matmul_t(h, g.param(q));                     // 3x1
    ad::Var weights = g.softmax(scores);
    ad::Var pooled = g.scale_cols(h, weights);                      // 4x3
    ad::Var flat = g.pad_rows(g.flatten(g.max_cols(pooled)), 6);    // 6x1
    ad::Var merged = g.concat_rows({g.mean_cols(pooled), g.slice_rows(flat, 0, 2)});
    ad::Var out = g.sigmoid(g.sum_all(g.cmul(merged, merged)));
    ad::Var root = g.bce_with_logit(out, 1.0);
    const double value = g.value(root)(0, 0);
    if (accumulate) g.backward(root);
    return value;
  };

  const auto result = testing::check_gradients(store.pointers(), loss, 120, 99);
  CHECK(result.checked == 120);
  CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("lookup accumulates only into the referenced column") {
  ParameterStore store;
  Parameter& table = store.add("emb", 3, 5);
  Rng rng(3);
  init_uniform(table, rng, 0.5);

  ad::Graph g;
  ad::Var v = g.lookup(table, 2);
  ad::Var root = g.sum_all(v);
  g.backward(root);
  for (Index col = 0; col < 5; ++col) {
    for (Index row = 0; row < 3; ++row) {
      CHECK(table.grad(row, col) == (col == 2 ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("dropout is identity in infer mode and masks in train mode") {
  Rng rng(11);
  ad::Graph infer(false);
  const Matrix m = random_matrix(10, 10, rng);
  ad::Var v = infer.constant(m);
  CHECK(infer.value(infer.dropout(v, 0.5)) == m);

  Rng drop_rng(12);
  ad::Graph train(true, &drop_rng);
  ad::Var tv = train.constant(Matrix::Ones(50, 50));
  const Matrix dropped = train.value(train.dropout(tv, 0.6));
  int zeros = 0;
  for (Index j = 0; j < 50; ++j) {
    for (Index i = 0; i < 50; ++i) {
      if (dropped(i, j) == 0.0) {
        ++zeros;
      } else {
        CHECK(dropped(i, j) == doctest::Approx(1.0 / 0.4));
      }
    }
  }
  CHECK(zeros > 1000);  // about 60% of 2500
  CHECK(zeros < 2000);
}

TEST_CASE("bce_with_logit agrees with the analytic cross-entropy") {
  ad::Graph g;
  // p = sigmoid(2.1972246) ~= 0.9; -ln(0.9) ~= 0.10536
  ad::Var z = g.constant(Matrix::Constant(1, 1, 2.1972245773362196));
  CHECK(g.value(g.bce_with_logit(z, 1.0))(0, 0) == doctest::Approx(0.1053605).epsilon(1e-6));
  ad::Var zero = g.constant(Matrix::Zero(1, 1));
  CHECK(g.value(g.bce_with_logit(zero, 0.0))(0, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("adam reduces a quadratic objective") {
  ParameterStore store;
  Parameter& p = store.add("p", 3, 1);
  p.value << 5.0, -4.0, 2.0;
  AdamOptimizer opt(store.pointers(), AdamConfig{.learning_rate = 0.05});
  for (int step = 0; step < 400; ++step) {
    p.grad = 2.0 * p.value;  // d/dp ||p||^2
    opt.step();
  }
  CHECK(p.value.norm() < 0.05);
}

TEST_CASE("sha256 matches published test vectors") {
  CHECK(Sha256::of_string("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256::of_string("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(Sha256::of_string("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  // Incremental updates agree with one-shot hashing.
  Sha256 h;
  h.update("ab", 2);
  h.update("c", 1);
  CHECK(h.hex_digest() == Sha256::of_string("abc"));
}

TEST_CASE("parameter store digests react to any value change") {
  ParameterStore store;
  Parameter& p = store.add("p", 2, 2);
  const std::string before = store.digest();
  p.value(1, 1) += 1e-12;
  CHECK(store.digest() != before);
}
