#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dgd/random.hpp"
#include "dgd/tensor.hpp"
#include "support/gradcheck.hpp"

using dgd::DiffArray;
using dgd::Tape;

TEST_CASE("matmul identity and hand arithmetic") {
  Tape t;
  auto eye = DiffArray::from({2, 2}, {1, 0, 0, 1});
  auto v = DiffArray::from({2, 1}, {2, 3});
  auto r = t.matmul(eye, v);
  CHECK(r->values == std::vector<double>{2, 3});

  auto a = DiffArray::from({1, 2}, {1, 2});
  auto b = DiffArray::from({2, 1}, {3, 4});
  CHECK(t.matmul(a, b)->values[0] == doctest::Approx(11.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape t;
  auto a = DiffArray::make({2, 3});
  auto b = DiffArray::make({4, 5});
  try {
    t.matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const dgd::DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x5]") != std::string::npos);
  }
}

TEST_CASE("matmul backward: sum(a*b) w.r.t. a") {
  auto a = DiffArray::from({1, 2}, {1, 2}, true);
  auto b = DiffArray::from({2, 1}, {3, 4});
  Tape t;
  auto loss = t.sum(t.matmul(a, b));
  t.backward(loss);
  CHECK(a->grad[0] == doctest::Approx(3.0));
  CHECK(a->grad[1] == doctest::Approx(4.0));

  auto check = testsupport::gradcheck({a}, [&](Tape& tape) {
    return tape.sum(tape.matmul(a, b));
  });
  CHECK(check.max_rel < 1e-6);
}

TEST_CASE("sigmoid at zero") {
  auto x = DiffArray::scalar(0.0, true);
  Tape t;
  auto loss = t.sum(t.sigmoid(x));
  CHECK(loss->value() == doctest::Approx(0.5));
  t.backward(loss);
  CHECK(x->grad[0] == doctest::Approx(0.25));
}

TEST_CASE("softmax symmetry and row normalization") {
  Tape t;
  auto x = DiffArray::from({3}, {0, 0, 0});
  auto s = t.softmax(x);
  for (double v : s->values) CHECK(v == doctest::Approx(1.0 / 3.0));

  dgd::Rng rng(7);
  auto y = DiffArray::make({4, 5});
  for (double& v : y->values) v = rng.normal() * 10.0;
  auto sy = t.softmax(y);
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 5; ++j) row += sy->values[i * 5 + j];
    CHECK(std::fabs(row - 1.0) < 1e-12);
  }
}

TEST_CASE("exp log inverse pair") {
  Tape t;
  auto x = DiffArray::scalar(2.5);
  CHECK(std::fabs(t.exp(t.log(x))->value() - 2.5) < 1e-12);
}

TEST_CASE("log rejects non-positive input") {
  Tape t;
  auto x = DiffArray::from({2}, {1.0, -0.5});
  CHECK_THROWS_AS(t.log(x), dgd::NumericDomainError);
  auto zero = DiffArray::scalar(0.0);
  CHECK_THROWS_AS(t.log(zero), dgd::NumericDomainError);
}

TEST_CASE("logsumexp closed form and shift invariance") {
  Tape t;
  auto x = DiffArray::from({2}, {0, 0});
  CHECK(t.logsumexp(x)->value() == doctest::Approx(std::log(2.0)));
  auto big = DiffArray::from({2}, {1000, 1000});
  CHECK(t.logsumexp(big)->value() == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("logsumexp bounds property") {
  dgd::Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    const std::size_t n = 1 + rng.index(8);
    auto x = DiffArray::make({n});
    double mx = -1e300;
    for (double& v : x->values) {
      v = rng.uniform(-200.0, 200.0);
      mx = std::max(mx, v);
    }
    Tape t;
    const double lse = t.logsumexp(x)->value();
    CHECK(lse >= mx);
    CHECK(lse <= mx + std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("sum backward distributes ones") {
  auto x = DiffArray::from({3}, {1, 2, 3}, true);
  Tape t;
  t.backward(t.sum(x));
  for (double g : x->grad) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("x squared gradient and accumulation across backward calls") {
  auto x = DiffArray::scalar(3.0, true);
  {
    Tape t;
    t.backward(t.mul(x, x));
  }
  CHECK(x->grad[0] == doctest::Approx(6.0));
  {
    Tape t;
    t.backward(t.mul(x, x));
  }
  CHECK(x->grad[0] == doctest::Approx(12.0));
  x->zero_grad();
  for (double g : x->grad) CHECK(g == 0.0);
}

TEST_CASE("backward contract errors") {
  auto x = DiffArray::from({2}, {1, 2}, true);
  Tape t;
  auto y = t.scale(x, 2.0);
  CHECK_THROWS_AS(t.backward(y), dgd::ContractError);  // non-scalar
  Tape empty;
  auto s = DiffArray::scalar(1.0, true);
  CHECK_THROWS_AS(empty.backward(s), dgd::ContractError);  // empty tape
}

TEST_CASE("finite differences: sum(sigmoid(w x))") {
  dgd::Rng rng(3);
  auto w = DiffArray::make({4, 3}, true);
  auto x = DiffArray::make({3, 2}, true);
  for (double& v : w->values) v = rng.normal();
  for (double& v : x->values) v = rng.normal();
  auto check = testsupport::gradcheck({w, x}, [&](Tape& tape) {
    return tape.sum(tape.sigmoid(tape.matmul(w, x)));
  });
  INFO(check.worst);
  CHECK(check.max_rel < 1e-6);
}

TEST_CASE("finite differences: mixed op chain") {
  dgd::Rng rng(5);
  auto a = DiffArray::make({3, 4}, true);
  auto v = DiffArray::make({4}, true);
  for (double& x : a->values) x = rng.normal();
  for (double& x : v->values) x = rng.normal();
  auto check = testsupport::gradcheck({a, v}, [&](Tape& tape) {
    auto h = tape.add_rowvec(a, v);
    auto r = tape.relu(tape.add_scalar(h, 0.1));
    auto s = tape.logsumexp_lastdim(tape.log_softmax(r));
    auto c = tape.clamp(tape.softmax(a), 0.05, 0.9);
    return tape.add(tape.sum(s), tape.add(tape.mean(c), tape.logsumexp(v)));
  });
  INFO(check.worst);
  CHECK(check.max_rel < 1e-4);
}

TEST_CASE("gather and select backward scatter correctly") {
  auto m = DiffArray::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tape t;
  auto g = t.gather_rows(m, {2, 0, 2});
  CHECK(g->values == std::vector<double>{5, 6, 1, 2, 5, 6});
  auto sel = t.select_per_row(g, {1, 0, 1});
  CHECK(sel->values == std::vector<double>{6, 1, 6});
  t.backward(t.sum(sel));
  // row 0 selected col 0 once; row 2 selected col 1 twice
  CHECK(m->grad == std::vector<double>{1, 0, 0, 0, 0, 2});

  CHECK_THROWS_AS(t.gather_rows(m, {3}), dgd::IndexError);
  Tape t2;
  auto g2 = t2.gather_rows(m, {0});
  CHECK_THROWS_AS(t2.select_per_row(g2, {5}), dgd::IndexError);
}

TEST_CASE("values and grad always share shape; non-grad arrays never touched") {
  auto x = DiffArray::make({4, 7}, false);
  CHECK(x->grad.size() == x->values.size());
  auto y = DiffArray::make({4, 7}, true);
  for (double& v : y->values) v = 1.0;
  Tape t;
  t.backward(t.sum(t.mul(x, y)));
  for (double g : x->grad) CHECK(g == 0.0);  // requires_grad=false stays untouched
}

TEST_CASE("determinism: identical seeds give bitwise-identical values and grads") {
  auto run = [](std::uint64_t seed) {
    dgd::Rng rng(seed);
    auto w = DiffArray::make({5, 5}, true);
    auto x = DiffArray::make({5, 3}, true);
    for (double& v : w->values) v = rng.normal();
    for (double& v : x->values) v = rng.uniform(-1.0, 1.0);
    Tape t;
    auto loss = t.sum(t.sigmoid(t.matmul(w, x)));
    t.backward(loss);
    std::vector<double> out = w->grad;
    out.insert(out.end(), x->grad.begin(), x->grad.end());
    out.push_back(loss->value());
    return out;
  };
  CHECK(run(42) == run(42));
}
