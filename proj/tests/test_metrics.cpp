#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dgd/errors.hpp"
#include "dgd/metrics.hpp"
#include "dgd/random.hpp"
#include "support/oracles.hpp"

using dgd::adjusted_rand_index;

TEST_CASE("identical labelings score one, also after relabeling") {
  std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(adjusted_rand_index(a, a) == doctest::Approx(1.0));
  std::vector<int> relabeled{2, 2, 0, 0, 1, 1};
  CHECK(adjusted_rand_index(a, relabeled) == doctest::Approx(1.0));
}

TEST_CASE("worked example: [0,0,1,1] vs [0,0,1,2] is 4/7") {
  std::vector<int> a{0, 0, 1, 1}, b{0, 0, 1, 2};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(testsupport::pair_count_ari(a, b) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("one cluster vs all singletons is exactly zero") {
  std::vector<int> a{0, 0, 0, 0}, b{0, 1, 2, 3};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(0.0));
}

TEST_CASE("contract errors on bad input") {
  std::vector<int> a{0, 1}, b{0};
  CHECK_THROWS_AS(adjusted_rand_index(a, b), dgd::ContractError);
  std::vector<int> single{0};
  CHECK_THROWS_AS(adjusted_rand_index(single, single), dgd::ContractError);
}

TEST_CASE("symmetry, relabeling invariance, and the pair-count oracle") {
  dgd::Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(59);
    const int ka = 1 + static_cast<int>(rng.index(6));
    const int kb = 1 + static_cast<int>(rng.index(6));
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.index(ka));
      b[i] = static_cast<int>(rng.index(kb));
    }
    const double fast = adjusted_rand_index(a, b);
    const double oracle = testsupport::pair_count_ari(a, b);
    CHECK(std::fabs(fast - oracle) < 1e-12);
    CHECK(adjusted_rand_index(b, a) == doctest::Approx(fast).epsilon(1e-15));
    // relabel a by a fixed permutation of ids
    std::vector<int> relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = (a[i] + 3) % (ka + 3);
    CHECK(adjusted_rand_index(relabeled, b) == doctest::Approx(fast).epsilon(1e-12));
  }
}

TEST_CASE("contingency table margins are consistent") {
  std::vector<int> a{0, 0, 1, 2, 2, 2}, b{1, 1, 0, 0, 1, 1};
  const auto t = dgd::ContingencyTable::build(a, b);
  CHECK(t.total == 6);
  long long row_total = 0, col_total = 0, cell_total = 0;
  for (long long v : t.row_sums) row_total += v;
  for (long long v : t.col_sums) col_total += v;
  for (long long v : t.counts) cell_total += v;
  CHECK(row_total == 6);
  CHECK(col_total == 6);
  CHECK(cell_total == 6);
}

TEST_CASE("sem matches the definition") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const double mean = dgd::mean_of(v);
  CHECK(mean == doctest::Approx(2.5));
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 3.0);
  CHECK(dgd::sem_of(v) == doctest::Approx(sd / 2.0));
  CHECK(dgd::sem_of({5.0}) == 0.0);
}
