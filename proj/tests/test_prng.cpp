#include <doctest.h>

#include <algorithm>
#include <vector>

#include "evlog/prng.hpp"

using namespace evlog;

TEST_CASE("same seed reproduces the identical sequence") {
  Prng a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Prng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) with a sane mean") {
  Prng rng(99);
  double total = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    total += u;
  }
  CHECK(total / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("gaussian moments") {
  Prng rng(7);
  double total = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    total += g;
    sq += g * g;
  }
  CHECK(total / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("below is bounded and covers the range") {
  Prng rng(3);
  std::vector<int> seen(10, 0);
  for (int i = 0; i < 5000; ++i) seen[rng.below(10)] += 1;
  for (const int count : seen) CHECK(count > 300);
}

TEST_CASE("derive_seed decorrelates adjacent tags") {
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  Prng a(5), b(5);
  a.shuffle(v1.data(), v1.size());
  b.shuffle(v2.data(), v2.size());
  CHECK(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}
