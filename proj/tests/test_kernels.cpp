#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "evlog/kern/kernels.hpp"
#include "evlog/prng.hpp"
#include "oracles.hpp"

using namespace evlog;

namespace {

std::vector<double> random_vec(Prng& rng, size_t n, double lo = -2.0,
                               double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Sizes chosen to exercise the vector body, the 4-wide tail and the scalar
// remainder.
const size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17,
                         31, 64, 100, 255, 1024, 1000};

}  // namespace

TEST_CASE("scalar kernels match simple definitions") {
  const auto& k = kern::scalar_kernels();
  Prng rng(11);
  const auto a = random_vec(rng, 37);
  const auto b = random_vec(rng, 37);
  double want = 0.0;
  for (size_t i = 0; i < a.size(); ++i) want += a[i] * b[i];
  CHECK(k.dot(a.data(), b.data(), a.size()) == doctest::Approx(want).epsilon(1e-14));
  CHECK(k.sum(a.data(), a.size()) ==
        doctest::Approx(std::accumulate(a.begin(), a.end(), 0.0)).epsilon(1e-14));
}

TEST_CASE("SIMD variant agrees with the scalar reference") {
  const kern::Kernels* simd = kern::avx2_kernels();
  if (simd == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence suite skipped on this host");
    return;
  }
  const auto& ref = kern::scalar_kernels();
  Prng rng(1337);

  for (const size_t n : kSizes) {
    CAPTURE(n);
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    const double tol = 1e-13 * (static_cast<double>(n) + 1.0);

    CHECK(std::abs(simd->dot(a.data(), b.data(), n) -
                   ref.dot(a.data(), b.data(), n)) <= tol);
    CHECK(std::abs(simd->sum(a.data(), n) - ref.sum(a.data(), n)) <= tol);
    CHECK(std::abs(simd->sumsq_centered(a.data(), 0.3, n) -
                   ref.sumsq_centered(a.data(), 0.3, n)) <= tol);

    std::vector<double> y1 = b, y2 = b;
    simd->axpy(0.77, a.data(), y1.data(), n);
    ref.axpy(0.77, a.data(), y2.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

    std::vector<double> s1(n), s2(n);
    simd->scale_shift(a.data(), 1.5, -0.25, s1.data(), n);
    ref.scale_shift(a.data(), 1.5, -0.25, s2.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-15));

    std::vector<double> r1(n), r2(n);
    simd->relu(a.data(), r1.data(), n);
    ref.relu(a.data(), r2.data(), n);
    CHECK(r1 == r2);  // exact: max against zero has one rounding

    std::vector<double> g1(n), g2(n);
    simd->relu_grad(a.data(), b.data(), g1.data(), n);
    ref.relu_grad(a.data(), b.data(), g2.data(), n);
    CHECK(g1 == g2);
  }
}

TEST_CASE("adam kernel variants agree over many steps") {
  const kern::Kernels* simd = kern::avx2_kernels();
  if (simd == nullptr) return;
  const auto& ref = kern::scalar_kernels();
  Prng rng(5);
  const size_t n = 37;
  auto p1 = random_vec(rng, n), g = random_vec(rng, n);
  auto p2 = p1;
  std::vector<double> m1(n, 0.0), v1(n, 0.0), m2(n, 0.0), v2(n, 0.0);
  for (int t = 1; t <= 50; ++t) {
    const double c1 = 1.0 - std::pow(0.9, t);
    const double c2 = 1.0 - std::pow(0.98, t);
    for (auto& x : g) x = rng.uniform(-1.0, 1.0);
    simd->adam_update(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9,
                      0.98, 1e-9, c1, c2);
    ref.adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9,
                    0.98, 1e-9, c1, c2);
  }
  for (size_t i = 0; i < n; ++i) CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-13));
}

TEST_CASE("adam kernel matches the scalar recurrence oracle") {
  const auto& k = kern::active();
  oracle::ScalarAdam ora{0.9, 0.98, 1e-9};
  double p = 0.4;
  double m = 0.0, v = 0.0;
  double p_oracle = 0.4;
  Prng rng(21);
  for (int t = 1; t <= 100; ++t) {
    const double g = rng.uniform(-1.0, 1.0);
    const double c1 = 1.0 - std::pow(0.9, t);
    const double c2 = 1.0 - std::pow(0.98, t);
    k.adam_update(&p, &g, &m, &v, 1, 1e-3, 0.9, 0.98, 1e-9, c1, c2);
    p_oracle = ora.step(p_oracle, g, 1e-3);
    CHECK(std::abs(p - p_oracle) < 1e-12);
  }
}

TEST_CASE("dispatch honours the environment override") {
  // The active table must be one of the known implementations.
  const auto& k = kern::active();
  const bool is_scalar = std::string(k.name) == "scalar";
  const bool is_avx2 = std::string(k.name) == "avx2";
  CHECK((is_scalar || is_avx2));
  if (is_avx2) CHECK(kern::avx2_kernels() != nullptr);
}
