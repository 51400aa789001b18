#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "pacer/rng.hpp"

using namespace pacer;

TEST_CASE("stable_seed is a pure function of its arguments") {
  CHECK(stable_seed(42, "eval", 1, 2) == stable_seed(42, "eval", 1, 2));
  // pinned so an accidental reseeding scheme change cannot slip through
  CHECK(stable_seed(42, "eval", 1, 2) == 5625596519794541789ull);
  CHECK(stable_seed(42, "eval") == 16283426573179220283ull);
}

TEST_CASE("stable_seed separates every key field") {
  const std::uint64_t base = stable_seed(42, "eval", 3, 7);
  CHECK(stable_seed(43, "eval", 3, 7) != base);
  CHECK(stable_seed(42, "train-sim", 3, 7) != base);
  CHECK(stable_seed(42, "eval", 4, 7) != base);
  CHECK(stable_seed(42, "eval", 3, 8) != base);

  // no collisions across a realistic block of (rep, idx) pairs
  std::set<std::uint64_t> seen;
  for (std::uint64_t rep = 0; rep < 10; ++rep)
    for (std::uint64_t idx = 0; idx < 1000; ++idx)
      seen.insert(stable_seed(42, "eval", rep, idx));
  CHECK(seen.size() == 10000);
}

TEST_CASE("generator streams replay exactly") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng c(42);
  CHECK(c.next() == 15021278609987233951ull);
  CHECK(c.next() == 5881210131331364753ull);
  CHECK(c.next() == 18149643915985481100ull);
  Rng d(42);
  CHECK(d.uniform() == doctest::Approx(0.81430514512290986).epsilon(1e-16));
}

TEST_CASE("uniform stays inside [0,1) and fills the range") {
  Rng rng(7);
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("bernoulli respects degenerate probabilities") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    CHECK(!rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

TEST_CASE("below is bounded and roughly uniform") {
  Rng rng(11);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const std::uint64_t v = rng.below(6);
    REQUIRE(v < 6);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("normal has the right first two moments") {
  Rng rng(5);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal replays including the cached spare") {
  Rng a(9), b(9);
  for (int i = 0; i < 7; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("shuffle permutes and replays") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(13), b(13);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  CHECK(v != std::vector<int>(v.size()) /* not all zero */);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> ident(50);
  std::iota(ident.begin(), ident.end(), 0);
  CHECK(sorted == ident);
}
