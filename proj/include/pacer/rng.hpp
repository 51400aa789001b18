#pragma once
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pacer {

// All randomness flows through explicit streams seeded by stable_seed().
// std:: distributions are implementation-defined, so the generator and the
// uniform/normal transforms are spelled out here; results are identical
// across platforms, compilers, and worker-thread counts.

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Sub-seed for (master seed, stage tag, replication, user/index). Streams for
// different stages or users never depend on scheduling order.
inline std::uint64_t stable_seed(std::uint64_t master, std::string_view stage,
                                 std::uint64_t rep = 0, std::uint64_t idx = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= hash_tag(stage);
  h ^= splitmix64(s);
  s ^= rep * 0xd1342543de82ef95ull + 0x632be59bd9b4e019ull;
  h ^= splitmix64(s);
  s ^= idx * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull;
  h ^= splitmix64(s);
  return h;
}

class Rng {  // xoshiro256++
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t r = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return r;
  }

  double uniform() { return (next() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t below(std::uint64_t n) {  // unbiased [0, n)
    const std::uint64_t lim = n == 0 ? 0 : (~std::uint64_t(0)) - (~std::uint64_t(0)) % n;
    std::uint64_t r;
    do { r = next(); } while (r >= lim);
    return r % n;
  }

  double normal() {  // Box-Muller with cached spare
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do { u1 = uniform(); } while (u1 <= 0.0);
    const double u2 = uniform();
    const double m = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.283185307179586 * u2;
    spare_ = m * std::sin(th);
    have_spare_ = true;
    return m * std::cos(th);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace pacer
