#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>


namespace rehearsal {

// splitmix64, used for seeding and for deriving independent stream seeds
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// order-sensitive combiner: derive_seed(a,b) != derive_seed(b,a)
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL + (salt << 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b + salt);
}

// stream purposes, so geometry / trial data / ad-hoc draws never collide
enum class stream : std::uint64_t {
  geometry = 0x67656f6dULL,
  trial = 0x7472696cULL,
  scratch = 0x73637261ULL,
};

// xoshiro256++ with an explicit spare slot for Box-Muller pairs.
// Self-contained so that identical seeds give identical doubles on any
// platform, independent of the standard library's distributions.
class rng {
 public:
  explicit rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static rng for_stream(std::uint64_t master, stream purpose, std::uint64_t index = 0) {
    return rng(derive_seed(derive_seed(master, static_cast<std::uint64_t>(purpose)), index));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on (0, 1]; never 0, so log() below is finite
  double uniform01() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Marsaglia polar method; rejection is deterministic given the stream
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  template <typename Derived>
  void fill_gaussian(Eigen::PlainObjectBase<Derived>& m) {
    double* data = m.data();
    const Eigen::Index count = m.size();
    for (Eigen::Index i = 0; i < count; ++i) data[i] = gaussian();
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rehearsal
