#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace prco {

// splitmix64 step; also used to expand seeds into generator state.
inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed, a tag and up to
// three indices. Streams are how the trainer keeps rollouts, caption
// selection and evaluation decorrelated but reproducible.
inline uint64_t stream_seed(uint64_t master, std::string_view tag,
                            uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = master ^ 0x51caf8f6fc27169bULL;
  for (char ch : tag) {
    h ^= static_cast<uint64_t>(static_cast<unsigned char>(ch));
    h *= 0x100000001b3ULL;
  }
  uint64_t s = h;
  h ^= splitmix64_next(s) + a;
  h = (h ^ (h >> 29)) * 0xff51afd7ed558ccdULL;
  h ^= b * 0xc4ceb9fe1a85ec53ULL + 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  h ^= c + 0x632be59bd9b4e019ULL;
  h = (h ^ (h >> 32)) * 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 29);
}

// xoshiro256++ with splitmix-expanded seeding. All randomness in the
// library goes through this class so runs depend only on the seeds.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0. Rejection-free scaling is fine here,
  // the modulo bias at these n is far below anything we measure.
  uint32_t next_below(uint32_t n) {
    return static_cast<uint32_t>(next_u64() % static_cast<uint64_t>(n));
  }

  // Draws an index from an explicit probability vector (sums to ~1).
  size_t categorical(std::span<const double> probs) {
    const double u = next_double();
    double cum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return probs.size() - 1;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace prco
