#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace dsn {

// FNV-1a 64-bit hash (offset 0xcbf29ce484222325, prime 0x100000001b3).
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer: x + 0x9E3779B97F4A7C15, then the standard double xor-mul mix.
std::uint64_t splitmix64(std::uint64_t x);

// PCG32 (XSH-RR output, 64-bit LCG state, multiplier 6364136223846793005).
// A (seed, stream) pair identifies one reproducible stream; equal pairs give
// bit-identical output forever. Streams derived via substream()/derive() are
// statistically independent of the parent.
class Prng {
 public:
  explicit Prng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();  // high 32 bits drawn first

  double uniform();                        // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);    // [lo, hi)
  std::uint32_t uniform_int(std::uint32_t n);  // [0, n), rejection-sampled, unbiased
  double gaussian(double mean = 0.0, double stddev = 1.0);  // Box-Muller, two uniforms per call

  // Named child stream. Derived from the root seed and the parent stream id,
  // so the result does not depend on how much the parent has been consumed.
  Prng substream(std::string_view name) const;

  // Keyed child stream; equal (key, index) pairs give equal streams.
  static Prng derive(std::uint64_t key, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Fisher-Yates shuffle driven by rng.uniform_int.
template <typename T>
void shuffle(std::vector<T>& items, Prng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.uniform_int(static_cast<std::uint32_t>(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dsn
