#pragma once

#include <cstdint>
#include <string_view>

namespace deltashap {

// Counter-based generator: output i is splitmix64(key + i * gamma). The
// sequence depends only on (key, i), so it is identical on every platform and
// independent of the standard library's distribution implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // Named sub-stream of a root seed, e.g. substream(seed, "permutations", i).
  static CounterRng substream(std::uint64_t root_seed, std::string_view name,
                              std::uint64_t index = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace deltashap
