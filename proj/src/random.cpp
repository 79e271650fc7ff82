#include "deltashap/random.hpp"

#include <cmath>
#include <numbers>

namespace deltashap {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng CounterRng::substream(std::uint64_t root_seed,
                                 std::string_view name, std::uint64_t index) {
  std::uint64_t key = splitmix64(root_seed ^ fnv1a(name));
  key = splitmix64(key ^ splitmix64(index));
  return CounterRng(key);
}

std::uint64_t CounterRng::next_u64() {
  return splitmix64(key_ + (counter_++) * kGamma);
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double CounterRng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace deltashap
