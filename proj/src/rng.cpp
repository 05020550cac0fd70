#include "vabal/rng.hpp"

#include <cmath>

#include "vabal/error.hpp"

namespace vabal {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer; bijective mix of a 64-bit word.
std::uint64_t mix(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_key(std::uint64_t base, std::string_view label, std::uint64_t index) {
  std::uint64_t k = mix(base ^ kGolden);
  k = mix(k ^ fnv1a(label));
  k = mix(k ^ (index * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
  return k;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label, std::uint64_t index)
    : key_(derive_key(seed, label, index)) {}

RngStream RngStream::substream(std::string_view label, std::uint64_t index) const {
  RngStream s;
  s.key_ = derive_key(key_, label, index);
  return s;
}

std::uint64_t RngStream::next_u64() {
  return mix(key_ + ++counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw ContractError("RngStream::uniform_below: n must be > 0");
  // modulo rejection; the loop terminates with overwhelming probability
  for (;;) {
    const std::uint64_t v = next_u64();
    const std::uint64_t r = v % n;
    if (v - r <= ~std::uint64_t{0} - (n - 1)) return r;
  }
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 in (0,1] keeps the log finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

}  // namespace vabal
