#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace agnostic {

// SplitMix64 finalizer (Steele, Lea, Flood).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Root seed plus a derivation path. Two specs with the same master seed and
/// path describe the same stream; every fork appends one 32-bit label.
struct SeedSpec {
  std::uint64_t master = 0;
  std::vector<std::uint32_t> path;

  SeedSpec() = default;
  explicit SeedSpec(std::uint64_t master_seed, std::vector<std::uint32_t> labels = {})
      : master(master_seed), path(std::move(labels)) {}

  SeedSpec child(std::uint32_t label) const {
    SeedSpec out = *this;
    out.path.push_back(label);
    return out;
  }

  /// 64-bit stream key: the master seed hashed through every path label.
  std::uint64_t key() const {
    std::uint64_t k = mix64(master ^ 0x6A09E667F3BCC909ULL);
    for (std::uint32_t label : path) {
      k = mix64(k ^ ((static_cast<std::uint64_t>(label) + 1) * kGoldenGamma));
      k = mix64(k + kGoldenGamma);
    }
    return k;
  }

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

inline SeedSpec derive_rng(const SeedSpec& seed, std::uint32_t label) { return seed.child(label); }

/// Counter-based generator: output i is mix64(key + (i + 1) * gamma), i.e. a
/// SplitMix64 stream keyed by SeedSpec::key(). Satisfies
/// UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(const SeedSpec& seed) : key_(seed.key()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  // Uniform integer in [0, n), n > 0. Lemire's multiply-shift with rejection,
  // so the result is exactly uniform.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace agnostic
