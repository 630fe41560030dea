#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "rieszlab/errors.hpp"
#include "rieszlab/exact.hpp"

namespace rieszlab {

inline std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the stream owned by (stage, replica). Every sampler derives its
/// stream through this, so results never depend on worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t replica) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ (0x9e3779b97f4a7c15ULL + stage);
  h = splitmix64(s);
  s = h ^ (0xc2b2ae3d27d4eb4fULL + replica);
  return splitmix64(s);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stage, std::uint64_t replica) {
  return std::mt19937_64(derive_seed(master, stage, replica));
}

/// Unbiased uniform draw from {0, ..., n} (n >= 0, arbitrary precision).
inline BigInt uniform_bigint(std::mt19937_64 &rng, const BigInt &n) {
  if (n < 0) throw InvariantError("uniform_bigint: negative bound");
  if (n == 0) return BigInt(0);
  if (n < BigInt(std::numeric_limits<std::uint64_t>::max())) {
    const std::uint64_t range = n.convert_to<std::uint64_t>() + 1;
    const std::uint64_t reject_below = (0 - range) % range;  // 2^64 mod range
    for (;;) {
      const std::uint64_t r = rng();
      if (r >= reject_below) return BigInt(r % range);
    }
  }
  const std::size_t bits = boost::multiprecision::msb(n) + 1;
  const std::size_t words = (bits + 63) / 64;
  for (;;) {
    BigInt v = 0;
    for (std::size_t w = 0; w < words; ++w) v = (v << 64) | BigInt(rng());
    v >>= (words * 64 - bits);
    if (v <= n) return v;
  }
}

/// Inverse-CDF sampler for a finite pmf with exact rational weights.
/// Thresholds are floor(cumulative * 2^64); the bias per atom is below
/// 2^-64, and draws are a pure function of the stream state.
class DiscreteSampler {
 public:
  DiscreteSampler(std::vector<BigInt> values, const std::vector<Rational> &weights)
      : values_(std::move(values)) {
    if (values_.empty() || values_.size() != weights.size())
      throw ValidationError("DiscreteSampler: empty or mismatched pmf");
    const BigInt two64 = BigInt(1) << 64;
    Rational cum = 0;
    thresholds_.reserve(values_.size());
    for (const Rational &w : weights) {
      cum += w;
      BigInt t = (boost::multiprecision::numerator(cum) * two64) /
                 boost::multiprecision::denominator(cum);
      if (t > two64) t = two64;
      thresholds_.push_back(t);
    }
    if (cum != 1) throw ValidationError("DiscreteSampler: weights do not sum to 1");
  }

  const BigInt &sample(std::mt19937_64 &rng) const {
    const BigInt u(rng());
    for (std::size_t i = 0; i + 1 < thresholds_.size(); ++i)
      if (u < thresholds_[i]) return values_[i];
    return values_.back();
  }

 private:
  std::vector<BigInt> values_;
  std::vector<BigInt> thresholds_;
};

}  // namespace rieszlab
