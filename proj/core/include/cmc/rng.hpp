#pragma once

#include <cstdint>
#include <span>

namespace cmc {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

/// 64-bit finalizer used by splitmix64. Full-avalanche bijection.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based splittable random stream (splitmix64 family).
///
/// A stream is identified by a 64-bit key; the value at counter c is
/// mix64(key + (c+1)*gamma), so draws are pure functions of (key, counter).
/// Substreams are derived by hashing a word into the key, which is how the
/// simulator keys streams by (seed, replication, role, ...). Two consequences
/// the simulator relies on:
///   - runs are bit-reproducible and replications are independent streams,
///   - extending a horizon replays the identical prefix (counters 0..n).
class RandomStream {
 public:
  RandomStream() = default;
  explicit constexpr RandomStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  /// Derive an independent child stream from a word (role, index, ...).
  constexpr RandomStream sub(std::uint64_t word) const noexcept {
    return RandomStream(mix64(key_ ^ mix64(word + kGoldenGamma)));
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGoldenGamma);
  }

  /// Uniform double in [0, 1), 53 significant bits.
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Inverse-CDF draw from a probability vector. Never returns an index with
  /// zero probability (rounding spill falls back to the last positive entry).
  int categorical(std::uint64_t counter, std::span<const double> probs) const noexcept {
    const double u = uniform(counter);
    double cum = 0.0;
    int lastPositive = 0;
    for (int j = 0; j < static_cast<int>(probs.size()); ++j) {
      if (probs[j] > 0.0) lastPositive = j;
      cum += probs[j];
      if (u < cum) return probs[j] > 0.0 ? j : lastPositive;
    }
    return lastPositive;
  }

 private:
  std::uint64_t key_ = 0;
};

/// Stream roles used by the simulator; kept stable so that seeds written in
/// experiment reports remain replayable.
enum class StreamRole : std::uint64_t {
  InitialState = 1,
  PolicyDraw = 2,
  TransitionDraw = 3,
  AuxiliaryRow = 4,
};

constexpr RandomStream subStream(const RandomStream& s, StreamRole role) noexcept {
  return s.sub(static_cast<std::uint64_t>(role));
}

}  // namespace cmc
