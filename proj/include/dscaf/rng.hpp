#ifndef DSCAF_RNG_HPP_
#define DSCAF_RNG_HPP_

#include <cstdint>
#include <limits>
#include <string_view>

namespace dscaf {

// Finalizer of SplitMix64; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over bytes. Used to key substreams by opaque ids and to hash
// configs and catalogs.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 generator. Satisfies UniformRandomBitGenerator so it can feed
// the <random> distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Stream purposes. Distinct tags give independent substreams for the same
// (seed, key) pair.
enum class StreamTag : std::uint64_t {
  kCatalog = 1,
  kSeller = 2,
  kRct = 3,
  kRollout = 4,
  kRandomPolicy = 5,
  kFolds = 6,
  kBootstrap = 7,
};

// Independent generator for (seed, tag, key, index). Results depend only on
// these four values, never on the order in which substreams are requested.
inline SplitMix64 substream(std::uint64_t seed, StreamTag tag,
                            std::uint64_t key, std::uint64_t index = 0) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ key);
  h = mix64(h ^ (index + 0x3c6ef372fe94f82bULL));
  return SplitMix64(h);
}

}  // namespace dscaf

#endif  // DSCAF_RNG_HPP_
