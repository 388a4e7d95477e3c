#pragma once

// Counter-based deterministic random number generator.
//
// Every random draw in the toolkit (embedder weights, transformation jitter,
// synthetic textures) comes from this generator so that a (seed, stream)
// pair reproduces the exact same values on any platform. The output function
// is the splitmix64 finalizer applied to an affine counter sequence; all
// arithmetic is wrapping uint64, and doubles are built from the top 53 bits,
// so results are bit-identical everywhere.

#include <cstdint>

namespace advsticker {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

// Stream ids keep draws for unrelated purposes decorrelated under one seed.
enum class RngStream : std::uint64_t {
  kWeights = 0x01,
  kJitter = 0x02,
  kStickerInit = 0x03,
  kFace = 0x04,
  kGallery = 0x05,
  kTest = 0xFF,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream)
      : base_(detail::mix64(seed * detail::kGolden + 1) ^
              detail::mix64(static_cast<std::uint64_t>(stream) * detail::kGolden)),
        counter_(0) {}

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(base_ + counter_ * detail::kGolden);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi].
  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  // Symmetric uniform in [center - half, center + half].
  double jittered(double center, double half) {
    return center + (2.0 * next_double() - 1.0) * half;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_;
};

}  // namespace advsticker
