#pragma once

#include <cstdint>

namespace lutloc {

/// SplitMix64 generator (Steele, Lea & Flood). Chosen over <random> engines
/// because its output is fully specified by the algorithm, so streams are
/// reproducible across platforms and standard library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Independent per-run stream: the experiment seed and the run index are each
/// passed through the SplitMix64 mixer before combining, so neighbouring
/// seeds do not share run streams.
inline SplitMix64 run_stream(std::uint64_t seed, std::uint64_t run_id) {
  SplitMix64 a(seed);
  SplitMix64 b(~run_id * 0x9E3779B97F4A7C15ull + 0x7F4A7C15ull);
  return SplitMix64(a.next() ^ b.next());
}

}  // namespace lutloc
