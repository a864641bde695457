#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace scrl {

// Reproducible random stream addressed by (seed, stream id).
//
// The engine (std::mt19937_64) is fully specified by the C++ standard, and
// the uniform/normal transforms below are written out by hand, so a given
// (seed, stream) pair produces the same sequence on every platform and
// standard-library build.  Training code gives each consumer (weight init,
// environment noise, policy noise, replay sampling, ...) its own stream so
// that adding a consumer never shifts the draws seen by the others.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.  No cached second value: one call costs
  // two engine draws, and copies of a stream never carry hidden state.
  double normal() {
    const double u1 = 1.0 - uniform();  // in (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer in [0, n) for n ≥ 1.  Fixed-point multiply; the O(n/2^64)
  // bias is unobservable at replay-buffer scale and keeps the cost at one draw.
  std::int64_t uniform_int(std::int64_t n) {
    return static_cast<std::int64_t>(
        (static_cast<unsigned __int128>(next_u64()) *
         static_cast<unsigned __int128>(n)) >>
        64);
  }

 private:
  static constexpr double kTwoPi = 6.28318530717958647692;
  std::mt19937_64 engine_;
};

// Stream ids shared by training, evaluation, and tests.
namespace stream {
inline constexpr std::uint64_t kInit = 1;    // network weight init
inline constexpr std::uint64_t kEnv = 2;     // environment resets, warmup actions
inline constexpr std::uint64_t kPolicy = 3;  // reparameterization noise
inline constexpr std::uint64_t kBuffer = 4;  // replay sampling
inline constexpr std::uint64_t kParam = 5;   // domain-randomization draws
inline constexpr std::uint64_t kEval = 6;    // harness evaluation episodes
}  // namespace stream

namespace detail {

// splitmix64 finalizer: full-avalanche mix of one word.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Child seed from a parent seed plus an index path, independent of evaluation
// order.  Parallel evaluation jobs (sweep cells, episode batches) each derive
// their own seed from the coordinates that identify them, so results do not
// depend on scheduling or on how many workers ran.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (const std::uint64_t p : parts) h = detail::splitmix64(h ^ p);
  return h;
}

}  // namespace scrl
