#pragma once

#include <cmath>
#include <cstdint>

#include "cemb/common.hpp"

namespace cemb {

// Counter-based pseudo-random generator. Every draw is a pure function of
// (seed, stream, counter), so rows and exogenous streams can be generated
// in any order, or in parallel, and still be bit-identical across runs.
//
// The mixer is the SplitMix64 finalizer applied three times, folding in the
// stream id and the counter between applications. Uniform doubles use the
// top 53 bits; normals use a Box-Muller transform consuming two uniforms at
// counters (2c, 2c+1) of the same stream.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ counter);
  return h;
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(mix(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log argument.
inline double uniform01_open(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>((mix(seed, stream, counter) >> 11) + 1) * 0x1.0p-53;
}

inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                     double mean, double stddev) {
  double u1 = uniform01_open(seed, stream, 2 * counter);
  double u2 = uniform01(seed, stream, 2 * counter + 1);
  double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  return mean + stddev * z;
}

// Stream ids are derived from strings (exogenous variable names, dataset
// tags) so that adding a variable does not shift every other stream.
inline std::uint64_t stream_id(const std::string& name) {
  // FNV-1a, then one splitmix round to spread the bits.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(h);
}

}  // namespace rng
}  // namespace cemb
