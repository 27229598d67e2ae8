#pragma once

#include <cmath>
#include <cstdint>

namespace optspline::rng {

// Counter-based generator: every draw is a pure function of
// (seed, stream, step, component, draw). Results do not depend on call
// order, so simulations are replayable and individual draws can be
// recomputed in isolation.

/// Named sub-streams so different consumers of one seed never collide.
enum Stream : std::uint64_t {
  kProcessNoise = 1,
  kMeasurementNoise = 2,
  kValidationProbe = 3,
  kTestFixture = 4,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_key(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t step, std::uint64_t component,
                                 std::uint64_t draw) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ step);
  h = mix64(h ^ component);
  h = mix64(h ^ draw);
  return h;
}

/// Uniform deviate in the open interval (0, 1).
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t step, std::uint64_t component,
                        std::uint64_t draw = 0) {
  const std::uint64_t h = counter_key(seed, stream, step, component, draw);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal deviate via Box-Muller on two counter draws.
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t step, std::uint64_t component) {
  const double u1 = uniform01(seed, stream, step, component, 0);
  const double u2 = uniform01(seed, stream, step, component, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace optspline::rng
