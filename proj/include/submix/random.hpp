// Copyright 2026 The SubMix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SUBMIX_RANDOM_HPP_
#define SUBMIX_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace submix {

// All randomness flows through a caller-owned 64-bit Mersenne Twister. The
// helpers below only consume raw engine output, so streams are reproducible
// across standard library implementations.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one engine call.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Standard normal via Box-Muller (two engine calls per draw).
inline double StandardNormal(Rng& rng) {
  double u1;
  do {
    u1 = Uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = Uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Zero-mean Laplace with the given scale, by inverse CDF.
inline double Laplace(Rng& rng, double scale) {
  double u;
  do {
    u = Uniform01(rng);
  } while (u <= 0.0);
  u -= 0.5;
  const double mag = -scale * std::log(1.0 - 2.0 * std::fabs(u));
  return u < 0 ? -mag : mag;
}

// SplitMix64 finalizer; used to derive independent child seeds from a master
// seed and an index.
inline std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace submix

#endif  // SUBMIX_RANDOM_HPP_
