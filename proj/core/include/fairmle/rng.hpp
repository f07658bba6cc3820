// Copyright 2026 The fairmle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRMLE_RNG_HPP_
#define FAIRMLE_RNG_HPP_

#include <cstdint>
#include <random>

namespace fairmle {

// Substreams. Every variable of a simulated dataset is drawn from its own
// engine so that, e.g., changing the outcome noise leaves X untouched.
enum class Stream : std::uint64_t {
  kCovariate = 1,
  kSensitive = 2,
  kMediatorM = 3,
  kMediatorL = 4,
  kOutcomeNoise = 5,
  kMissingness = 6,
  kEvaluation = 7,
  kReplication = 8,
};

// SplitMix64 finalizer. Used only for seed derivation.
std::uint64_t splitmix64(std::uint64_t z);

// Seed for substream `stream` of master seed `seed`:
//   splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15 * stream)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

// mt19937_64 is fully specified by the standard; the distributions used on
// top of it come from Boost.Random, whose output does not vary between
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream) : engine_(derive_seed(seed, stream)) {}

  double uniform();           // [0, 1)
  double normal();            // N(0, 1)
  bool bernoulli(double p);   // P(true) = p
  // Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fairmle

#endif  // FAIRMLE_RNG_HPP_
