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

#include "fairmle/rng.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace fairmle {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * stream));
}

double Rng::uniform() {
  return boost::random::uniform_01<double>{}(engine_);
}

double Rng::normal() {
  return boost::random::normal_distribution<double>{0.0, 1.0}(engine_);
}

bool Rng::bernoulli(double p) {
  return boost::random::bernoulli_distribution<double>{p}(engine_);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  return boost::random::uniform_int_distribution<std::uint64_t>{0, bound - 1}(
      engine_);
}

}  // namespace fairmle
