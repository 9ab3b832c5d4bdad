// Copyright 2026 The nflbench Authors.
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

#ifndef NFLBENCH_RNG_HPP_
#define NFLBENCH_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nflbench {

// Stream keys are hashed from (seed, path...) so that any task can construct
// its own generator from coordinates alone. Results never depend on the order
// in which streams are created or on which thread consumes them.
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t DeriveSeed(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> path);

class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : RngStream(DeriveSeed(seed, path)) {}

  Engine& engine() { return engine_; }

  // Uniform on [0, 1).
  double Uniform();
  double Normal();
  double Gamma(double shape, double scale);
  std::size_t UniformIndex(std::size_t n);

 private:
  Engine engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace nflbench

#endif  // NFLBENCH_RNG_HPP_
