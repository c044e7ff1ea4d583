// Copyright 2026 The dpaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPAUDIT_MECHANISMS_H_
#define DPAUDIT_MECHANISMS_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "absl/status/statusor.h"
#include "dpaudit/accountant.h"

namespace dpaudit {

// Derives the seed of sub-stream `index` from `seed`. Distinct indices give
// distinct, well-mixed seeds.
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

// Counter-based generator: the i-th output is splitmix64(key + i * golden),
// so every value is a pure function of (seed, position).
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed);

  uint64_t NextU64();
  // Uniform on the open interval (0, 1).
  double Uniform();
  // Standard normal by the Box-Muller transform.
  double Normal();
  bool Bernoulli(double p);
  // Uniform integer in [0, bound).
  uint64_t Below(uint64_t bound);

  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class World { kD = 0, kDprime = 1 };

struct ObservationSet {
  World world = World::kD;
  std::vector<double> scores;
  uint64_t seed = 0;
  MechanismSpec spec;
};

struct ObservationPair {
  ObservationSet d;
  ObservationSet dprime;
};

// D ~ N(0, sigma^2), D' ~ N(1, sigma^2); n scores each.
absl::StatusOr<ObservationPair> SimulateGaussianPair(double sigma, int64_t n,
                                                     uint64_t seed);

// D ~ N(0, sigma^2); each D' score is N(1, sigma^2) with probability q and
// N(0, sigma^2) otherwise. With q = 1 this is SimulateGaussianPair.
absl::StatusOr<ObservationPair> SimulateSubsampledGaussianPair(double sigma,
                                                               double q,
                                                               int64_t n,
                                                               uint64_t seed);

// Randomized response: D reports bit 0 and D' bit 1, each flipped with
// probability 1 / (1 + e^eps). Scores are 0.0 or 1.0.
absl::StatusOr<ObservationPair> SimulateRandomizedResponse(double eps,
                                                           int64_t n,
                                                           uint64_t seed);

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Callers derive any
// randomness from i, so results do not depend on the number of jobs.
void ParallelFor(int64_t count, int jobs, const std::function<void(int64_t)>& fn);

}  // namespace dpaudit

#endif  // DPAUDIT_MECHANISMS_H_
