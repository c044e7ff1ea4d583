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

#include "dpaudit/mechanisms.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpaudit/status_macros.h"

namespace dpaudit {
namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t Mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

absl::Status CheckCount(int64_t n) {
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("need at least one observation, got %d", n));
  }
  return absl::OkStatus();
}

}  // namespace

uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  return Mix(Mix(seed + kGolden) ^ Mix(index * kGolden + 0x632BE59BD9B4E019ULL));
}

CounterRng::CounterRng(uint64_t seed) : key_(Mix(seed)) {}

uint64_t CounterRng::NextU64() {
  ++counter_;
  return Mix(key_ + counter_ * kGolden);
}

double CounterRng::Uniform() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

bool CounterRng::Bernoulli(double p) { return Uniform() < p; }

uint64_t CounterRng::Below(uint64_t bound) {
  // Rejection keeps the draw exactly uniform.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % bound;
}

absl::StatusOr<ObservationPair> SimulateSubsampledGaussianPair(double sigma,
                                                               double q,
                                                               int64_t n,
                                                               uint64_t seed) {
  RETURN_IF_ERROR(CheckCount(n));
  const MechanismSpec spec{sigma, q, 1, 1.0};
  RETURN_IF_ERROR(spec.Validate());
  ObservationPair out;
  out.d = {World::kD, {}, seed, spec};
  out.dprime = {World::kDprime, {}, seed, spec};
  out.d.scores.resize(n);
  out.dprime.scores.resize(n);
  CounterRng rd(DeriveSeed(seed, 0));
  CounterRng rp(DeriveSeed(seed, 1));
  for (int64_t i = 0; i < n; ++i) out.d.scores[i] = sigma * rd.Normal();
  for (int64_t i = 0; i < n; ++i) {
    // The inclusion draw is skipped at q = 1 so the stream matches the plain
    // Gaussian mechanism bit for bit.
    const bool present = q >= 1.0 || rp.Bernoulli(q);
    const double noise = sigma * rp.Normal();
    out.dprime.scores[i] = present ? 1.0 + noise : noise;
  }
  return out;
}

absl::StatusOr<ObservationPair> SimulateGaussianPair(double sigma, int64_t n,
                                                     uint64_t seed) {
  return SimulateSubsampledGaussianPair(sigma, 1.0, n, seed);
}

absl::StatusOr<ObservationPair> SimulateRandomizedResponse(double eps,
                                                           int64_t n,
                                                           uint64_t seed) {
  RETURN_IF_ERROR(CheckCount(n));
  if (!(eps >= 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("eps must be >= 0, got %g", eps));
  }
  const double flip = 1.0 / (1.0 + std::exp(eps));
  ObservationPair out;
  out.d = {World::kD, std::vector<double>(n), seed, {}};
  out.dprime = {World::kDprime, std::vector<double>(n), seed, {}};
  CounterRng rd(DeriveSeed(seed, 0));
  CounterRng rp(DeriveSeed(seed, 1));
  for (int64_t i = 0; i < n; ++i) out.d.scores[i] = rd.Bernoulli(flip) ? 1.0 : 0.0;
  for (int64_t i = 0; i < n; ++i) {
    out.dprime.scores[i] = rp.Bernoulli(flip) ? 0.0 : 1.0;
  }
  return out;
}

void ParallelFor(int64_t count, int jobs,
                 const std::function<void(int64_t)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> workers;
  const int used = static_cast<int>(std::min<int64_t>(jobs, count));
  workers.reserve(used);
  for (int t = 0; t < used; ++t) {
    workers.emplace_back([&] {
      for (int64_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace dpaudit
