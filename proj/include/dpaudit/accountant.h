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

#ifndef DPAUDIT_ACCOUNTANT_H_
#define DPAUDIT_ACCOUNTANT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpaudit {

// Parameters of a (sub-sampled) Gaussian mechanism. `sigma` is the noise
// multiplier: the noise standard deviation is sigma * sensitivity.
struct MechanismSpec {
  double sigma = 1.0;
  double q = 1.0;
  int64_t steps = 1;
  double sensitivity = 1.0;

  absl::Status Validate() const;
};

struct PldOptions {
  // Grid spacing of privacy-loss values.
  double discretization = 1e-4;
  // Losses are kept in [-truncation, truncation]; larger ones are folded
  // into the infinity atom, smaller ones rounded up to -truncation.
  double truncation = 30.0;
  // Tail mass dropped from each end after every convolution. Upper tails go
  // to the infinity atom, lower tails are rounded up.
  double tail_mass = 1e-15;
};

// A privacy-loss distribution on the grid omega_i = (offset + i) * h plus an
// atom at +infinity.
struct DiscretePld {
  int64_t offset = 0;
  std::vector<double> mass;
  double infinity_mass = 0.0;

  double TotalMass() const;
};

// Numerical privacy-loss-distribution accountant for the T-fold composition
// of the Poisson sub-sampled Gaussian mechanism under add/remove neighbours.
//
// Each single-step loss is discretized pessimistically (every loss value is
// rounded up to the next grid point) so reported eps values are upper bounds
// on the true ones, up to the drop of at most `tail_mass` per convolution.
// Both neighbouring directions are composed and every query reports the
// worse of the two.
class PldAccountant {
 public:
  static absl::StatusOr<PldAccountant> Build(const MechanismSpec& spec,
                                             const PldOptions& options = {});

  // Smallest eps >= 0 whose hockey-stick divergence is at most delta.
  // OutOfRange when the infinity atom alone already exceeds delta.
  absl::StatusOr<double> EpsOfDelta(double delta) const;

  // EpsOfDelta for many deltas with a single pass over the grid. Entries
  // that cannot be resolved are +infinity.
  std::vector<double> EpsOfDeltas(std::span<const double> deltas) const;

  double DeltaOfEps(double eps) const;

  const MechanismSpec& spec() const { return spec_; }
  const PldOptions& options() const { return options_; }
  // The direction whose first world is the mixture (record removed).
  const DiscretePld& remove_direction() const { return remove_; }
  // The direction whose first world is N(0, sigma^2).
  const DiscretePld& add_direction() const { return add_; }

 private:
  PldAccountant() = default;

  MechanismSpec spec_;
  PldOptions options_;
  DiscretePld remove_;
  DiscretePld add_;
};

// Composition of GDP mechanisms: sqrt(sum mu_i^2).
double GdpCompose(std::span<const double> mus);

// Converts a per-step mu lower bound into an end-to-end eps estimate at
// delta. With q = 1 this is the GDP composition sqrt(steps) * mu; otherwise
// the per-step bound is read as a noise multiplier 1 / mu and passed through
// the PLD accountant. The result is an estimate, not a certified bound.
absl::StatusOr<double> StepsToEndEps(double mu_step_lower, int64_t steps,
                                     double q, double delta,
                                     const PldOptions& options = {});

}  // namespace dpaudit

#endif  // DPAUDIT_ACCOUNTANT_H_
