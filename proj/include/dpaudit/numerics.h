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

#ifndef DPAUDIT_NUMERICS_H_
#define DPAUDIT_NUMERICS_H_

#include <vector>

#include "absl/status/statusor.h"

namespace dpaudit {

// Standard normal CDF. Absolute error below 1e-15 for every finite x (the
// complementary error function is evaluated on the side that avoids
// cancellation). Total and monotone nondecreasing.
double StdNormalCdf(double x);

// log Phi(x), accurate deep into the left tail where Phi(x) underflows.
double LogStdNormalCdf(double x);

double StdNormalPdf(double x);

// Inverse of StdNormalCdf on the open interval (0, 1). Rational starting
// point (Wichura AS241) polished with one Halley step, so that
// |Phi(x) - p| <= 1e-12. Returns InvalidArgument for p outside (0, 1); the
// clamping policy belongs to callers.
absl::StatusOr<double> StdNormalQuantile(double p);

// Regularized incomplete beta I_x(a, b) for x in [0, 1], a > 0, b > 0.
absl::StatusOr<double> BetaCdf(double x, double a, double b);

// Inverse of BetaCdf in x: returns x with I_x(a, b) = p (within 1e-10).
// p = 0 and p = 1 map to 0 and 1.
absl::StatusOr<double> BetaQuantile(double p, double a, double b);

// Beta(a, b) density at x; zero outside (0, 1).
double BetaPdf(double x, double a, double b);

// Legendre nodes and weights on [0, 1]. Computed once per order and cached;
// the returned reference stays valid for the lifetime of the program.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& GaussLegendreUnit(int order);

}  // namespace dpaudit

#endif  // DPAUDIT_NUMERICS_H_
