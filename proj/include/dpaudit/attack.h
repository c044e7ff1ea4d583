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

#ifndef DPAUDIT_ATTACK_H_
#define DPAUDIT_ATTACK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpaudit/estimators.h"

namespace dpaudit {

// The attack predicts D' when score > z. Ties count as D.
absl::StatusOr<ErrorCounts> ComputeErrorCounts(std::span<const double> o,
                                               std::span<const double> o_prime,
                                               double z);

struct RatePoint {
  double threshold = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int64_t fp = 0;
  int64_t fn = 0;
};

// Points ordered by increasing threshold; alpha is nonincreasing and beta
// nondecreasing along the curve.
struct RateCurve {
  int64_t n = 0;
  std::vector<RatePoint> points;
};

struct SweepOptions {
  // Includes the two corner thresholds -inf and +inf.
  int64_t max_thresholds = 10001;
};

// Evaluates every midpoint between adjacent distinct pooled scores (thinned
// uniformly when there are too many) plus the two trivial corners.
absl::StatusOr<RateCurve> SweepThresholds(std::span<const double> o,
                                          std::span<const double> o_prime,
                                          const SweepOptions& options = {});

struct ThresholdChoice {
  double threshold = 0.0;
  ErrorCounts counts;
  double score = 0.0;
};

// Threshold of the curve maximizing objective(counts); ties keep the
// smallest threshold.
ThresholdChoice BestThreshold(
    const RateCurve& curve,
    const std::function<double(const ErrorCounts&)>& objective);

struct SweepAuditOptions {
  AuditOptions audit;
  SweepOptions sweep;
  // Thresholds are ranked by the per-step Clopper-Pearson bound of the same
  // family (Katz by itself); the full audit runs on the best `candidates`.
  int candidates = 25;
};

struct SweepAuditResult {
  AuditResult result;
  double threshold = 0.0;
  // True when the threshold was picked on the audited observations.
  bool exploratory = true;
};

// Audits at the best threshold of the sweep. The bound is exploratory since
// the threshold is chosen on the same data.
absl::StatusOr<SweepAuditResult> SweepAudit(std::span<const double> o,
                                            std::span<const double> o_prime,
                                            const SweepAuditOptions& options);

// Picks the threshold on the first holdout_fraction of each set and audits
// the remainder at that threshold.
absl::StatusOr<SweepAuditResult> HoldoutAudit(
    std::span<const double> o, std::span<const double> o_prime,
    double holdout_fraction, const SweepAuditOptions& options);

// ln h(z) for a Gaussian mechanism N(0, sigma^2) vs N(c, sigma^2), where
// h(z) = (1 - delta - beta(z)) / alpha(z) with alpha(z) = 1 - Phi(z / sigma)
// and beta(z) = Phi((z - c) / sigma). -inf where the numerator is <= 0.
double LogH(double sigma, double c, double delta, double z);

// Unique w > c/2 solving
//   delta = Phi((c-w)/sigma) - phi((c-w)/sigma) / phi(-w/sigma) * Phi(-w/sigma),
// the threshold maximizing LogH.
absl::StatusOr<double> OptimalThresholdDp(double sigma, double c,
                                          double delta);

// Residual of the equation above at z.
double OptimalThresholdResidual(double sigma, double c, double delta,
                                double z);

// (c / (2 sigma^2)) (2w - c).
double MaxEpsLowerAnalytic(double sigma, double c, double w);

// Phi^-1(1 - alpha(z)) - Phi^-1(beta(z)) for the exact rates of N(0, s^2)
// vs N(c, s^2); equal to c / sigma for every z.
double GdpPluginThresholdInvariance(double sigma, double z, double c = 1.0);

}  // namespace dpaudit

#endif  // DPAUDIT_ATTACK_H_
