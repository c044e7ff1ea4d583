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

#ifndef DPAUDIT_TRADEOFF_H_
#define DPAUDIT_TRADEOFF_H_

#include <functional>
#include <vector>

#include "absl/status/statusor.h"

namespace dpaudit {

// A pair of attack error rates: alpha is the false-positive (type I) rate and
// beta the false-negative (type II) rate.
struct PrivacyPoint {
  double alpha = 0.0;
  double beta = 0.0;
};

// Number of uniform alpha samples used for piecewise-linear curves.
inline constexpr int kPiecewiseGridPoints = 2049;

// A trade-off function alpha -> beta. Immutable value type.
class TradeoffCurve {
 public:
  enum class Kind { kEpsDelta, kGdp, kPiecewise };

  // f(alpha) = max{0, 1 - delta - e^eps alpha, e^-eps (1 - delta - alpha)}.
  static TradeoffCurve EpsDelta(double eps, double delta);

  // f(alpha) = Phi(Phi^-1(1 - alpha) - mu).
  static TradeoffCurve Gdp(double mu);

  // Linear interpolation between points. Points must be strictly increasing
  // in alpha, start at alpha = 0, end at alpha = 1, and have nonincreasing
  // beta values in [0, 1].
  static absl::StatusOr<TradeoffCurve> Piecewise(
      std::vector<PrivacyPoint> points);

  double operator()(double alpha) const;

  Kind kind() const { return kind_; }
  double eps() const { return eps_; }
  double delta() const { return delta_; }
  double mu() const { return mu_; }
  const std::vector<PrivacyPoint>& points() const { return points_; }

  // Evaluates the curve at `count` uniformly spaced alphas in [0, 1].
  std::vector<PrivacyPoint> Sample(int count) const;

 private:
  TradeoffCurve() = default;

  Kind kind_ = Kind::kEpsDelta;
  double eps_ = 0.0;
  double delta_ = 0.0;
  double mu_ = 0.0;
  std::vector<PrivacyPoint> points_;
};

// delta(eps) of a mu-GDP mechanism:
// Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2). Zero when mu = 0.
double GdpDeltaOfEps(double mu, double eps);

// Smallest eps >= 0 with GdpDeltaOfEps(mu, eps) <= delta, to within 1e-9.
// Returns 0 when delta(0) <= delta and +infinity when delta <= 0 < mu.
double GdpEpsOfDelta(double mu, double delta);

// The mu whose GDP curve has GdpEpsOfDelta(mu, delta) = eps, i.e. the
// noise level 1 / sigma of a Gaussian mechanism that is exactly
// (eps, delta)-DP. Requires eps >= 0 and delta in (0, 1).
absl::StatusOr<double> GdpMuOfEps(double eps, double delta);

// Membership in the (eps, delta) privacy region, i.e. all of
//   alpha + e^eps beta >= 1 - delta,   e^eps alpha + beta >= 1 - delta,
//   alpha + e^eps beta <= e^eps + delta, e^eps alpha + beta <= e^eps + delta.
bool PrivacyRegionContains(double eps, double delta, PrivacyPoint p);

// How supporting curves are combined in ApproxTradeoffFromAccountant.
//   kMin: pointwise minimum over all supporting curves (looser).
//   kMax: pointwise maximum, the upper envelope (tighter; each supporting
//         curve is itself a valid lower bound).
enum class Combiner { kMin, kMax };

using EpsOfDeltaFn = std::function<absl::StatusOr<double>(double)>;

// Piecewise approximation of a mechanism's trade-off function from an
// accountant that maps delta' to eps. Evaluates eps_of_delta at n evenly
// spaced delta' in [delta, 1 - delta], forms f_{eps(delta'), delta'} for each
// and combines them. The result is sampled on kPiecewiseGridPoints alphas.
// An infinite eps yields the curve that is 1 - delta' at 0 and 0 elsewhere.
absl::StatusOr<TradeoffCurve> ApproxTradeoffFromAccountant(
    const EpsOfDeltaFn& eps_of_delta, int n, double delta,
    Combiner combiner = Combiner::kMin);

}  // namespace dpaudit

#endif  // DPAUDIT_TRADEOFF_H_
