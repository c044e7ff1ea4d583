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

#include "dpaudit/tradeoff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpaudit/numerics.h"
#include "dpaudit/status_macros.h"

namespace dpaudit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double EpsDeltaValue(double eps, double delta, double alpha) {
  if (std::isinf(eps)) return alpha <= 0.0 ? std::max(0.0, 1.0 - delta) : 0.0;
  const double e = std::exp(eps);
  return std::max({0.0, 1.0 - delta - e * alpha,
                   std::exp(-eps) * (1.0 - delta - alpha)});
}

}  // namespace

TradeoffCurve TradeoffCurve::EpsDelta(double eps, double delta) {
  TradeoffCurve c;
  c.kind_ = Kind::kEpsDelta;
  c.eps_ = eps;
  c.delta_ = delta;
  return c;
}

TradeoffCurve TradeoffCurve::Gdp(double mu) {
  TradeoffCurve c;
  c.kind_ = Kind::kGdp;
  c.mu_ = mu;
  return c;
}

absl::StatusOr<TradeoffCurve> TradeoffCurve::Piecewise(
    std::vector<PrivacyPoint> points) {
  if (points.size() < 2) {
    return absl::InvalidArgumentError("piecewise curve needs >= 2 points");
  }
  if (points.front().alpha != 0.0 || points.back().alpha != 1.0) {
    return absl::InvalidArgumentError(
        "piecewise curve must cover alpha in [0, 1]");
  }
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.beta >= 0.0 && p.beta <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("beta out of range at point %d", i));
    }
    if (i > 0) {
      if (!(p.alpha > points[i - 1].alpha)) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "alpha not strictly increasing at point %d", i));
      }
      if (p.beta > points[i - 1].beta) {
        return absl::InvalidArgumentError(
            absl::StrFormat("beta increases at point %d", i));
      }
    }
  }
  TradeoffCurve c;
  c.kind_ = Kind::kPiecewise;
  c.points_ = std::move(points);
  return c;
}

double TradeoffCurve::operator()(double alpha) const {
  alpha = std::clamp(alpha, 0.0, 1.0);
  switch (kind_) {
    case Kind::kEpsDelta:
      return EpsDeltaValue(eps_, delta_, alpha);
    case Kind::kGdp: {
      if (alpha <= 0.0) return 1.0;
      if (alpha >= 1.0) return 0.0;
      if (mu_ == 0.0) return 1.0 - alpha;
      // Phi^-1(1 - alpha) = -Phi^-1(alpha); avoids forming 1 - alpha.
      const double x = *StdNormalQuantile(alpha);
      return StdNormalCdf(-x - mu_);
    }
    case Kind::kPiecewise: {
      auto it = std::upper_bound(
          points_.begin(), points_.end(), alpha,
          [](double a, const PrivacyPoint& p) { return a < p.alpha; });
      if (it == points_.end()) return points_.back().beta;
      if (it == points_.begin()) return points_.front().beta;
      const PrivacyPoint& hi = *it;
      const PrivacyPoint& lo = *(it - 1);
      const double t = (alpha - lo.alpha) / (hi.alpha - lo.alpha);
      return lo.beta + t * (hi.beta - lo.beta);
    }
  }
  return 0.0;
}

std::vector<PrivacyPoint> TradeoffCurve::Sample(int count) const {
  std::vector<PrivacyPoint> out;
  if (count < 2) count = 2;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double a = i == count - 1 ? 1.0 : static_cast<double>(i) / (count - 1);
    out.push_back({a, (*this)(a)});
  }
  return out;
}

double GdpDeltaOfEps(double mu, double eps) {
  if (mu <= 0.0) return 0.0;
  if (std::isinf(eps)) return 0.0;
  const double a = StdNormalCdf(-eps / mu + mu / 2.0);
  const double b = std::exp(eps + LogStdNormalCdf(-eps / mu - mu / 2.0));
  return std::max(0.0, a - b);
}

double GdpEpsOfDelta(double mu, double delta) {
  if (mu <= 0.0) return 0.0;
  if (GdpDeltaOfEps(mu, 0.0) <= delta) return 0.0;
  if (delta <= 0.0) return kInf;
  double lo = 0.0;
  double hi = 1.0;
  while (GdpDeltaOfEps(mu, hi) > delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return kInf;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (GdpDeltaOfEps(mu, mid) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

absl::StatusOr<double> GdpMuOfEps(double eps, double delta) {
  if (!(eps >= 0.0) || !std::isfinite(eps) || !(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need finite eps >= 0 and delta in (0, 1), got eps=%g delta=%g", eps,
        delta));
  }
  // delta(eps) grows with mu.
  double lo = 0.0;
  double hi = 1.0;
  while (GdpDeltaOfEps(hi, eps) < delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) return absl::OutOfRangeError("mu exceeds 1e4");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (GdpDeltaOfEps(mid, eps) < delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool PrivacyRegionContains(double eps, double delta, PrivacyPoint p) {
  if (std::isinf(eps)) return true;
  const double e = std::exp(eps);
  const double a = p.alpha;
  const double b = p.beta;
  return a + e * b >= 1.0 - delta && e * a + b >= 1.0 - delta &&
         a + e * b <= e + delta && e * a + b <= e + delta;
}

absl::StatusOr<TradeoffCurve> ApproxTradeoffFromAccountant(
    const EpsOfDeltaFn& eps_of_delta, int n, double delta, Combiner combiner) {
  if (n < 2) {
    return absl::InvalidArgumentError("need at least two supporting curves");
  }
  if (!(delta >= 0.0 && delta < 0.5)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in [0, 0.5), got %g", delta));
  }
  std::vector<double> betas(kPiecewiseGridPoints,
                            combiner == Combiner::kMin ? kInf : 0.0);
  for (int i = 0; i < n; ++i) {
    const double dp = delta + (1.0 - 2.0 * delta) * i / (n - 1);
    ASSIGN_OR_RETURN(double eps, eps_of_delta(dp));
    eps = std::max(0.0, eps);
    for (int j = 0; j < kPiecewiseGridPoints; ++j) {
      const double a = static_cast<double>(j) / (kPiecewiseGridPoints - 1);
      const double v = EpsDeltaValue(eps, dp, a);
      betas[j] = combiner == Combiner::kMin ? std::min(betas[j], v)
                                            : std::max(betas[j], v);
    }
  }
  std::vector<PrivacyPoint> pts(kPiecewiseGridPoints);
  for (int j = 0; j < kPiecewiseGridPoints; ++j) {
    pts[j].alpha = static_cast<double>(j) / (kPiecewiseGridPoints - 1);
    pts[j].beta = std::clamp(betas[j], 0.0, 1.0);
  }
  pts.back().beta = 0.0;
  return TradeoffCurve::Piecewise(std::move(pts));
}

}  // namespace dpaudit
