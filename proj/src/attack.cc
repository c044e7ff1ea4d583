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

#include "dpaudit/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpaudit/numerics.h"
#include "dpaudit/status_macros.h"

namespace dpaudit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status CheckSets(std::span<const double> o,
                       std::span<const double> o_prime) {
  if (o.empty() || o.size() != o_prime.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "observation sets must be nonempty and of equal size, got %d and %d",
        o.size(), o_prime.size()));
  }
  return absl::OkStatus();
}

// Phi^-1 of a probability given as both its value and its complement; uses
// the smaller one so that rates near 1 keep full precision.
double QuantileOfTails(double lower, double upper) {
  if (lower <= 0.5) return *StdNormalQuantile(lower);
  return -*StdNormalQuantile(upper);
}

}  // namespace

absl::StatusOr<ErrorCounts> ComputeErrorCounts(std::span<const double> o,
                                               std::span<const double> o_prime,
                                               double z) {
  if (auto s = CheckSets(o, o_prime); !s.ok()) return s;
  ErrorCounts c;
  c.n = static_cast<int64_t>(o.size());
  c.fp = std::count_if(o.begin(), o.end(), [z](double v) { return v > z; });
  c.fn = std::count_if(o_prime.begin(), o_prime.end(),
                       [z](double v) { return v <= z; });
  return c;
}

absl::StatusOr<RateCurve> SweepThresholds(std::span<const double> o,
                                          std::span<const double> o_prime,
                                          const SweepOptions& options) {
  if (auto s = CheckSets(o, o_prime); !s.ok()) return s;
  if (options.max_thresholds < 3) {
    return absl::InvalidArgumentError("max_thresholds must be >= 3");
  }
  std::vector<double> a(o.begin(), o.end());
  std::vector<double> b(o_prime.begin(), o_prime.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(),
             std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> mids;
  mids.reserve(pooled.size());
  for (size_t i = 0; i + 1 < pooled.size(); ++i) {
    mids.push_back(pooled[i] + 0.5 * (pooled[i + 1] - pooled[i]));
  }
  const size_t budget = static_cast<size_t>(options.max_thresholds - 2);
  if (mids.size() > budget) {
    std::vector<double> thinned(budget);
    for (size_t k = 0; k < budget; ++k) {
      const size_t idx =
          budget == 1 ? mids.size() / 2 : k * (mids.size() - 1) / (budget - 1);
      thinned[k] = mids[idx];
    }
    mids.swap(thinned);
  }

  RateCurve curve;
  curve.n = static_cast<int64_t>(a.size());
  const double n = static_cast<double>(curve.n);
  auto add = [&](double z) {
    RatePoint p;
    p.threshold = z;
    p.fp = curve.n - (std::upper_bound(a.begin(), a.end(), z) - a.begin());
    p.fn = std::upper_bound(b.begin(), b.end(), z) - b.begin();
    p.alpha = p.fp / n;
    p.beta = p.fn / n;
    curve.points.push_back(p);
  };
  curve.points.reserve(mids.size() + 2);
  add(-kInf);
  for (double z : mids) add(z);
  add(kInf);
  return curve;
}

ThresholdChoice BestThreshold(
    const RateCurve& curve,
    const std::function<double(const ErrorCounts&)>& objective) {
  ThresholdChoice best;
  best.score = -kInf;
  for (const RatePoint& p : curve.points) {
    const ErrorCounts c{p.fp, p.fn, curve.n};
    const double s = objective(c);
    if (s > best.score) {
      best = {p.threshold, c, s};
    }
  }
  return best;
}

namespace {

absl::StatusOr<ThresholdChoice> RankThresholds(
    std::span<const double> o, std::span<const double> o_prime,
    const SweepAuditOptions& options, std::vector<ThresholdChoice>* top) {
  ASSIGN_OR_RETURN(const RateCurve curve,
                   SweepThresholds(o, o_prime, options.sweep));
  const AuditOptions& a = options.audit;
  std::vector<ThresholdChoice> scored;
  scored.reserve(curve.points.size());
  for (const RatePoint& p : curve.points) {
    const ErrorCounts c{p.fp, p.fn, curve.n};
    double s = -kInf;
    switch (a.method) {
      case AuditMethod::kFdpCp:
      case AuditMethod::kFdpZb: {
        absl::StatusOr<double> mu = MuLowerGdpCp(c, a.gamma, a.split);
        if (mu.ok()) s = *mu;
        break;
      }
      case AuditMethod::kDpCp:
      case AuditMethod::kDpZb: {
        absl::StatusOr<AuditResult> r = EpsLowerDpCp(c, a.delta, a.gamma, a.split);
        if (r.ok()) s = r->eps_lower;
        break;
      }
      case AuditMethod::kKatz: {
        absl::StatusOr<double> e = EpsLowerKatz(c, a.gamma, a.delta);
        if (!e.ok()) return e.status();
        s = *e;
        break;
      }
    }
    scored.push_back({p.threshold, c, s});
  }
  // Stable order keeps the smallest threshold first among equal scores.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ThresholdChoice& x, const ThresholdChoice& y) {
                     return x.score > y.score;
                   });
  top->clear();
  for (const ThresholdChoice& t : scored) {
    if (static_cast<int>(top->size()) >= std::max(1, options.candidates)) break;
    const bool seen = std::any_of(top->begin(), top->end(),
                                  [&](const ThresholdChoice& u) {
                                    return u.counts.fp == t.counts.fp &&
                                           u.counts.fn == t.counts.fn;
                                  });
    if (!seen) top->push_back(t);
  }
  return top->front();
}

}  // namespace

absl::StatusOr<SweepAuditResult> SweepAudit(std::span<const double> o,
                                            std::span<const double> o_prime,
                                            const SweepAuditOptions& options) {
  std::vector<ThresholdChoice> top;
  RETURN_IF_ERROR(RankThresholds(o, o_prime, options, &top).status());
  SweepAuditResult best;
  bool have = false;
  for (const ThresholdChoice& t : top) {
    ASSIGN_OR_RETURN(AuditResult r, Audit(t.counts, options.audit));
    if (!have || r.eps_lower > best.result.eps_lower ||
        (r.eps_lower == best.result.eps_lower &&
         r.mu_lower > best.result.mu_lower)) {
      best.result = std::move(r);
      best.threshold = t.threshold;
      have = true;
    }
  }
  best.exploratory = true;
  return best;
}

absl::StatusOr<SweepAuditResult> HoldoutAudit(
    std::span<const double> o, std::span<const double> o_prime,
    double holdout_fraction, const SweepAuditOptions& options) {
  RETURN_IF_ERROR(CheckSets(o, o_prime));
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    return absl::InvalidArgumentError("holdout fraction must be in (0, 1)");
  }
  const int64_t n = static_cast<int64_t>(o.size());
  const int64_t h = static_cast<int64_t>(std::floor(holdout_fraction * n));
  if (h < 1 || h >= n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "holdout fraction %g leaves an empty split of %d observations",
        holdout_fraction, n));
  }
  std::vector<ThresholdChoice> top;
  RETURN_IF_ERROR(RankThresholds(o.subspan(0, h), o_prime.subspan(0, h),
                                 options, &top)
                      .status());
  SweepAuditResult out;
  out.threshold = top.front().threshold;
  ASSIGN_OR_RETURN(const ErrorCounts c,
                   ComputeErrorCounts(o.subspan(h), o_prime.subspan(h),
                                      out.threshold));
  ASSIGN_OR_RETURN(out.result, Audit(c, options.audit));
  out.exploratory = false;
  return out;
}

double LogH(double sigma, double c, double delta, double z) {
  const double num = StdNormalCdf((c - z) / sigma) - delta;
  if (!(num > 0.0)) return -kInf;
  return std::log(num) - LogStdNormalCdf(-z / sigma);
}

double OptimalThresholdResidual(double sigma, double c, double delta,
                                double z) {
  // phi((c-z)/s) / phi(-z/s) = exp(c (2z - c) / (2 s^2)).
  const double log_ratio = c * (2.0 * z - c) / (2.0 * sigma * sigma);
  const double second = std::exp(log_ratio + LogStdNormalCdf(-z / sigma));
  return StdNormalCdf((c - z) / sigma) - second - delta;
}

absl::StatusOr<double> OptimalThresholdDp(double sigma, double c,
                                          double delta) {
  if (!(sigma > 0.0) || !(c > 0.0) || !(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        "optimal threshold needs sigma > 0, c > 0 and 0 < delta < 1");
  }
  double lo = 0.5 * c;
  if (OptimalThresholdResidual(sigma, c, delta, lo) <= 0.0) {
    return absl::OutOfRangeError(absl::StrFormat(
        "delta=%g too large: no threshold above c/2 improves the bound",
        delta));
  }
  double step = sigma;
  double hi = lo + step;
  while (OptimalThresholdResidual(sigma, c, delta, hi) > 0.0) {
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    if (hi > 1e4 * (sigma + c)) {
      return absl::OutOfRangeError(absl::StrFormat(
          "could not bracket the optimal threshold for delta=%g", delta));
    }
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (OptimalThresholdResidual(sigma, c, delta, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double MaxEpsLowerAnalytic(double sigma, double c, double w) {
  return c / (2.0 * sigma * sigma) * (2.0 * w - c);
}

double GdpPluginThresholdInvariance(double sigma, double z, double c) {
  // alpha = Phi(-z/s) with complement Phi(z/s); beta = Phi((z-c)/s) with
  // complement Phi((c-z)/s).
  const double q_alpha =
      QuantileOfTails(StdNormalCdf(-z / sigma), StdNormalCdf(z / sigma));
  const double q_beta = QuantileOfTails(StdNormalCdf((z - c) / sigma),
                                        StdNormalCdf((c - z) / sigma));
  return -q_alpha - q_beta;
}

}  // namespace dpaudit
