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

#include "dpaudit/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_format.h"
#include "dpaudit/numerics.h"
#include "dpaudit/status_macros.h"
#include "dpaudit/tradeoff.h"

namespace dpaudit {
namespace {

constexpr double kRateFloor = 1e-15;
constexpr double kRootTol = 1e-4;

absl::Status CheckGamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("gamma must lie in (0, 1), got %g", gamma));
  }
  return absl::OkStatus();
}

absl::Status CheckDelta(double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in [0, 1), got %g", delta));
  }
  return absl::OkStatus();
}

double ClampRate(double r) { return std::clamp(r, kRateFloor, 1.0 - kRateFloor); }

// Largest x in [lo, hi] with mass(x) <= target, for nondecreasing mass.
// Doubles hi (up to `cap`) while mass(hi) is still below the target.
template <typename Mass>
double LowerCredibleRoot(Mass&& mass, double target, double lo, double hi,
                         double cap, std::string* diagnostic) {
  if (mass(lo) > target) return lo;
  while (mass(hi) <= target) {
    if (hi >= cap) {
      *diagnostic = absl::StrFormat("bound reached search cap %g", cap);
      return hi;
    }
    *diagnostic = absl::StrFormat("search bracket widened beyond %g", hi);
    lo = hi;
    hi = std::min(cap, 2.0 * hi);
  }
  while (hi - lo > kRootTol) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double EpsDeltaAt(double eps, double delta, double alpha) {
  return TradeoffCurve::EpsDelta(eps, delta)(alpha);
}

}  // namespace

absl::Status ErrorCounts::Validate() const {
  if (n < 1 || fp < 0 || fn < 0 || fp > n || fn > n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "invalid error counts fp=%d fn=%d n=%d", fp, fn, n));
  }
  return absl::OkStatus();
}

std::string_view AuditMethodName(AuditMethod method) {
  switch (method) {
    case AuditMethod::kFdpCp:
      return "fdp-cp";
    case AuditMethod::kFdpZb:
      return "fdp-zb";
    case AuditMethod::kDpCp:
      return "dp-cp";
    case AuditMethod::kDpZb:
      return "dp-zb";
    case AuditMethod::kKatz:
      return "katz";
  }
  return "unknown";
}

absl::StatusOr<AuditMethod> ParseAuditMethod(std::string_view name) {
  for (AuditMethod m : {AuditMethod::kFdpCp, AuditMethod::kFdpZb,
                        AuditMethod::kDpCp, AuditMethod::kDpZb,
                        AuditMethod::kKatz}) {
    if (AuditMethodName(m) == name) return m;
  }
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown audit method '%s'", std::string(name)));
}

absl::StatusOr<double> ClopperPearsonUpper(int64_t count, int64_t n,
                                           double confidence) {
  if (n < 1 || count < 0 || count > n) {
    return absl::InvalidArgumentError(
        absl::StrFormat("need 0 <= count <= n, got %d of %d", count, n));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("confidence must lie in (0, 1), got %g", confidence));
  }
  if (count == n) return 1.0;
  return BetaQuantile(confidence, static_cast<double>(count) + 1.0,
                      static_cast<double>(n - count));
}

absl::StatusOr<RateBounds> CpRateBounds(const ErrorCounts& counts,
                                        double gamma, GammaSplit split) {
  RETURN_IF_ERROR(counts.Validate());
  RETURN_IF_ERROR(CheckGamma(gamma));
  if (!(split.fpr_share > 0.0 && split.fpr_share < 1.0)) {
    return absl::InvalidArgumentError("fpr_share must lie in (0, 1)");
  }
  RateBounds b;
  ASSIGN_OR_RETURN(b.alpha, ClopperPearsonUpper(counts.fp, counts.n,
                                                1.0 - gamma * split.fpr_share));
  ASSIGN_OR_RETURN(b.beta,
                   ClopperPearsonUpper(counts.fn, counts.n,
                                       1.0 - gamma * (1.0 - split.fpr_share)));
  return b;
}

double EpsFromRates(double alpha, double beta, double delta) {
  alpha = std::max(alpha, std::numeric_limits<double>::min());
  beta = std::max(beta, std::numeric_limits<double>::min());
  double eps = 0.0;
  if (1.0 - alpha - delta > 0.0) eps = std::max(eps, std::log((1.0 - alpha - delta) / beta));
  if (1.0 - beta - delta > 0.0) eps = std::max(eps, std::log((1.0 - beta - delta) / alpha));
  return eps;
}

double MuFromRates(double alpha, double beta) {
  if (alpha >= 1.0 || beta >= 1.0) return 0.0;
  const double a = ClampRate(alpha);
  const double b = ClampRate(beta);
  // Phi^-1(1 - a) = -Phi^-1(a).
  return std::max(0.0, -*StdNormalQuantile(a) - *StdNormalQuantile(b));
}

absl::StatusOr<AuditResult> EpsLowerDpCp(const ErrorCounts& counts,
                                         double delta, double gamma,
                                         GammaSplit split) {
  RETURN_IF_ERROR(CheckDelta(delta));
  ASSIGN_OR_RETURN(RateBounds b, CpRateBounds(counts, gamma, split));
  AuditResult r;
  r.method = AuditMethod::kDpCp;
  r.eps_lower = EpsFromRates(b.alpha, b.beta, delta);
  r.delta = delta;
  r.confidence = 1.0 - gamma;
  r.counts = counts;
  return r;
}

absl::StatusOr<double> MuLowerGdpCp(const ErrorCounts& counts, double gamma,
                                    GammaSplit split) {
  ASSIGN_OR_RETURN(RateBounds b, CpRateBounds(counts, gamma, split));
  return MuFromRates(b.alpha, b.beta);
}

double MuToEpsLower(double mu, double delta) {
  return GdpEpsOfDelta(mu, delta);
}

RatePosterior::RatePosterior(const ErrorCounts& counts, int order)
    : a_fpr_(counts.fp + 0.5),
      b_fpr_(counts.n - counts.fp + 0.5),
      a_fnr_(counts.fn + 0.5),
      b_fnr_(counts.n - counts.fn + 0.5) {
  const QuadratureRule& rule = GaussLegendreUnit(order);
  // Nodes are placed in quantile space of the FPR marginal, so the
  // quadrature follows the posterior however concentrated it is.
  alphas_.resize(rule.nodes.size());
  for (size_t k = 0; k < rule.nodes.size(); ++k) {
    alphas_[k] = *BetaQuantile(rule.nodes[k], a_fpr_, b_fpr_);
  }
  weights_ = rule.weights;
  lower_.resize(alphas_.size());
  upper_.resize(alphas_.size());
}

double RatePosterior::Density(double alpha, double beta) const {
  return BetaPdf(alpha, a_fpr_, b_fpr_) * BetaPdf(beta, a_fnr_, b_fnr_);
}

double RatePosterior::FprMean() const { return a_fpr_ / (a_fpr_ + b_fpr_); }
double RatePosterior::FnrMean() const { return a_fnr_ / (a_fnr_ + b_fnr_); }

double RatePosterior::Integrate() const {
  double total = 0.0;
  for (size_t k = 0; k < alphas_.size(); ++k) {
    const double lo = std::clamp(lower_[k], 0.0, 1.0);
    const double hi = std::clamp(upper_[k], 0.0, 1.0);
    if (hi <= lo) continue;
    total += weights_[k] * (*BetaCdf(hi, a_fnr_, b_fnr_) -
                            *BetaCdf(lo, a_fnr_, b_fnr_));
  }
  return total;
}

double MassInsideGdpRegion(const RatePosterior& post, double mu) {
  return post.BandMass([mu](const std::vector<double>& alphas,
                            std::vector<double>& lower,
                            std::vector<double>& upper) {
    for (size_t k = 0; k < alphas.size(); ++k) {
      const double z = *StdNormalQuantile(ClampRate(alphas[k]));
      lower[k] = StdNormalCdf(-z - mu);
      upper[k] = StdNormalCdf(-z + mu);
    }
  });
}

double MassInsideDpRegion(const RatePosterior& post, double eps,
                          double delta) {
  return post.BandMass([eps, delta](const std::vector<double>& alphas,
                                    std::vector<double>& lower,
                                    std::vector<double>& upper) {
    for (size_t k = 0; k < alphas.size(); ++k) {
      lower[k] = EpsDeltaAt(eps, delta, alphas[k]);
      upper[k] = 1.0 - EpsDeltaAt(eps, delta, 1.0 - alphas[k]);
    }
  });
}

absl::StatusOr<double> MuLowerGdpZb(const ErrorCounts& counts, double gamma) {
  RETURN_IF_ERROR(counts.Validate());
  RETURN_IF_ERROR(CheckGamma(gamma));
  RatePosterior post(counts);
  std::string diag;
  return LowerCredibleRoot(
      [&](double mu) { return MassInsideGdpRegion(post, mu); }, gamma / 2.0,
      0.0, 50.0, 1000.0, &diag);
}

absl::StatusOr<double> EpsLowerDpZb(const ErrorCounts& counts, double delta,
                                    double gamma) {
  RETURN_IF_ERROR(counts.Validate());
  RETURN_IF_ERROR(CheckGamma(gamma));
  RETURN_IF_ERROR(CheckDelta(delta));
  RatePosterior post(counts);
  std::string diag;
  return LowerCredibleRoot(
      [&](double eps) { return MassInsideDpRegion(post, eps, delta); },
      gamma / 2.0, 0.0, 100.0, 700.0, &diag);
}

absl::StatusOr<double> EpsLowerKatz(const ErrorCounts& counts, double gamma,
                                    double delta) {
  RETURN_IF_ERROR(counts.Validate());
  RETURN_IF_ERROR(CheckGamma(gamma));
  if (delta != 0.0) {
    return absl::InvalidArgumentError(
        "the Katz-log interval is a pure-DP baseline; its validity for "
        "delta > 0 is unclear, so only delta = 0 is accepted");
  }
  double tp = static_cast<double>(counts.n - counts.fn);
  double fp = static_cast<double>(counts.fp);
  double n = static_cast<double>(counts.n);
  if (tp == 0.0 || fp == 0.0 || tp == n || fp == n) {
    // Continuity correction: half a count in each of the four cells.
    tp += 0.5;
    fp += 0.5;
    n += 1.0;
  }
  const double p1 = tp / n;
  const double p0 = fp / n;
  const double se = std::sqrt((1.0 - p1) / (n * p1) + (1.0 - p0) / (n * p0));
  const double z = *StdNormalQuantile(1.0 - gamma);
  return std::max(0.0, std::log(p1 / p0) - z * se);
}

absl::StatusOr<AuditResult> SigmaLowerMultistep(
    const ErrorCounts& counts, double q, int64_t steps, double gamma,
    double delta, const MultistepOptions& options) {
  if (!(delta > 0.0 && delta < 0.5)) {
    return absl::InvalidArgumentError("delta must lie in (0, 0.5)");
  }
  RETURN_IF_ERROR((MechanismSpec{1.0, q, steps, 1.0}.Validate()));
  if (options.lines < 2) {
    return absl::InvalidArgumentError("need at least two supporting lines");
  }
  ASSIGN_OR_RETURN(RateBounds b, CpRateBounds(counts, gamma));
  AuditResult result;
  result.method = AuditMethod::kFdpCp;
  result.delta = delta;
  result.confidence = 1.0 - gamma;
  result.counts = counts;

  std::vector<double> deltas(options.lines);
  for (int i = 0; i < options.lines; ++i) {
    deltas[i] = delta + (1.0 - 2.0 * delta) * i / (options.lines - 1);
  }
  // Upper-envelope approximate curve at alpha-bar, for noise multiplier s.
  auto curve_at = [&](double s) -> absl::StatusOr<double> {
    ASSIGN_OR_RETURN(PldAccountant acct,
                     PldAccountant::Build({s, q, steps, 1.0}, options.pld));
    const std::vector<double> eps = acct.EpsOfDeltas(deltas);
    double best = 0.0;
    for (size_t i = 0; i < eps.size(); ++i) {
      best = std::max(best, EpsDeltaAt(eps[i], deltas[i], b.alpha));
    }
    return best;
  };

  double lo = 1e-3;
  double hi = 1e3;
  ASSIGN_OR_RETURN(double at_hi, curve_at(hi));
  if (at_hi < b.beta) {
    result.diagnostic = absl::StrFormat(
        "no noise multiplier in [%g, %g] fits the observed rates", lo, hi);
    return result;
  }
  ASSIGN_OR_RETURN(double at_lo, curve_at(lo));
  if (at_lo >= b.beta) {
    result.diagnostic =
        absl::StrFormat("noise multiplier bracket hit at %g", lo);
    hi = lo;
  } else {
    while (hi / lo > 1.0 + 1e-4) {
      const double mid = std::sqrt(lo * hi);
      ASSIGN_OR_RETURN(double v, curve_at(mid));
      if (v >= b.beta) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  result.sigma_hat = hi;
  ASSIGN_OR_RETURN(PldAccountant acct,
                   PldAccountant::Build({hi, q, steps, 1.0}, options.pld));
  auto eps = acct.EpsOfDelta(delta);
  if (!eps.ok()) return eps.status();
  result.eps_lower = *eps;
  result.mu_lower = 1.0 / hi;
  result.estimate = steps > 1 || q < 1.0;
  return result;
}

absl::StatusOr<AuditResult> Audit(const ErrorCounts& counts,
                                  const AuditOptions& options) {
  RETURN_IF_ERROR(counts.Validate());
  RETURN_IF_ERROR(CheckGamma(options.gamma));
  RETURN_IF_ERROR(CheckDelta(options.delta));
  const bool multistep = options.steps > 1 || options.q < 1.0;
  AuditResult r;
  r.method = options.method;
  r.delta = options.delta;
  r.confidence = 1.0 - options.gamma;
  r.counts = counts;
  switch (options.method) {
    case AuditMethod::kFdpCp:
    case AuditMethod::kFdpZb: {
      if (options.pld_curve && options.method == AuditMethod::kFdpCp) {
        return SigmaLowerMultistep(counts, options.q, options.steps,
                                   options.gamma, options.delta);
      }
      if (options.method == AuditMethod::kFdpCp) {
        ASSIGN_OR_RETURN(r.mu_lower,
                         MuLowerGdpCp(counts, options.gamma, options.split));
      } else {
        ASSIGN_OR_RETURN(r.mu_lower, MuLowerGdpZb(counts, options.gamma));
      }
      if (multistep) {
        if (options.delta <= 0.0) {
          return absl::InvalidArgumentError(
              "end-to-end conversion needs delta > 0");
        }
        ASSIGN_OR_RETURN(r.eps_lower,
                         StepsToEndEps(r.mu_lower, options.steps, options.q,
                                       options.delta));
        r.estimate = true;
      } else {
        r.eps_lower = MuToEpsLower(r.mu_lower, options.delta);
      }
      return r;
    }
    case AuditMethod::kDpCp: {
      ASSIGN_OR_RETURN(r, EpsLowerDpCp(counts, options.delta, options.gamma,
                                       options.split));
      break;
    }
    case AuditMethod::kDpZb: {
      ASSIGN_OR_RETURN(r.eps_lower,
                       EpsLowerDpZb(counts, options.delta, options.gamma));
      break;
    }
    case AuditMethod::kKatz: {
      ASSIGN_OR_RETURN(r.eps_lower,
                       EpsLowerKatz(counts, options.gamma, options.delta));
      break;
    }
  }
  if (multistep) {
    r.diagnostic = "per-step bound; (eps, delta) bounds do not compose tightly";
  }
  return r;
}

}  // namespace dpaudit
