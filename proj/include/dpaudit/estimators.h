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

#ifndef DPAUDIT_ESTIMATORS_H_
#define DPAUDIT_ESTIMATORS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/accountant.h"

namespace dpaudit {

// Errors of a distinguishing attack: fp false positives out of n trials in
// world D and fn false negatives out of n trials in world D'.
struct ErrorCounts {
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t n = 1;

  absl::Status Validate() const;
};

enum class AuditMethod { kFdpCp, kFdpZb, kDpCp, kDpZb, kKatz };

std::string_view AuditMethodName(AuditMethod method);
// Accepts "fdp-cp", "fdp-zb", "dp-cp", "dp-zb" and "katz".
absl::StatusOr<AuditMethod> ParseAuditMethod(std::string_view name);

struct AuditResult {
  AuditMethod method = AuditMethod::kFdpCp;
  // Zero for methods that do not go through Gaussian DP.
  double mu_lower = 0.0;
  double eps_lower = 0.0;
  double delta = 0.0;
  // 1 - gamma.
  double confidence = 0.95;
  ErrorCounts counts;
  // True when the value is an end-to-end estimate rather than a bound.
  bool estimate = false;
  // Noise multiplier found by SigmaLowerMultistep; zero otherwise.
  double sigma_hat = 0.0;
  std::string diagnostic;
};

// How gamma is split between the two error rates. The FPR side is bounded
// at confidence 1 - gamma * fpr_share, the FNR side at
// 1 - gamma * (1 - fpr_share).
struct GammaSplit {
  double fpr_share = 0.5;
};

// One-sided Clopper-Pearson upper bound on a binomial rate.
absl::StatusOr<double> ClopperPearsonUpper(int64_t count, int64_t n,
                                           double confidence);

struct RateBounds {
  double alpha = 0.0;
  double beta = 0.0;
};

absl::StatusOr<RateBounds> CpRateBounds(const ErrorCounts& counts,
                                        double gamma, GammaSplit split = {});

// Plug-in bounds from error rates.
double EpsFromRates(double alpha, double beta, double delta);
double MuFromRates(double alpha, double beta);

absl::StatusOr<AuditResult> EpsLowerDpCp(const ErrorCounts& counts,
                                         double delta, double gamma,
                                         GammaSplit split = {});
absl::StatusOr<double> MuLowerGdpCp(const ErrorCounts& counts, double gamma,
                                    GammaSplit split = {});
double MuToEpsLower(double mu, double delta);

// Jeffreys posterior of (FPR, FNR) given counts: independent
// Beta(fp + 1/2, n - fp + 1/2) and Beta(fn + 1/2, n - fn + 1/2).
class RatePosterior {
 public:
  explicit RatePosterior(const ErrorCounts& counts, int order = 512);

  double Density(double alpha, double beta) const;
  double FprMean() const;
  double FnrMean() const;

  // Posterior mass of {lower(alpha) <= beta <= upper(alpha)}. `band` gets
  // the quadrature alphas and must fill lower and upper.
  template <typename Band>
  double BandMass(Band&& band) const {
    band(alphas_, lower_, upper_);
    return Integrate();
  }

  const std::vector<double>& alphas() const { return alphas_; }

 private:
  double Integrate() const;

  double a_fpr_, b_fpr_, a_fnr_, b_fnr_;
  std::vector<double> alphas_;
  std::vector<double> weights_;
  mutable std::vector<double> lower_;
  mutable std::vector<double> upper_;
};

// Posterior mass inside the mu-GDP band and inside R(eps, delta).
double MassInsideGdpRegion(const RatePosterior& post, double mu);
double MassInsideDpRegion(const RatePosterior& post, double eps, double delta);

// Bayesian lower credible bounds: the largest parameter whose region holds
// at most gamma / 2 posterior mass.
absl::StatusOr<double> MuLowerGdpZb(const ErrorCounts& counts, double gamma);
absl::StatusOr<double> EpsLowerDpZb(const ErrorCounts& counts, double delta,
                                    double gamma);

// Katz-log lower confidence limit on ln(TPR / FPR), clamped at 0. Only
// delta = 0 is supported.
absl::StatusOr<double> EpsLowerKatz(const ErrorCounts& counts, double gamma,
                                    double delta = 0.0);

struct MultistepOptions {
  int lines = 1000;
  PldOptions pld;
};

// Finds the smallest noise multiplier whose approximate (upper-envelope)
// trade-off curve, built from the PLD accountant for (q, steps), passes
// through or above the Clopper-Pearson point, and reports the accountant's
// eps at that noise multiplier.
absl::StatusOr<AuditResult> SigmaLowerMultistep(
    const ErrorCounts& counts, double q, int64_t steps, double gamma,
    double delta, const MultistepOptions& options = {});

struct AuditOptions {
  AuditMethod method = AuditMethod::kFdpCp;
  double delta = 1e-5;
  double gamma = 0.05;
  GammaSplit split;
  // Per-step observations are converted to an end-to-end estimate when
  // steps > 1 or q < 1.
  double q = 1.0;
  int64_t steps = 1;
  // Use SigmaLowerMultistep for the multi-step conversion of f-DP methods.
  bool pld_curve = false;
};

absl::StatusOr<AuditResult> Audit(const ErrorCounts& counts,
                                  const AuditOptions& options);

}  // namespace dpaudit

#endif  // DPAUDIT_ESTIMATORS_H_
