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

#include "dpaudit/accountant.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <utility>

#include "absl/strings/str_format.h"
#include "dpaudit/numerics.h"
#include "dpaudit/status_macros.h"
#include "dpaudit/tradeoff.h"

namespace dpaudit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Mass beyond 14 standard deviations is below 1e-44; it is still folded
// pessimistically into the end points.
constexpr double kSupportSds = 14.0;

double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Loss of the mixture (1-q) N(0,s^2) + q N(1,s^2) against N(0,s^2) at o.
double MixtureLoss(double o, double s, double q) {
  const double t = (2.0 * o - 1.0) / (2.0 * s * s);
  const double log_keep = q < 1.0 ? std::log1p(-q) : -kInf;
  return LogAddExp(log_keep, std::log(q) + t);
}

// Inverse of MixtureLoss in o; requires w > log(1 - q).
double MixtureLossInverse(double w, double s, double q) {
  const double t = q == 1.0 ? w : std::log(std::expm1(w) + q) - std::log(q);
  return s * s * t + 0.5;
}

struct TailPair {
  double cdf;
  double sf;
};

// CDF and survival function of the privacy loss for one direction.
TailPair LossTails(bool remove, double w, double s, double q) {
  const double floor = q < 1.0 ? std::log1p(-q) : -kInf;
  if (remove) {
    if (w <= floor) return {0.0, 1.0};
    const double o = MixtureLossInverse(w, s, q);
    return {(1.0 - q) * StdNormalCdf(o / s) + q * StdNormalCdf((o - 1.0) / s),
            (1.0 - q) * StdNormalCdf(-o / s) + q * StdNormalCdf((1.0 - o) / s)};
  }
  // Loss is -MixtureLoss(o) with o ~ N(0, s^2), decreasing in o.
  const double v = -w;
  if (v <= floor) return {1.0, 0.0};
  const double o = MixtureLossInverse(v, s, q);
  return {StdNormalCdf(-o / s), StdNormalCdf(o / s)};
}

DiscretePld SingleStep(bool remove, double s, double q, const PldOptions& opt) {
  const double h = opt.discretization;
  const int64_t lmax = std::llround(opt.truncation / h);
  double w_min;
  double w_max;
  if (remove) {
    w_min = MixtureLoss(-kSupportSds * s, s, q);
    w_max = MixtureLoss(1.0 + kSupportSds * s, s, q);
  } else {
    w_min = -MixtureLoss(kSupportSds * s, s, q);
    w_max = -MixtureLoss(-kSupportSds * s, s, q);
  }
  const int64_t i_lo = std::clamp<int64_t>(
      static_cast<int64_t>(std::floor(w_min / h)), -lmax, lmax);
  const int64_t i_hi = std::clamp<int64_t>(
      static_cast<int64_t>(std::ceil(w_max / h)), i_lo, lmax);

  DiscretePld pld;
  pld.offset = i_lo;
  pld.mass.assign(i_hi - i_lo + 1, 0.0);
  TailPair prev = LossTails(remove, i_lo * h, s, q);
  pld.mass[0] = prev.cdf;
  for (int64_t i = i_lo + 1; i <= i_hi; ++i) {
    const TailPair cur = LossTails(remove, i * h, s, q);
    // Difference on whichever side of the median keeps full precision.
    const double m = cur.cdf < 0.5 ? cur.cdf - prev.cdf : prev.sf - cur.sf;
    pld.mass[i - i_lo] = std::max(0.0, m);
    prev = cur;
  }
  pld.infinity_mass = prev.sf;
  return pld;
}

// Returns a size >= n whose only prime factors are 2, 3 and 5.
size_t GoodFftSize(size_t n) {
  size_t best = std::numeric_limits<size_t>::max();
  for (size_t p2 = 1; p2 < 2 * n; p2 *= 2) {
    for (size_t p3 = p2; p3 < 2 * n; p3 *= 3) {
      for (size_t p5 = p3; p5 < 2 * n; p5 *= 5) {
        if (p5 >= n) best = std::min(best, p5);
      }
    }
  }
  return best;
}

std::mutex& PlannerMutex() {
  static std::mutex* mu = new std::mutex();
  return *mu;
}

class FftBuffers {
 public:
  explicit FftBuffers(size_t n)
      : n_(n),
        real_(fftw_alloc_real(n)),
        spec_a_(fftw_alloc_complex(n / 2 + 1)),
        spec_b_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    forward_a_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_a_,
                                      FFTW_ESTIMATE);
    forward_b_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_b_,
                                      FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_a_, real_,
                                    FFTW_ESTIMATE);
  }
  ~FftBuffers() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(forward_a_);
    fftw_destroy_plan(forward_b_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_a_);
    fftw_free(spec_b_);
  }
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;

  void Load(const std::vector<double>& v) {
    std::fill(real_, real_ + n_, 0.0);
    std::copy(v.begin(), v.end(), real_);
  }
  void ForwardA() { fftw_execute(forward_a_); }
  void ForwardB() { fftw_execute(forward_b_); }
  // spec_a <- spec_a * spec_b (or spec_a^2) then inverse into real_.
  void MultiplyAndInvert(bool square) {
    const size_t m = n_ / 2 + 1;
    for (size_t k = 0; k < m; ++k) {
      const double ar = spec_a_[k][0];
      const double ai = spec_a_[k][1];
      const double br = square ? ar : spec_b_[k][0];
      const double bi = square ? ai : spec_b_[k][1];
      spec_a_[k][0] = ar * br - ai * bi;
      spec_a_[k][1] = ar * bi + ai * br;
    }
    fftw_execute(inverse_);
  }
  const double* real() const { return real_; }

 private:
  size_t n_;
  double* real_;
  fftw_complex* spec_a_;
  fftw_complex* spec_b_;
  fftw_plan forward_a_;
  fftw_plan forward_b_;
  fftw_plan inverse_;
};

// Clamps the support to [-lmax, lmax] and drops negligible tails, always
// moving mass towards larger losses.
void Normalize(DiscretePld& pld, int64_t lmax, double tail_mass) {
  auto& m = pld.mass;
  // Fold losses above the truncation into infinity.
  const int64_t top = pld.offset + static_cast<int64_t>(m.size()) - 1;
  if (top > lmax) {
    const int64_t keep = std::max<int64_t>(0, lmax - pld.offset + 1);
    double folded = 0.0;
    for (size_t i = static_cast<size_t>(keep); i < m.size(); ++i) {
      folded += m[i];
    }
    m.resize(static_cast<size_t>(keep));
    pld.infinity_mass += folded;
    if (m.empty()) {
      pld.offset = lmax;
      m.push_back(0.0);
    }
  }
  // Round losses below -lmax up to -lmax.
  if (pld.offset < -lmax) {
    const size_t cut = static_cast<size_t>(-lmax - pld.offset);
    if (cut < m.size()) {
      double below = 0.0;
      for (size_t i = 0; i < cut; ++i) below += m[i];
      m.erase(m.begin(), m.begin() + cut);
      m[0] += below;
      pld.offset = -lmax;
    }
  }
  // Upper tail into infinity.
  double acc = 0.0;
  size_t end = m.size();
  while (end > 1 && acc + m[end - 1] <= tail_mass) acc += m[--end];
  if (end < m.size()) {
    m.resize(end);
    pld.infinity_mass += acc;
  }
  // Lower tail rounded up to the first retained point.
  acc = 0.0;
  size_t begin = 0;
  while (begin + 1 < m.size() && acc + m[begin] <= tail_mass) acc += m[begin++];
  if (begin > 0) {
    m.erase(m.begin(), m.begin() + begin);
    m[0] += acc;
    pld.offset += static_cast<int64_t>(begin);
  }
  pld.infinity_mass = std::min(1.0, pld.infinity_mass);
}

DiscretePld Convolve(const DiscretePld& a, const DiscretePld& b, bool square,
                     const PldOptions& opt) {
  const size_t n = a.mass.size() + b.mass.size() - 1;
  DiscretePld out;
  out.offset = a.offset + b.offset;
  out.infinity_mass =
      1.0 - (1.0 - a.infinity_mass) * (1.0 - b.infinity_mass);
  out.mass.resize(n);
  if (std::min(a.mass.size(), b.mass.size()) <= 64) {
    // Direct convolution is cheaper and exact for tiny supports.
    std::fill(out.mass.begin(), out.mass.end(), 0.0);
    for (size_t i = 0; i < a.mass.size(); ++i) {
      for (size_t j = 0; j < b.mass.size(); ++j) {
        out.mass[i + j] += a.mass[i] * b.mass[j];
      }
    }
  } else {
    const size_t size = GoodFftSize(n);
    FftBuffers fft(size);
    fft.Load(a.mass);
    fft.ForwardA();
    if (!square) {
      fft.Load(b.mass);
      fft.ForwardB();
    }
    fft.MultiplyAndInvert(square);
    const double scale = 1.0 / static_cast<double>(size);
    for (size_t i = 0; i < n; ++i) {
      out.mass[i] = std::max(0.0, fft.real()[i] * scale);
    }
  }
  Normalize(out, std::llround(opt.truncation / opt.discretization),
            opt.tail_mass);
  return out;
}

DiscretePld SelfCompose(const DiscretePld& single, int64_t steps,
                        const PldOptions& opt) {
  DiscretePld base = single;
  DiscretePld result;
  bool have = false;
  while (steps > 0) {
    if (steps & 1) {
      result = have ? Convolve(result, base, false, opt) : base;
      have = true;
    }
    steps >>= 1;
    if (steps > 0) base = Convolve(base, base, true, opt);
  }
  return result;
}

// Hockey-stick divergence of one direction at eps.
double DeltaOfEpsOne(const DiscretePld& pld, double h, double eps) {
  double delta = pld.infinity_mass;
  for (size_t i = pld.mass.size(); i-- > 0;) {
    const double w = (pld.offset + static_cast<int64_t>(i)) * h;
    if (w <= eps) break;
    delta += pld.mass[i] * -std::expm1(eps - w);
  }
  return delta;
}

// Scans the grid from the top. `order` lists query indices sorted by
// increasing delta, i.e. decreasing eps.
void EpsOfDeltasOne(const DiscretePld& pld, double h,
                    std::span<const double> deltas,
                    const std::vector<size_t>& order, std::vector<double>& out) {
  size_t j = 0;
  // Unresolvable queries.
  while (j < order.size() && deltas[order[j]] <= pld.infinity_mass) {
    out[order[j]] = kInf;
    ++j;
  }
  double s1 = 0.0;
  double s2 = 0.0;
  for (size_t k = pld.mass.size(); k-- > 0 && j < order.size();) {
    const double w_k = (pld.offset + static_cast<int64_t>(k)) * h;
    if (w_k <= 0.0) break;
    s1 += pld.mass[k];
    s2 += pld.mass[k] * std::exp(-w_k);
    const double lower =
        k == 0 ? 0.0
               : std::max(0.0, (pld.offset + static_cast<int64_t>(k) - 1) * h);
    const double d_lower = pld.infinity_mass + s1 - std::exp(lower) * s2;
    while (j < order.size() && d_lower > deltas[order[j]]) {
      const double delta = deltas[order[j]];
      double eps = std::log((pld.infinity_mass + s1 - delta) / s2);
      eps = std::clamp(eps, lower, w_k);
      out[order[j]] = std::max(out[order[j]], eps);
      ++j;
    }
  }
  // Remaining queries are met at eps = 0 by this direction.
}

}  // namespace

absl::Status MechanismSpec::Validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sigma must be positive and finite, got %g", sigma));
  }
  if (!(q > 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling rate q must lie in (0, 1], got %g", q));
  }
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("steps must be >= 1, got %d", steps));
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "sensitivity must be positive and finite, got %g", sensitivity));
  }
  return absl::OkStatus();
}

double DiscretePld::TotalMass() const {
  return std::accumulate(mass.begin(), mass.end(), 0.0) + infinity_mass;
}

absl::StatusOr<PldAccountant> PldAccountant::Build(const MechanismSpec& spec,
                                                   const PldOptions& options) {
  RETURN_IF_ERROR(spec.Validate());
  if (!(options.discretization > 0.0) || !(options.truncation > 0.0) ||
      options.truncation / options.discretization > 5e7 ||
      !(options.tail_mass >= 0.0 && options.tail_mass < 1e-6)) {
    return absl::InvalidArgumentError("invalid PLD grid options");
  }
  PldAccountant acct;
  acct.spec_ = spec;
  acct.options_ = options;
  acct.remove_ = SelfCompose(SingleStep(true, spec.sigma, spec.q, options),
                             spec.steps, options);
  if (spec.q == 1.0) {
    // Both directions coincide for the plain Gaussian mechanism.
    acct.add_ = acct.remove_;
  } else {
    acct.add_ = SelfCompose(SingleStep(false, spec.sigma, spec.q, options),
                            spec.steps, options);
  }
  return acct;
}

std::vector<double> PldAccountant::EpsOfDeltas(
    std::span<const double> deltas) const {
  std::vector<double> out(deltas.size(), 0.0);
  std::vector<size_t> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return deltas[a] < deltas[b]; });
  EpsOfDeltasOne(remove_, options_.discretization, deltas, order, out);
  if (spec_.q != 1.0) {
    EpsOfDeltasOne(add_, options_.discretization, deltas, order, out);
  }
  return out;
}

absl::StatusOr<double> PldAccountant::EpsOfDelta(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  const double eps = EpsOfDeltas(std::span<const double>(&delta, 1))[0];
  if (std::isinf(eps)) {
    return absl::OutOfRangeError(absl::StrFormat(
        "delta=%g is below the mass %g truncated to infinity; increase the "
        "truncation bound",
        delta,
        std::max(remove_.infinity_mass, add_.infinity_mass)));
  }
  return eps;
}

double PldAccountant::DeltaOfEps(double eps) const {
  const double h = options_.discretization;
  return std::max(DeltaOfEpsOne(remove_, h, eps), DeltaOfEpsOne(add_, h, eps));
}

double GdpCompose(std::span<const double> mus) {
  double sum = 0.0;
  for (double mu : mus) sum += mu * mu;
  return std::sqrt(sum);
}

absl::StatusOr<double> StepsToEndEps(double mu_step_lower, int64_t steps,
                                     double q, double delta,
                                     const PldOptions& options) {
  if (!(mu_step_lower >= 0.0) || steps < 1 || !(q > 0.0 && q <= 1.0) ||
      !(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("invalid step-to-end arguments");
  }
  if (mu_step_lower == 0.0) return 0.0;
  if (q == 1.0) {
    return GdpEpsOfDelta(std::sqrt(static_cast<double>(steps)) * mu_step_lower,
                         delta);
  }
  ASSIGN_OR_RETURN(PldAccountant acct,
                   PldAccountant::Build({1.0 / mu_step_lower, q, steps, 1.0},
                                        options));
  return acct.EpsOfDelta(delta);
}

}  // namespace dpaudit
