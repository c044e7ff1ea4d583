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
#include <random>
#include <vector>

#include "dpaudit/numerics.h"
#include "dpaudit/tradeoff.h"
#include "gtest/gtest.h"

namespace dpaudit {
namespace {

constexpr double kCp0 = 0.0036820838968656;  // 1 - 0.025^(1/1000)
constexpr double kCp500 = 0.531450827028208;  // binomial-tail bisection

TEST(ClopperPearson, Examples) {
  EXPECT_EQ(*ClopperPearsonUpper(1000, 1000, 0.975), 1.0);
  EXPECT_EQ(*ClopperPearsonUpper(7, 7, 0.5), 1.0);
  EXPECT_NEAR(*ClopperPearsonUpper(0, 1000, 0.975), kCp0, 1e-12);
  EXPECT_NEAR(*ClopperPearsonUpper(500, 1000, 0.975), kCp500, 1e-10);
  EXPECT_FALSE(ClopperPearsonUpper(5, 4, 0.9).ok());
  EXPECT_FALSE(ClopperPearsonUpper(1, 4, 1.0).ok());
}

TEST(ClopperPearson, MonotoneInCount) {
  double prev = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double u = *ClopperPearsonUpper(k, 200, 0.975);
    EXPECT_GT(u, prev);
    prev = u;
  }
}

TEST(Plugin, DpFromRates) {
  EXPECT_EQ(EpsFromRates(0.5, 0.5, 0.0), 0.0);
  EXPECT_NEAR(EpsFromRates(0.1, 0.1, 0.0), std::log(9.0), 1e-12);
  const double delta = 1e-5;
  const double alpha = 0.23;
  const double beta = 1.0 - 0.23 * std::exp(0.3) - delta;
  EXPECT_NEAR(EpsFromRates(alpha, beta, delta), 0.3, 1e-12);
}

TEST(Plugin, BoundaryPointReproducesEps) {
  for (double eps : {0.2, 1.0, 3.0}) {
    auto f = TradeoffCurve::EpsDelta(eps, 1e-5);
    for (double a : {0.001, 0.01, 0.05}) {
      EXPECT_NEAR(EpsFromRates(a, f(a), 1e-5), eps, 1e-9);
    }
  }
}

TEST(Plugin, MuFromRates) {
  const double r = StdNormalCdf(-0.5);
  EXPECT_NEAR(MuFromRates(r, r), 1.0, 1e-12);
  EXPECT_EQ(MuFromRates(0.5, 0.5), 0.0);
  EXPECT_EQ(MuFromRates(1.0, 0.0), 0.0);
  EXPECT_GT(MuFromRates(0.0, 0.0), 10.0);
}

TEST(Plugin, FdpDominatesDpAtMidRange) {
  const double delta = 1e-5;
  for (double mu : {0.5, 1.0, 2.0}) {
    const double r = StdNormalCdf(-mu / 2.0);
    EXPECT_NEAR(MuFromRates(r, r), mu, 1e-9);
    EXPECT_LT(EpsFromRates(r, r, delta), GdpEpsOfDelta(mu, delta));
  }
}

TEST(MuLowerGdpCp, Examples) {
  auto mu = MuLowerGdpCp({0, 500, 1000}, 0.05);
  ASSERT_TRUE(mu.ok());
  EXPECT_NEAR(*mu, 2.6009938973595763, 1e-8);
  EXPECT_EQ(*MuLowerGdpCp({1000, 0, 1000}, 0.05), 0.0);
  EXPECT_EQ(*MuLowerGdpCp({0, 1000, 1000}, 0.05), 0.0);
}

TEST(MuLowerGdpCp, SplitIsConfigurable) {
  const ErrorCounts c{20, 300, 1000};
  auto even = MuLowerGdpCp(c, 0.05);
  auto skew = MuLowerGdpCp(c, 0.05, {0.2});
  ASSERT_TRUE(even.ok() && skew.ok());
  EXPECT_NE(*even, *skew);
  EXPECT_FALSE(MuLowerGdpCp(c, 0.05, {1.0}).ok());
}

TEST(MuToEps, Examples) {
  EXPECT_EQ(MuToEpsLower(0.0, 1e-5), 0.0);
  EXPECT_NEAR(MuToEpsLower(0.25, 1e-5), 1.0, 0.1);
  const double eps = MuToEpsLower(1.3, 1e-5);
  auto gdp = TradeoffCurve::Gdp(1.3);
  auto env = TradeoffCurve::EpsDelta(eps, 1e-5);
  for (int i = 0; i <= 1000; ++i) {
    EXPECT_GE(gdp(i / 1000.0), env(i / 1000.0) - 1e-12);
  }
}

TEST(Monotonicity, BoundsNonincreasingInErrors) {
  const int n = 1000;
  for (int fp = 0; fp <= 400; fp += 40) {
    double prev_mu = 1e300;
    double prev_eps = 1e300;
    for (int fn = 0; fn <= 600; fn += 60) {
      const double mu = *MuLowerGdpCp({fp, fn, n}, 0.05);
      const double eps = EpsLowerDpCp({fp, fn, n}, 1e-5, 0.05)->eps_lower;
      EXPECT_LE(mu, prev_mu);
      EXPECT_LE(eps, prev_eps);
      prev_mu = mu;
      prev_eps = eps;
    }
  }
}

TEST(Posterior, NormalizedAndMeans) {
  const ErrorCounts c{37, 120, 1000};
  RatePosterior post(c);
  EXPECT_NEAR(post.FprMean(), 37.5 / 1001.0, 1e-12);
  EXPECT_NEAR(post.FnrMean(), 120.5 / 1001.0, 1e-12);
  // Whole square.
  const double all = post.BandMass([](const std::vector<double>&,
                                      std::vector<double>& lo,
                                      std::vector<double>& hi) {
    std::fill(lo.begin(), lo.end(), 0.0);
    std::fill(hi.begin(), hi.end(), 1.0);
  });
  EXPECT_NEAR(all, 1.0, 1e-6);
  // Density integrates to one on a tensor Gauss-Legendre rule.
  const auto& rule = GaussLegendreUnit(512);
  double total = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    for (size_t j = 0; j < rule.nodes.size(); ++j) {
      total += rule.weights[i] * rule.weights[j] *
               post.Density(rule.nodes[i], rule.nodes[j]);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Posterior, SymmetricCounts) {
  RatePosterior post({80, 80, 500});
  for (double a : {0.1, 0.15, 0.2}) {
    for (double b : {0.12, 0.16, 0.3}) {
      EXPECT_NEAR(post.Density(a, b), post.Density(b, a),
                  1e-12 * post.Density(a, b));
    }
  }
}

TEST(Posterior, RegionMassMonotone) {
  RatePosterior post({150, 170, 1000});
  double prev = -1.0;
  for (double eps = 0.0; eps < 4.0; eps += 0.05) {
    const double m = MassInsideDpRegion(post, eps, 1e-5);
    EXPECT_GE(m, prev - 1e-12);
    prev = m;
  }
  prev = -1.0;
  for (double mu = 0.0; mu < 4.0; mu += 0.05) {
    const double m = MassInsideGdpRegion(post, mu);
    EXPECT_GE(m, prev - 1e-12);
    prev = m;
  }
}

// Lower gamma/2 quantile of a posterior functional by direct sampling.
template <typename Param>
double MonteCarloLower(const ErrorCounts& c, double gamma, Param&& param,
                       int draws = 400000) {
  std::mt19937_64 gen(20260915);
  auto beta_draw = [&](double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(gen);
    return x / (x + gb(gen));
  };
  std::vector<double> v(draws);
  for (double& x : v) {
    const double alpha = beta_draw(c.fp + 0.5, c.n - c.fp + 0.5);
    const double beta = beta_draw(c.fn + 0.5, c.n - c.fn + 0.5);
    x = param(alpha, beta);
  }
  const size_t k = static_cast<size_t>(gamma / 2.0 * draws);
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

double MuOfPoint(double a, double b) {
  return std::fabs(*StdNormalQuantile(a) + *StdNormalQuantile(b));
}

double EpsOfPoint(double a, double b, double delta) {
  double e = 0.0;
  auto term = [&](double num, double den) {
    if (num > 0.0 && den > 0.0) e = std::max(e, std::log(num / den));
  };
  term(1.0 - delta - a, b);
  term(1.0 - delta - b, a);
  term(a - delta, 1.0 - b);
  term(b - delta, 1.0 - a);
  return e;
}

TEST(ZbFdp, MatchesMonteCarlo) {
  for (ErrorCounts c : {ErrorCounts{500, 500, 1000}, ErrorCounts{60, 200, 1000},
                        ErrorCounts{3, 40, 1000}, ErrorCounts{240, 260, 1000}}) {
    const double mc = MonteCarloLower(c, 0.05, MuOfPoint);
    auto q = MuLowerGdpZb(c, 0.05);
    ASSERT_TRUE(q.ok());
    EXPECT_NEAR(*q, mc, 0.05) << c.fp << " " << c.fn;
  }
}

TEST(ZbDp, MatchesMonteCarlo) {
  for (ErrorCounts c : {ErrorCounts{500, 500, 1000}, ErrorCounts{60, 200, 1000},
                        ErrorCounts{10, 40, 1000}}) {
    const double mc = MonteCarloLower(
        c, 0.05, [](double a, double b) { return EpsOfPoint(a, b, 1e-5); });
    auto q = EpsLowerDpZb(c, 1e-5, 0.05);
    ASSERT_TRUE(q.ok());
    EXPECT_NEAR(*q, mc, 0.05) << c.fp << " " << c.fn;
  }
}

TEST(ZbFdp, Examples) {
  EXPECT_LE(*MuLowerGdpZb({500, 500, 1000}, 0.05), 0.2);
  EXPECT_LE(*EpsLowerDpZb({500, 500, 1000}, 1e-5, 0.05), 0.05);
  EXPECT_GT(*MuLowerGdpZb({100, 100, 1000}, 0.05),
            *MuLowerGdpZb({100, 300, 1000}, 0.05));
  const int64_t n = 1000000;
  const int64_t k = std::llround(StdNormalCdf(-0.5) * n);
  EXPECT_NEAR(*MuLowerGdpZb({k, k, n}, 0.05), 1.0, 0.05);
}

TEST(Katz, Examples) {
  EXPECT_EQ(*EpsLowerKatz({100, 900, 1000}, 0.05), 0.0);
  // Parametric bootstrap (2e6 binomial draws) gives 2.0494.
  EXPECT_NEAR(*EpsLowerKatz({100, 100, 1000}, 0.05), 2.0494, 0.05);
  const double big = *EpsLowerKatz({100000, 100000, 1000000}, 0.05);
  EXPECT_NEAR(big, std::log(9.0), 0.01);
  EXPECT_LT(big, std::log(9.0));
  EXPECT_FALSE(EpsLowerKatz({100, 100, 1000}, 0.05, 1e-5).ok());
  auto zero = EpsLowerKatz({0, 0, 1000}, 0.05);
  ASSERT_TRUE(zero.ok());
  EXPECT_TRUE(std::isfinite(*zero));
}

TEST(SigmaLowerMultistep, AgreesWithGdpPathAtSingleStep) {
  for (ErrorCounts c : {ErrorCounts{300, 320, 1000}, ErrorCounts{150, 170, 1000},
                        ErrorCounts{40, 60, 1000}}) {
    auto r = SigmaLowerMultistep(c, 1.0, 1, 0.05, 1e-5);
    ASSERT_TRUE(r.ok()) << r.status();
    const double gdp = MuToEpsLower(*MuLowerGdpCp(c, 0.05), 1e-5);
    EXPECT_NEAR(r->eps_lower, gdp, 0.1) << c.fp << " " << c.fn;
    EXPECT_GE(r->sigma_hat, 0.0);
  }
}

TEST(SigmaLowerMultistep, NoSignalGivesZero) {
  auto r = SigmaLowerMultistep({500, 500, 1000}, 1.0, 1, 0.05, 1e-5);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->eps_lower, 0.0);
  EXPECT_FALSE(r->diagnostic.empty());
}

TEST(SigmaLowerMultistep, Coverage) {
  // Threshold at the midpoint of N(0, s^2) vs N(1, s^2); the recovered noise
  // multiplier should not fall below the true one more often than gamma.
  const double sigma = 1.0;
  const double rate = StdNormalCdf(-0.5 / sigma);
  std::mt19937_64 gen(7);
  std::binomial_distribution<int64_t> draw(1000, rate);
  int below = 0;
  const int repeats = 40;
  for (int i = 0; i < repeats; ++i) {
    auto r = SigmaLowerMultistep({draw(gen), draw(gen), 1000}, 1.0, 1, 0.05,
                                 1e-5);
    ASSERT_TRUE(r.ok());
    if (r->sigma_hat < sigma) ++below;
  }
  EXPECT_LE(below, 6);
}

TEST(Audit, Dispatch) {
  const ErrorCounts c{150, 170, 1000};
  AuditOptions opt;
  for (auto m : {AuditMethod::kFdpCp, AuditMethod::kFdpZb, AuditMethod::kDpCp,
                 AuditMethod::kDpZb}) {
    opt.method = m;
    auto r = Audit(c, opt);
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r->method, m);
    EXPECT_GE(r->eps_lower, 0.0);
    EXPECT_DOUBLE_EQ(r->confidence, 0.95);
  }
  opt.method = AuditMethod::kKatz;
  EXPECT_FALSE(Audit(c, opt).ok());
  opt.delta = 0.0;
  EXPECT_TRUE(Audit(c, opt).ok());

  AuditOptions multi;
  multi.steps = 100;
  auto r = Audit(c, multi);
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r->estimate);
  EXPECT_NEAR(r->eps_lower, GdpEpsOfDelta(10.0 * r->mu_lower, 1e-5), 1e-9);
  EXPECT_FALSE(Audit({5, 5, 4}, multi).ok());
}

TEST(AuditMethod, RoundTripNames) {
  for (auto m : {AuditMethod::kFdpCp, AuditMethod::kFdpZb, AuditMethod::kDpCp,
                 AuditMethod::kDpZb, AuditMethod::kKatz}) {
    EXPECT_EQ(*ParseAuditMethod(AuditMethodName(m)), m);
  }
  EXPECT_FALSE(ParseAuditMethod("gdp").ok());
}

}  // namespace
}  // namespace dpaudit
