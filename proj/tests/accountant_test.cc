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

#include <cmath>
#include <vector>

#include "dpaudit/tradeoff.h"
#include "gtest/gtest.h"

namespace dpaudit {
namespace {

PldAccountant MustBuild(const MechanismSpec& spec, const PldOptions& opt = {}) {
  auto acct = PldAccountant::Build(spec, opt);
  EXPECT_TRUE(acct.ok()) << acct.status();
  return *std::move(acct);
}

TEST(GdpCompose, Examples) {
  const std::vector<double> a = {3, 4};
  EXPECT_DOUBLE_EQ(GdpCompose(a), 5.0);
  const std::vector<double> one = {0.7};
  EXPECT_DOUBLE_EQ(GdpCompose(one), 0.7);
  const std::vector<double> many(100, 0.1);
  EXPECT_NEAR(GdpCompose(many), 1.0, 1e-12);
  const std::vector<double> b = {4, 3};
  EXPECT_EQ(GdpCompose(a), GdpCompose(b));
}

TEST(MechanismSpec, Validate) {
  EXPECT_TRUE(MechanismSpec{}.Validate().ok());
  EXPECT_FALSE((MechanismSpec{0.0, 1.0, 1, 1.0}).Validate().ok());
  EXPECT_FALSE((MechanismSpec{1.0, 0.0, 1, 1.0}).Validate().ok());
  EXPECT_FALSE((MechanismSpec{1.0, 1.5, 1, 1.0}).Validate().ok());
  EXPECT_FALSE((MechanismSpec{1.0, 1.0, 0, 1.0}).Validate().ok());
  EXPECT_FALSE((MechanismSpec{1.0, 1.0, 1, -1.0}).Validate().ok());
  EXPECT_FALSE(PldAccountant::Build({0.0, 1.0, 1, 1.0}).ok());
}

TEST(Pld, GaussianMatchesGdp) {
  auto one = MustBuild({1.0, 1.0, 1, 1.0});
  EXPECT_NEAR(*one.EpsOfDelta(1e-5), GdpEpsOfDelta(1.0, 1e-5), 1e-2);
  auto four = MustBuild({1.0, 1.0, 4, 1.0});
  EXPECT_NEAR(*four.EpsOfDelta(1e-5), GdpEpsOfDelta(2.0, 1e-5), 1e-2);
  // Pessimistic rounding: never below the exact value by more than noise.
  EXPECT_GE(*one.EpsOfDelta(1e-5), GdpEpsOfDelta(1.0, 1e-5) - 1e-6);
}

TEST(Pld, MatchesIndependentAccountant) {
  // Frozen from an independent pessimistic PLD implementation at the same
  // grid spacing (1e-4).
  struct Case {
    double sigma, q;
    int64_t steps;
    double eps;
  };
  for (const Case& c : {Case{1.0, 0.1, 50, 5.150762496834473},
                        Case{0.9, 0.2, 20, 7.981013903916704},
                        Case{2.0, 0.01, 100, 0.19479671090127204},
                        Case{1.0, 1.0, 4, 9.997456150937316}}) {
    auto acct = MustBuild({c.sigma, c.q, c.steps, 1.0});
    EXPECT_NEAR(*acct.EpsOfDelta(1e-5), c.eps, 1e-4)
        << c.sigma << " " << c.q << " " << c.steps;
  }
}

TEST(Pld, LargeNoiseIsNearlyPrivate) {
  auto acct = MustBuild({100.0, 1.0, 1, 1.0});
  EXPECT_LE(*acct.EpsOfDelta(1e-5), 0.1);
}

TEST(Pld, MassesSumToOne) {
  for (MechanismSpec spec : {MechanismSpec{1.0, 1.0, 1, 1.0},
                             MechanismSpec{0.8, 0.1, 10, 1.0},
                             MechanismSpec{2.0, 0.01, 100, 1.0}}) {
    auto acct = MustBuild(spec);
    for (const DiscretePld* d : {&acct.remove_direction(), &acct.add_direction()}) {
      EXPECT_NEAR(d->TotalMass(), 1.0, 1e-9);
      for (double m : d->mass) EXPECT_GE(m, 0.0);
    }
  }
}

TEST(Pld, EpsNonincreasingInDelta) {
  auto acct = MustBuild({0.9, 0.2, 20, 1.0});
  double prev = 1e300;
  for (double d = 1e-9; d < 0.9; d *= 1.3) {
    const double e = *acct.EpsOfDelta(d);
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST(Pld, BatchMatchesSingleQueries) {
  auto acct = MustBuild({0.9, 0.2, 20, 1.0});
  const std::vector<double> deltas = {0.3, 1e-5, 1e-3, 0.999, 1e-7};
  auto batch = acct.EpsOfDeltas(deltas);
  for (size_t i = 0; i < deltas.size(); ++i) {
    EXPECT_EQ(batch[i], *acct.EpsOfDelta(deltas[i]));
  }
}

TEST(Pld, EpsAndDeltaAreConsistent) {
  auto acct = MustBuild({0.9, 0.2, 20, 1.0});
  for (double d : {1e-7, 1e-5, 1e-3, 0.1}) {
    const double e = *acct.EpsOfDelta(d);
    EXPECT_NEAR(acct.DeltaOfEps(e), d, 1e-9 + 1e-6 * d);
  }
}

TEST(Pld, CompositionIncreasesEps) {
  for (double q : {0.05, 0.5, 1.0}) {
    auto one = MustBuild({1.2, q, 1, 1.0});
    auto many = MustBuild({1.2, q, 8, 1.0});
    EXPECT_GE(*many.EpsOfDelta(1e-5), *one.EpsOfDelta(1e-5));
  }
}

TEST(Pld, SubsamplingAmplifies) {
  auto full = MustBuild({1.0, 1.0, 10, 1.0});
  auto sub = MustBuild({1.0, 0.1, 10, 1.0});
  EXPECT_LT(*sub.EpsOfDelta(1e-5), *full.EpsOfDelta(1e-5));
}

TEST(Pld, HalvingSpacingConverges) {
  for (MechanismSpec spec : {MechanismSpec{1.0, 1.0, 4, 1.0},
                             MechanismSpec{1.0, 0.1, 50, 1.0}}) {
    auto coarse = MustBuild(spec);
    PldOptions fine;
    fine.discretization = 5e-5;
    auto finer = MustBuild(spec, fine);
    EXPECT_NEAR(*coarse.EpsOfDelta(1e-5), *finer.EpsOfDelta(1e-5), 1e-2);
    EXPECT_GE(*coarse.EpsOfDelta(1e-5), *finer.EpsOfDelta(1e-5) - 1e-9);
  }
}

TEST(Pld, ResolutionError) {
  // Almost all loss mass sits beyond the truncation bound.
  auto acct = MustBuild({0.01, 1.0, 1, 1.0});
  auto eps = acct.EpsOfDelta(1e-5);
  EXPECT_FALSE(eps.ok());
  EXPECT_EQ(eps.status().code(), absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(acct.EpsOfDelta(0.0).ok());
}

TEST(Pld, Deterministic) {
  auto a = MustBuild({0.7, 0.3, 5, 1.0});
  auto b = MustBuild({0.7, 0.3, 5, 1.0});
  EXPECT_EQ(a.remove_direction().mass, b.remove_direction().mass);
  EXPECT_EQ(*a.EpsOfDelta(1e-5), *b.EpsOfDelta(1e-5));
}

TEST(StepsToEndEps, Examples) {
  EXPECT_NEAR(*StepsToEndEps(0.1, 100, 1.0, 1e-5), GdpEpsOfDelta(1.0, 1e-5),
              1e-9);
  EXPECT_NEAR(*StepsToEndEps(0.1, 100, 1.0, 1e-5), 4.37717809568122, 1e-6);
  EXPECT_EQ(*StepsToEndEps(0.0, 50, 0.3, 1e-5), 0.0);
  EXPECT_EQ(*StepsToEndEps(0.6, 1, 1.0, 1e-5), GdpEpsOfDelta(0.6, 1e-5));
  auto sub = StepsToEndEps(0.8, 10, 0.2, 1e-5);
  ASSERT_TRUE(sub.ok());
  EXPECT_EQ(*sub, *MustBuild({1.25, 0.2, 10, 1.0}).EpsOfDelta(1e-5));
  EXPECT_FALSE(StepsToEndEps(-1.0, 1, 1.0, 1e-5).ok());
}

}  // namespace
}  // namespace dpaudit
