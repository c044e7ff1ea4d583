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

#ifndef DPAUDIT_TOOLS_SETUP_H_
#define DPAUDIT_TOOLS_SETUP_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "absl/status/statusor.h"
#include "dpaudit/dpsgd.h"

namespace dpaudit::cli {

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

struct Common {
  uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

// Returns sigma when given, otherwise the GDP noise level of (eps, delta).
absl::StatusOr<double> SigmaFor(double sigma, double eps, double delta);

struct TrainArgs {
  Common common;
  std::string task = "logistic";
  std::string mode = "whitebox";
  std::string canary = "dirac";
  std::string refresh = "per-step";
  std::string bug = "none";
  double q = 0.01;
  double eta = 0.01;
  double sigma = kNoValue;
  double eps = kNoValue;
  double delta = 1e-5;
  double clip = 1.0;
  int64_t steps = 1000;
  double qc = 1.0;
  double magnitude = 1.0;
  int64_t pad = 32;
  int64_t hidden = 16;
  int64_t data_size = 0;
  int64_t runs = 100;
  int64_t window_begin = 0;
  int64_t window_end = 0;
  int64_t craft_steps = 50;
};

struct TrainSetup {
  Dataset data;
  TinyModel model;
  DpSgdConfig cfg;
};

// Task dataset, initial model and DP-SGD config. Logistic uses 2000 points
// of two 20-dimensional Gaussians; mlp uses a 600-point 3-class spiral.
absl::StatusOr<TrainSetup> MakeSetup(const TrainArgs& a);
absl::StatusOr<CanarySpec> MakeCanary(const TrainArgs& a, const TrainSetup& s);

}  // namespace dpaudit::cli

#endif  // DPAUDIT_TOOLS_SETUP_H_
