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

#include "setup.h"

#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "dpaudit/status_macros.h"
#include "dpaudit/tradeoff.h"

namespace dpaudit::cli {

absl::StatusOr<double> SigmaFor(double sigma, double eps, double delta) {
  if (!std::isnan(sigma)) {
    if (!(sigma > 0.0)) return absl::InvalidArgumentError("--sigma must be > 0");
    return sigma;
  }
  if (std::isnan(eps)) {
    return absl::InvalidArgumentError("give --sigma or --eps");
  }
  ASSIGN_OR_RETURN(const double mu, GdpMuOfEps(eps, delta));
  return 1.0 / mu;
}

absl::StatusOr<TrainSetup> MakeSetup(const TrainArgs& a) {
  ASSIGN_OR_RETURN(const Architecture arch, ParseArchitecture(a.task));
  ASSIGN_OR_RETURN(const double sigma, SigmaFor(a.sigma, a.eps, a.delta));
  const uint64_t data_seed = DeriveSeed(a.common.seed, 100);
  const uint64_t model_seed = DeriveSeed(a.common.seed, 101);
  Dataset data;
  absl::StatusOr<TinyModel> model = absl::UnknownError("unset");
  if (arch == Architecture::kLogistic) {
    data = MakeTwoGaussians(a.data_size > 0 ? a.data_size : 2000, 20, 3.0,
                            data_seed);
    model = TinyModel::Create(arch, 20, 2, 0, a.pad, model_seed);
  } else {
    data = MakeSpiral(a.data_size > 0 ? a.data_size : 600, 3, 0.2, data_seed);
    model = TinyModel::Create(arch, 2, 3, a.hidden, a.pad, model_seed);
  }
  if (!model.ok()) return model.status();
  DpSgdConfig cfg;
  cfg.q = a.q;
  cfg.eta = a.eta;
  cfg.sigma = sigma;
  cfg.clip = a.clip;
  cfg.steps = a.steps;
  cfg.qc = a.qc;
  cfg.seed = a.common.seed;
  cfg.window_begin = a.window_begin;
  cfg.window_end = a.window_end;
  ASSIGN_OR_RETURN(cfg.bug, ParseBug(a.bug));
  RETURN_IF_ERROR(cfg.Validate());
  return TrainSetup{std::move(data), *std::move(model), cfg};
}

absl::StatusOr<CanarySpec> MakeCanary(const TrainArgs& a,
                                      const TrainSetup& s) {
  ASSIGN_OR_RETURN(const CanaryKind kind, ParseCanaryKind(a.canary));
  if (a.refresh != "static" && a.refresh != "per-step") {
    return absl::InvalidArgumentError("--refresh must be static or per-step");
  }
  CanarySpec spec;
  if (IsInputCanary(kind)) {
    CraftOptions opts;
    opts.steps = a.craft_steps;
    ASSIGN_OR_RETURN(spec, MakeInputCanary(kind, s.data, s.model,
                                           DeriveSeed(a.common.seed, 102),
                                           opts));
  } else {
    spec.kind = kind;
  }
  spec.refresh = a.refresh == "static" ? CanaryRefresh::kStatic
                                       : CanaryRefresh::kPerStep;
  spec.magnitude = a.magnitude;
  return spec;
}

}  // namespace dpaudit::cli
