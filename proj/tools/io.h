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

#ifndef DPAUDIT_TOOLS_IO_H_
#define DPAUDIT_TOOLS_IO_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpaudit/attack.h"
#include "dpaudit/mechanisms.h"
#include "dpaudit/tradeoff.h"

namespace dpaudit::cli {

// Observation CSV: header "world,score", world in {0, 1}, scores with 17
// significant digits, "\n" line endings. D rows come first.
std::string FormatObservations(const ObservationPair& obs);
absl::StatusOr<ObservationPair> ParseObservations(std::string_view text);
absl::StatusOr<ObservationPair> ReadObservations(const std::string& path);

// "alpha,beta" rows with 10 significant digits.
std::string FormatTradeoff(const std::vector<PrivacyPoint>& points);
// "threshold,alpha,beta" rows.
std::string FormatRateCurve(const RateCurve& curve);

absl::StatusOr<std::string> ReadFile(const std::string& path);
// Writes to a temporary sibling and renames it over `path`.
absl::Status WriteFileAtomic(const std::string& path, std::string_view content);
absl::StatusOr<std::string> Sha256File(const std::string& path);

// Relative paths resolve against $DPAUDIT_OUT_DIR when it is set.
std::string ResolveOutput(const std::string& path);

}  // namespace dpaudit::cli

#endif  // DPAUDIT_TOOLS_IO_H_
