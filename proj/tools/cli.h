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

#ifndef DPAUDIT_TOOLS_CLI_H_
#define DPAUDIT_TOOLS_CLI_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace dpaudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

inline constexpr char kToolVersion[] = "0.1.0";

// Runs the command line `args` (args[0] is the program name). Reports go to
// `out` and diagnostics to `err`; the return value is the exit status.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  // Every option of the command with its effective value.
  std::string flags;
  uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_clock_seconds = 0.0;
};

// Digests every input and output and writes the manifest JSON to `path`.
absl::Status WriteManifest(const std::string& path, const Manifest& manifest);

// Runs a pipeline described by a TOML config. Writes observation and curve
// CSVs, summary.csv, results.json and manifest.json under `out_dir`.
// `seed`, when set, replaces the config's top-level seed.
int RunPipeline(const std::string& config_path, const std::string& out_dir,
                int jobs, std::optional<uint64_t> seed, std::ostream& out,
                std::ostream& err, Manifest manifest);

}  // namespace dpaudit::cli

#endif  // DPAUDIT_TOOLS_CLI_H_
