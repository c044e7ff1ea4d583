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

#include "io.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace dpaudit::cli {

std::string FormatObservations(const ObservationPair& obs) {
  std::string out = "world,score\n";
  out.reserve(out.size() + 26 * (obs.d.scores.size() + obs.dprime.scores.size()));
  for (double s : obs.d.scores) absl::StrAppendFormat(&out, "0,%.17g\n", s);
  for (double s : obs.dprime.scores) absl::StrAppendFormat(&out, "1,%.17g\n", s);
  return out;
}

absl::StatusOr<ObservationPair> ParseObservations(std::string_view text) {
  ObservationPair obs;
  obs.d.world = World::kD;
  obs.dprime.world = World::kDprime;
  int64_t line_no = 0;
  bool header = false;
  const absl::string_view all(text.data(), text.size());
  for (absl::string_view line : absl::StrSplit(all, '\n')) {
    ++line_no;
    line = absl::StripSuffix(line, "\r");
    if (line.empty()) continue;
    if (!header) {
      if (line != "world,score") {
        return absl::InvalidArgumentError(absl::StrFormat(
            "line %d: expected header 'world,score', got '%s'", line_no,
            std::string(line)));
      }
      header = true;
      continue;
    }
    const std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    int world = -1;
    double score = 0.0;
    if (cells.size() != 2 || !absl::SimpleAtoi(cells[0], &world) ||
        (world != 0 && world != 1) || !absl::SimpleAtod(cells[1], &score) ||
        !std::isfinite(score)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line %d: malformed row '%s' (want world in {0,1} and a finite "
          "score)",
          line_no, std::string(line)));
    }
    (world == 0 ? obs.d.scores : obs.dprime.scores).push_back(score);
  }
  if (!header) return absl::InvalidArgumentError("empty observation file");
  if (obs.d.scores.empty() || obs.dprime.scores.empty()) {
    return absl::InvalidArgumentError(
        "observation file needs rows for both worlds");
  }
  if (obs.d.scores.size() != obs.dprime.scores.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "world sizes differ: %d rows for world 0, %d for world 1",
        obs.d.scores.size(), obs.dprime.scores.size()));
  }
  return obs;
}

absl::StatusOr<ObservationPair> ReadObservations(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<ObservationPair> obs = ParseObservations(*text);
  if (!obs.ok()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s: %s", path, obs.status().message()));
  }
  return obs;
}

std::string FormatTradeoff(const std::vector<PrivacyPoint>& points) {
  std::string out = "alpha,beta\n";
  for (const PrivacyPoint& p : points) {
    absl::StrAppendFormat(&out, "%.10g,%.10g\n", p.alpha, p.beta);
  }
  return out;
}

std::string FormatRateCurve(const RateCurve& curve) {
  std::string out = "threshold,alpha,beta\n";
  for (const RatePoint& p : curve.points) {
    absl::StrAppendFormat(&out, "%.17g,%.10g,%.10g\n", p.threshold, p.alpha,
                          p.beta);
  }
  return out;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrFormat("cannot open %s", path));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteFileAtomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::PermissionDeniedError("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) return absl::DataLossError("short write to " + tmp);
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return absl::PermissionDeniedError("cannot rename onto " + path);
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> Sha256File(const std::string& path) {
  absl::StatusOr<std::string> data = ReadFile(path);
  if (!data.ok()) return data.status();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data->data(), data->size(), md, &len, EVP_sha256(), nullptr) != 1) {
    return absl::InternalError("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) absl::StrAppendFormat(&hex, "%02x", md[i]);
  return hex;
}

std::string ResolveOutput(const std::string& path) {
  const char* dir = std::getenv("DPAUDIT_OUT_DIR");
  if (dir == nullptr || *dir == '\0' || path.empty() ||
      std::filesystem::path(path).is_absolute()) {
    return path;
  }
  return (std::filesystem::path(dir) / path).string();
}

}  // namespace dpaudit::cli
