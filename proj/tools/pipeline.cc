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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "cli.h"
#include "dpaudit/accountant.h"
#include "dpaudit/attack.h"
#include "dpaudit/mechanisms.h"
#include "dpaudit/status_macros.h"
#include "dpaudit/tradeoff.h"
#include "io.h"
#include "json.hpp"
#include "setup.h"

namespace dpaudit::cli {
namespace {

using Json = nlohmann::ordered_json;

// Flat view of a TOML file: "section.key" -> values.
class Config {
 public:
  static absl::StatusOr<Config> Load(const std::string& path) {
    Config c;
    try {
      CLI::ConfigTOML parser;
      for (const CLI::ConfigItem& item : parser.from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;
        c.values_[item.fullname()] = item.inputs;
      }
    } catch (const CLI::Error& e) {
      return absl::InvalidArgumentError(
          absl::StrFormat("%s: %s", path, e.what()));
    }
    return c;
  }

  bool Has(const std::string& key) const { return values_.count(key) > 0; }

  std::string String(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return fallback;
    return it->second.front();
  }

  std::vector<std::string> Strings(const std::string& key,
                                   std::vector<std::string> fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  absl::StatusOr<std::vector<double>> Numbers(
      const std::string& key, std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& s : it->second) {
      double v = 0.0;
      if (!absl::SimpleAtod(s, &v)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("config key %s: '%s' is not a number", key, s));
      }
      out.push_back(v);
    }
    return out;
  }

  absl::StatusOr<double> Number(const std::string& key, double fallback) const {
    ASSIGN_OR_RETURN(const std::vector<double> v, Numbers(key, {fallback}));
    if (v.size() != 1) {
      return absl::InvalidArgumentError(
          absl::StrFormat("config key %s needs a single value", key));
    }
    return v.front();
  }

 private:
  std::map<std::string, std::vector<std::string>> values_;
};

absl::Status Stage(const std::string& name, const absl::Status& s) {
  if (s.ok()) return s;
  return absl::Status(s.code(),
                      absl::StrFormat("stage %s: %s", name, s.message()));
}

// One audited observation set: the first n scores of a shared pair.
struct Job {
  int setting = 0;
  int64_t n = 0;
  int64_t run = 0;
  std::shared_ptr<const ObservationPair> obs;
  std::string csv;
};

struct Setting {
  std::string label;
  double value = 0.0;
  double theory_eps = 0.0;
};

struct Source {
  std::vector<Setting> settings;
  std::vector<Job> jobs;
  // Distinct observation sets with the file name they are written to.
  std::vector<std::pair<std::string, std::shared_ptr<const ObservationPair>>>
      files;
};

std::string Tag(double v) { return absl::StrFormat("%g", v); }

absl::StatusOr<Source> SimulateSource(const Config& cfg, uint64_t seed,
                                      int jobs) {
  Source src;
  const std::string mechanism = cfg.String("simulate.mechanism", "gaussian");
  if (mechanism != "gaussian" && mechanism != "subsampled") {
    return absl::InvalidArgumentError(
        "simulate.mechanism must be gaussian or subsampled");
  }
  ASSIGN_OR_RETURN(const double delta, cfg.Number("simulate.delta", 1e-5));
  ASSIGN_OR_RETURN(const double q, cfg.Number("simulate.q", 1.0));
  ASSIGN_OR_RETURN(const std::vector<double> eps, cfg.Numbers("simulate.eps", {}));
  ASSIGN_OR_RETURN(const std::vector<double> sigmas,
                   cfg.Numbers("simulate.sigma", {}));
  ASSIGN_OR_RETURN(const std::vector<double> ns, cfg.Numbers("simulate.n", {1000}));
  ASSIGN_OR_RETURN(const double runs, cfg.Number("simulate.runs", 1));
  if (eps.empty() == sigmas.empty()) {
    return absl::InvalidArgumentError("give exactly one of simulate.eps and simulate.sigma");
  }
  if (runs < 1) return absl::InvalidArgumentError("simulate.runs must be >= 1");
  std::vector<double> sigma_of;
  for (double e : eps) {
    ASSIGN_OR_RETURN(const double mu, GdpMuOfEps(e, delta));
    src.settings.push_back({"eps" + Tag(e), e, e});
    sigma_of.push_back(1.0 / mu);
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) return absl::InvalidArgumentError("simulate.sigma must be > 0");
    src.settings.push_back({"sigma" + Tag(s), s, GdpEpsOfDelta(1.0 / s, delta)});
    sigma_of.push_back(s);
  }
  for (size_t i = 0; i < src.settings.size(); ++i) {
    for (double n : ns) {
      for (int64_t r = 0; r < static_cast<int64_t>(runs); ++r) {
        Job j;
        j.setting = static_cast<int>(i);
        j.n = static_cast<int64_t>(n);
        j.run = r;
        j.csv = absl::StrFormat("obs/%s_n%d_run%d.csv", src.settings[i].label,
                                j.n, r);
        src.jobs.push_back(std::move(j));
      }
    }
  }
  std::vector<absl::Status> errors(src.jobs.size());
  ParallelFor(static_cast<int64_t>(src.jobs.size()), jobs, [&](int64_t k) {
    Job& j = src.jobs[k];
    absl::StatusOr<ObservationPair> obs = SimulateSubsampledGaussianPair(
        sigma_of[j.setting], mechanism == "gaussian" ? 1.0 : q, j.n,
        DeriveSeed(seed, k));
    if (!obs.ok()) {
      errors[k] = obs.status();
      return;
    }
    j.obs = std::make_shared<const ObservationPair>(*std::move(obs));
  });
  for (const absl::Status& s : errors) RETURN_IF_ERROR(s);
  for (const Job& j : src.jobs) src.files.emplace_back(j.csv, j.obs);
  return src;
}

absl::StatusOr<Source> TrainSource(const Config& cfg, uint64_t seed,
                                   int jobs) {
  Source src;
  TrainArgs base;
  base.common.seed = seed;
  base.task = cfg.String("train.task", base.task);
  base.canary = cfg.String("train.canary", base.canary);
  base.refresh = cfg.String("train.refresh", base.refresh);
  ASSIGN_OR_RETURN(base.q, cfg.Number("train.q", base.q));
  ASSIGN_OR_RETURN(base.eta, cfg.Number("train.eta", base.eta));
  ASSIGN_OR_RETURN(base.clip, cfg.Number("train.clip", base.clip));
  ASSIGN_OR_RETURN(base.qc, cfg.Number("train.qc", base.qc));
  ASSIGN_OR_RETURN(base.delta, cfg.Number("train.delta", base.delta));
  ASSIGN_OR_RETURN(base.magnitude, cfg.Number("train.magnitude", base.magnitude));
  ASSIGN_OR_RETURN(const double pad, cfg.Number("train.pad", base.pad));
  base.pad = static_cast<int64_t>(pad);
  ASSIGN_OR_RETURN(base.eps, cfg.Number("train.claimed_eps", 1.27));
  const std::string bug = cfg.String("train.bug", "none");
  ASSIGN_OR_RETURN(const std::vector<double> true_eps,
                   cfg.Numbers("train.true_eps", {base.eps}));
  ASSIGN_OR_RETURN(const double seeds, cfg.Number("train.seeds", 100));
  ASSIGN_OR_RETURN(std::vector<double> counts,
                   cfg.Numbers("train.observations", {1000}));
  ASSIGN_OR_RETURN(const double runs, cfg.Number("train.runs", 1));
  if (counts.empty() || runs < 1) {
    return absl::InvalidArgumentError("train.observations and train.runs must be set");
  }
  std::sort(counts.begin(), counts.end());
  base.steps = static_cast<int64_t>(counts.back());

  std::vector<TrainArgs> args;
  for (double e : true_eps) {
    TrainArgs a = base;
    if (bug == "noise-scale") {
      ASSIGN_OR_RETURN(const double mu, GdpMuOfEps(e, a.delta));
      a.bug = absl::StrFormat("noise-scale:%.17g", 1.0 / mu);
    } else if (bug == "biased-noise") {
      a.bug = absl::StrFormat("biased-noise:%d", static_cast<int64_t>(seeds));
    } else {
      a.bug = bug;
    }
    src.settings.push_back({"eps" + Tag(e), e, e});
    args.push_back(std::move(a));
  }
  struct Unit {
    int setting;
    int64_t run;
    std::shared_ptr<const ObservationPair> obs;
  };
  std::vector<Unit> units;
  for (size_t i = 0; i < args.size(); ++i) {
    for (int64_t r = 0; r < static_cast<int64_t>(runs); ++r) {
      units.push_back({static_cast<int>(i), r, nullptr});
    }
  }
  std::vector<absl::Status> errors(units.size());
  ParallelFor(static_cast<int64_t>(units.size()), jobs, [&](int64_t k) {
    Unit& u = units[k];
    TrainArgs a = args[u.setting];
    a.common.seed = DeriveSeed(seed, u.run);
    absl::StatusOr<TrainSetup> setup = MakeSetup(a);
    if (!setup.ok()) {
      errors[k] = setup.status();
      return;
    }
    absl::StatusOr<CanarySpec> canary = MakeCanary(a, *setup);
    if (!canary.ok()) {
      errors[k] = canary.status();
      return;
    }
    absl::StatusOr<WhiteboxResult> r =
        TrainWhitebox(setup->data, setup->model, setup->cfg, *canary);
    if (!r.ok()) {
      errors[k] = r.status();
      return;
    }
    u.obs = std::make_shared<const ObservationPair>(std::move(r->observations));
  });
  for (const absl::Status& s : errors) RETURN_IF_ERROR(s);
  for (const Unit& u : units) {
    const std::string csv = absl::StrFormat(
        "obs/%s_run%d.csv", src.settings[u.setting].label, u.run);
    src.files.emplace_back(csv, u.obs);
    for (double n : counts) {
      Job j;
      j.setting = u.setting;
      j.n = static_cast<int64_t>(n);
      j.run = u.run;
      j.obs = u.obs;
      j.csv = csv;
      src.jobs.push_back(std::move(j));
    }
  }
  return src;
}

struct AuditRow {
  std::string method;
  double eps_lower = 0.0;
  double mu_lower = 0.0;
  double end_eps = NAN;
};

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SdOf(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = MeanOf(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

absl::Status RunStages(const Config& cfg, uint64_t seed, const std::string& dir,
                       int jobs, std::ostream& out,
                       std::vector<std::string>* written) {
  namespace fs = std::filesystem;
  const std::string source = cfg.String("source", "simulate");
  const std::string name = cfg.String("name", "pipeline");

  absl::StatusOr<Source> src_or = absl::InvalidArgumentError(
      "source must be simulate or train");
  if (source == "simulate") src_or = SimulateSource(cfg, seed, jobs);
  if (source == "train") src_or = TrainSource(cfg, seed, jobs);
  RETURN_IF_ERROR(Stage(source, src_or.status()));
  const Source& src = *src_or;
  for (const Job& j : src.jobs) {
    if (j.n < 1 || !j.obs || static_cast<int64_t>(j.obs->d.scores.size()) < j.n) {
      return Stage(source, absl::FailedPreconditionError(absl::StrFormat(
                               "%s produced %d observations, %d requested",
                               j.csv, j.obs ? j.obs->d.scores.size() : 0, j.n)));
    }
  }

  auto write = [&](const std::string& rel, const std::string& content) {
    const std::string path = (fs::path(dir) / rel).string();
    RETURN_IF_ERROR(WriteFileAtomic(path, content));
    written->push_back(path);
    return absl::OkStatus();
  };
  for (const auto& [rel, obs] : src.files) {
    RETURN_IF_ERROR(Stage(source, write(rel, FormatObservations(*obs))));
  }

  auto prefix = [](const Job& j) {
    const std::span<const double> d(j.obs->d.scores);
    const std::span<const double> p(j.obs->dprime.scores);
    return std::make_pair(d.subspan(0, j.n), p.subspan(0, j.n));
  };

  // Sweep: one curve per setting and size, from the first run.
  for (const Job& j : src.jobs) {
    if (j.run != 0) continue;
    const auto [d, p] = prefix(j);
    absl::StatusOr<RateCurve> curve = SweepThresholds(d, p);
    RETURN_IF_ERROR(Stage("sweep", curve.status()));
    RETURN_IF_ERROR(Stage(
        "sweep", write(absl::StrFormat("curves/%s_n%d.csv",
                                       src.settings[j.setting].label, j.n),
                       FormatRateCurve(*curve))));
  }

  // Audit.
  const std::vector<std::string> methods =
      cfg.Strings("audit.methods", {"fdp-cp", "dp-cp"});
  SweepAuditOptions base;
  ASSIGN_OR_RETURN(base.audit.delta, cfg.Number("audit.delta", 1e-5));
  ASSIGN_OR_RETURN(base.audit.gamma, cfg.Number("audit.gamma", 0.05));
  const bool has_claim = cfg.Has("audit.claimed_eps");
  ASSIGN_OR_RETURN(const double claimed, cfg.Number("audit.claimed_eps", 0.0));
  std::vector<SweepAuditOptions> per_method;
  for (const std::string& m : methods) {
    SweepAuditOptions o = base;
    absl::StatusOr<AuditMethod> parsed = ParseAuditMethod(m);
    RETURN_IF_ERROR(Stage("audit", parsed.status()));
    o.audit.method = *parsed;
    per_method.push_back(o);
  }
  std::vector<AuditRow> rows(src.jobs.size() * methods.size());
  std::vector<absl::Status> errors(rows.size());
  ParallelFor(static_cast<int64_t>(rows.size()), jobs, [&](int64_t k) {
    const Job& j = src.jobs[k / methods.size()];
    const size_t m = k % methods.size();
    const auto [d, p] = prefix(j);
    absl::StatusOr<SweepAuditResult> r = SweepAudit(d, p, per_method[m]);
    if (!r.ok()) {
      errors[k] = r.status();
      return;
    }
    rows[k] = {methods[m], r->result.eps_lower, r->result.mu_lower, NAN};
  });
  for (const absl::Status& s : errors) RETURN_IF_ERROR(Stage("audit", s));

  // Compose: end-to-end eps from each per-step f-DP bound.
  ASSIGN_OR_RETURN(const double steps, cfg.Number("compose.steps", 1));
  ASSIGN_OR_RETURN(const double q, cfg.Number("compose.q", 1.0));
  for (size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].method.rfind("fdp", 0) != 0) continue;
    absl::StatusOr<double> e =
        StepsToEndEps(rows[k].mu_lower, static_cast<int64_t>(steps), q,
                      base.audit.delta);
    RETURN_IF_ERROR(Stage("compose", e.status()));
    rows[k].end_eps = *e;
  }

  // Summary grouped by setting, size and method.
  Json results;
  results["name"] = name;
  results["source"] = source;
  results["seed"] = seed;
  results["delta"] = base.audit.delta;
  results["gamma"] = base.audit.gamma;
  results["compose_steps"] = static_cast<int64_t>(steps);
  if (has_claim) results["claimed_eps"] = claimed;
  std::string summary = "setting,n,method,runs,mean_eps_lower,sd_eps_lower,"
                        "mean_mu_lower,mean_end_eps,theory_eps,violations\n";
  Json table = Json::array();
  std::map<std::tuple<int, int64_t, size_t>, std::vector<size_t>> groups;
  for (size_t k = 0; k < rows.size(); ++k) {
    const Job& j = src.jobs[k / methods.size()];
    groups[{j.setting, j.n, k % methods.size()}].push_back(k);
  }
  for (const auto& [key, members] : groups) {
    const auto& [setting, n, m] = key;
    std::vector<double> eps, mu, end;
    int64_t violations = 0;
    for (size_t k : members) {
      eps.push_back(rows[k].eps_lower);
      mu.push_back(rows[k].mu_lower);
      end.push_back(rows[k].end_eps);
      if (has_claim && rows[k].eps_lower > claimed) ++violations;
    }
    const Setting& s = src.settings[setting];
    const double mean_end = MeanOf(end);
    absl::StrAppendFormat(
        &summary, "%s,%d,%s,%d,%.10g,%.10g,%.10g,%s,%.10g,%s\n", s.label, n,
        methods[m], members.size(), MeanOf(eps), SdOf(eps), MeanOf(mu),
        std::isfinite(mean_end) ? absl::StrFormat("%.10g", mean_end) : "",
        s.theory_eps, has_claim ? absl::StrFormat("%d", violations) : "");
    Json row;
    row["setting"] = s.label;
    row["theory_eps"] = s.theory_eps;
    row["n"] = n;
    row["method"] = methods[m];
    row["runs"] = members.size();
    row["mean_eps_lower"] = MeanOf(eps);
    row["sd_eps_lower"] = SdOf(eps);
    row["mean_mu_lower"] = MeanOf(mu);
    if (std::isfinite(mean_end)) row["mean_end_eps"] = mean_end;
    if (has_claim) row["violations"] = violations;
    row["eps_lower"] = eps;
    table.push_back(row);
  }
  results["summary"] = table;
  RETURN_IF_ERROR(write("summary.csv", summary));
  RETURN_IF_ERROR(write("results.json", results.dump(2) + "\n"));
  out << summary;
  return absl::OkStatus();
}

}  // namespace

int RunPipeline(const std::string& config_path, const std::string& out_dir,
                int jobs, std::optional<uint64_t> seed, std::ostream& out,
                std::ostream& err, Manifest manifest) {
  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<Config> cfg = Config::Load(config_path);
  if (!cfg.ok()) {
    err << "error: " << cfg.status().message() << "\n";
    return kExitError;
  }
  if (!seed.has_value()) {
    absl::StatusOr<double> s = cfg->Number("seed", 0);
    if (!s.ok()) {
      err << "error: " << s.status().message() << "\n";
      return kExitError;
    }
    seed = static_cast<uint64_t>(*s);
  }
  manifest.seed = *seed;
  std::vector<std::string> written;
  absl::Status st = RunStages(*cfg, *seed, out_dir, jobs, out, &written);
  if (!st.ok()) {
    err << "error: " << st.message() << "\n";
    return kExitError;
  }
  manifest.inputs = {config_path};
  manifest.outputs = written;
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  st = WriteManifest(
      (std::filesystem::path(out_dir) / "manifest.json").string(), manifest);
  if (!st.ok()) {
    err << "error: " << st.message() << "\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace dpaudit::cli
