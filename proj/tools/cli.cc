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

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_format.h"
#include "dpaudit/accountant.h"
#include "dpaudit/attack.h"
#include "dpaudit/dpsgd.h"
#include "dpaudit/estimators.h"
#include "dpaudit/mechanisms.h"
#include "dpaudit/status_macros.h"
#include "dpaudit/tradeoff.h"
#include "io.h"
#include "setup.h"
#include "json.hpp"

namespace dpaudit::cli {
namespace {

using Json = nlohmann::ordered_json;

// A command result: exit status plus the files it read and wrote.
struct Outcome {
  int code = kExitOk;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};


void AddCommon(CLI::App* app, Common* c, bool with_out) {
  app->add_option("--seed", c->seed, "Random seed")->capture_default_str();
  app->add_option("--jobs", c->jobs, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  if (with_out) app->add_option("--out", c->out, "Output file");
}

Json Finite(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

absl::Status Emit(const std::string& path, const std::string& content,
                  Outcome* outcome) {
  const std::string resolved = ResolveOutput(path);
  RETURN_IF_ERROR(WriteFileAtomic(resolved, content));
  outcome->outputs.push_back(resolved);
  return absl::OkStatus();
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
  std::string mechanism = "gaussian";
  double sigma = kNoValue;
  double eps = kNoValue;
  double delta = 1e-5;
  double q = 1.0;
  int64_t n = 1000;
};

absl::StatusOr<Outcome> Simulate(const SimulateArgs& a, std::ostream& out) {
  Outcome outcome;
  ObservationPair obs;
  Json report;
  report["mechanism"] = a.mechanism;
  if (a.mechanism == "rr") {
    if (std::isnan(a.eps)) return absl::InvalidArgumentError("rr needs --eps");
    ASSIGN_OR_RETURN(obs, SimulateRandomizedResponse(a.eps, a.n, a.common.seed));
    report["eps"] = a.eps;
  } else if (a.mechanism == "gaussian" || a.mechanism == "subsampled") {
    ASSIGN_OR_RETURN(const double sigma, SigmaFor(a.sigma, a.eps, a.delta));
    const double q = a.mechanism == "gaussian" ? 1.0 : a.q;
    ASSIGN_OR_RETURN(obs, SimulateSubsampledGaussianPair(sigma, q, a.n,
                                                         a.common.seed));
    report["sigma"] = sigma;
    report["q"] = q;
    report["mu"] = 1.0 / sigma;
    if (q == 1.0) report["eps_theory"] = Finite(GdpEpsOfDelta(1.0 / sigma, a.delta));
    report["delta"] = a.delta;
  } else {
    return absl::InvalidArgumentError(absl::StrFormat(
        "unknown mechanism '%s' (want gaussian, subsampled or rr)",
        a.mechanism));
  }
  report["n"] = a.n;
  report["seed"] = a.common.seed;
  if (a.common.out.empty()) return absl::InvalidArgumentError("--out is required");
  RETURN_IF_ERROR(Emit(a.common.out, FormatObservations(obs), &outcome));
  report["out"] = outcome.outputs.back();
  out << report.dump(2) << "\n";
  return outcome;
}

// ---- train ----

absl::StatusOr<Outcome> Train(const TrainArgs& a, std::ostream& out) {
  if (a.common.out.empty()) return absl::InvalidArgumentError("--out is required");
  ASSIGN_OR_RETURN(TrainSetup setup, MakeSetup(a));
  ASSIGN_OR_RETURN(const CanarySpec canary, MakeCanary(a, setup));
  Json report;
  report["task"] = a.task;
  report["mode"] = a.mode;
  report["canary"] = a.canary;
  report["bug"] = BugName(setup.cfg.bug);
  report["sigma"] = setup.cfg.sigma;
  report["params"] = setup.model.num_params();
  ObservationPair obs;
  if (a.mode == "whitebox") {
    ASSIGN_OR_RETURN(WhiteboxResult r,
                     TrainWhitebox(setup.data, setup.model, setup.cfg, canary));
    obs = std::move(r.observations);
    report["canary_steps"] = r.stats.canary_steps;
    report["max_contribution_norm"] = r.stats.max_contribution_norm;
    report["distinct_noise_vectors"] = r.stats.distinct_noise_vectors;
  } else if (a.mode == "blackbox") {
    if (!IsInputCanary(canary.kind)) {
      return absl::InvalidArgumentError(
          "black-box mode needs an input canary (mislabeled, blank or crafted)");
    }
    ASSIGN_OR_RETURN(obs, TrainBlackbox(setup.data, setup.model, setup.cfg,
                                        canary.input, canary.label, a.runs,
                                        a.common.jobs));
    report["runs"] = a.runs;
  } else {
    return absl::InvalidArgumentError("--mode must be whitebox or blackbox");
  }
  if (obs.d.scores.empty()) {
    return absl::FailedPreconditionError("training produced no observations");
  }
  report["observations"] = obs.d.scores.size();
  Outcome outcome;
  RETURN_IF_ERROR(Emit(a.common.out, FormatObservations(obs), &outcome));
  report["out"] = outcome.outputs.back();
  out << report.dump(2) << "\n";
  return outcome;
}

// ---- audit / verify ----

struct AuditArgs {
  Common common;
  std::string in;
  std::string method = "fdp-cp";
  double delta = 1e-5;
  double gamma = 0.05;
  double fpr_share = 0.5;
  double q = 1.0;
  int64_t steps = 1;
  bool pld_curve = false;
  double threshold = kNoValue;
  double holdout = kNoValue;
  int64_t max_thresholds = 10001;
  int candidates = 25;
  double claimed = kNoValue;
};

void AddAuditOptions(CLI::App* app, AuditArgs* a) {
  AddCommon(app, &a->common, true);
  app->add_option("--in", a->in, "Observation CSV")->required();
  app->add_option("--method", a->method,
                  "fdp-cp, fdp-zb, dp-cp, dp-zb or katz")
      ->capture_default_str();
  app->add_option("--delta", a->delta)->capture_default_str();
  app->add_option("--gamma", a->gamma, "1 - confidence")->capture_default_str();
  app->add_option("--fpr-share", a->fpr_share,
                  "Share of gamma spent on the FPR bound")
      ->capture_default_str();
  app->add_option("--q", a->q, "Sampling rate of the audited mechanism")
      ->capture_default_str();
  app->add_option("--steps", a->steps, "Composed steps of the mechanism")
      ->capture_default_str();
  app->add_flag("--pld-curve", a->pld_curve,
                "Fit the composed PLD curve instead of converting per-step mu");
  app->add_option("--threshold", a->threshold, "Fixed decision threshold");
  app->add_option("--holdout-fraction", a->holdout,
                  "Pick the threshold on this fraction, audit the rest");
  app->add_option("--max-thresholds", a->max_thresholds)->capture_default_str();
  app->add_option("--candidates", a->candidates)->capture_default_str();
}

absl::StatusOr<SweepAuditResult> RunAudit(const AuditArgs& a,
                                          const ObservationPair& obs,
                                          std::ostream& err) {
  SweepAuditOptions opts;
  ASSIGN_OR_RETURN(opts.audit.method, ParseAuditMethod(a.method));
  opts.audit.delta = a.delta;
  opts.audit.gamma = a.gamma;
  opts.audit.split.fpr_share = a.fpr_share;
  opts.audit.q = a.q;
  opts.audit.steps = a.steps;
  opts.audit.pld_curve = a.pld_curve;
  opts.sweep.max_thresholds = a.max_thresholds;
  opts.candidates = a.candidates;
  if (!std::isnan(a.threshold) && !std::isnan(a.holdout)) {
    return absl::InvalidArgumentError(
        "--threshold and --holdout-fraction are exclusive");
  }
  if (!std::isnan(a.threshold)) {
    ASSIGN_OR_RETURN(const ErrorCounts c,
                     ComputeErrorCounts(obs.d.scores, obs.dprime.scores,
                                        a.threshold));
    SweepAuditResult r;
    ASSIGN_OR_RETURN(r.result, Audit(c, opts.audit));
    r.threshold = a.threshold;
    r.exploratory = false;
    return r;
  }
  if (!std::isnan(a.holdout)) {
    return HoldoutAudit(obs.d.scores, obs.dprime.scores, a.holdout, opts);
  }
  err << "warning: threshold chosen on the audited observations; the bound "
         "is exploratory (use --holdout-fraction or --threshold)\n";
  return SweepAudit(obs.d.scores, obs.dprime.scores, opts);
}

Json AuditJson(const SweepAuditResult& r) {
  Json j;
  j["method"] = std::string(AuditMethodName(r.result.method));
  j["eps_lower"] = Finite(r.result.eps_lower);
  j["mu_lower"] = Finite(r.result.mu_lower);
  j["delta"] = r.result.delta;
  j["confidence"] = r.result.confidence;
  j["threshold"] = Finite(r.threshold);
  j["fp"] = r.result.counts.fp;
  j["fn"] = r.result.counts.fn;
  j["n"] = r.result.counts.n;
  j["exploratory"] = r.exploratory;
  j["estimate"] = r.result.estimate;
  if (r.result.sigma_hat > 0.0) j["sigma_hat"] = r.result.sigma_hat;
  if (!r.result.diagnostic.empty()) j["diagnostic"] = r.result.diagnostic;
  return j;
}

absl::StatusOr<Outcome> AuditCommand(const AuditArgs& a, bool verify,
                                     std::ostream& out, std::ostream& err) {
  Outcome outcome;
  ASSIGN_OR_RETURN(const ObservationPair obs, ReadObservations(a.in));
  outcome.inputs.push_back(a.in);
  ASSIGN_OR_RETURN(const SweepAuditResult r, RunAudit(a, obs, err));
  Json report = AuditJson(r);
  if (verify) {
    const bool violation = r.result.eps_lower > a.claimed;
    report["claimed_eps"] = a.claimed;
    report["margin"] = Finite(r.result.eps_lower - a.claimed);
    report["violation"] = violation;
    if (violation) outcome.code = kExitViolation;
  }
  const std::string text = report.dump(2) + "\n";
  if (!a.common.out.empty()) RETURN_IF_ERROR(Emit(a.common.out, text, &outcome));
  out << text;
  return outcome;
}

// ---- sweep ----

struct SweepArgs {
  Common common;
  std::string in;
  int64_t max_thresholds = 10001;
};

absl::StatusOr<Outcome> Sweep(const SweepArgs& a, std::ostream& out,
                              std::ostream& err) {
  Outcome outcome;
  ASSIGN_OR_RETURN(const ObservationPair obs, ReadObservations(a.in));
  outcome.inputs.push_back(a.in);
  SweepOptions opts;
  opts.max_thresholds = a.max_thresholds;
  ASSIGN_OR_RETURN(const RateCurve curve,
                   SweepThresholds(obs.d.scores, obs.dprime.scores, opts));
  err << "warning: bounds read off this curve are exploratory when the "
         "threshold is picked on the same observations\n";
  const std::string csv = FormatRateCurve(curve);
  if (a.common.out.empty()) {
    out << csv;
  } else {
    RETURN_IF_ERROR(Emit(a.common.out, csv, &outcome));
  }
  return outcome;
}

// ---- tradeoff / accountant / compose ----

struct CurveArgs {
  Common common;
  std::string kind = "gdp";
  double eps = kNoValue;
  double delta = 1e-5;
  double mu = kNoValue;
  double sigma = kNoValue;
  double q = 1.0;
  int64_t steps = 1;
  int lines = 1000;
  std::string combiner = "max";
  int points = 1001;
  double query_eps = kNoValue;
  bool curve = false;
  double discretization = 1e-4;
  double truncation = 30.0;
};

absl::StatusOr<PldAccountant> BuildPld(const CurveArgs& a) {
  if (std::isnan(a.sigma)) return absl::InvalidArgumentError("--sigma is required");
  MechanismSpec spec;
  spec.sigma = a.sigma;
  spec.q = a.q;
  spec.steps = a.steps;
  PldOptions opts;
  opts.discretization = a.discretization;
  opts.truncation = a.truncation;
  return PldAccountant::Build(spec, opts);
}

absl::StatusOr<TradeoffCurve> PldCurve(const CurveArgs& a,
                                       const PldAccountant& pld) {
  Combiner combiner;
  if (a.combiner == "min") {
    combiner = Combiner::kMin;
  } else if (a.combiner == "max") {
    combiner = Combiner::kMax;
  } else {
    return absl::InvalidArgumentError("--combiner must be min or max");
  }
  return ApproxTradeoffFromAccountant(
      [&](double d) { return pld.EpsOfDelta(d); }, a.lines, a.delta, combiner);
}

absl::StatusOr<Outcome> Tradeoff(const CurveArgs& a, std::ostream& out) {
  if (a.points < 2) return absl::InvalidArgumentError("--points must be >= 2");
  std::optional<TradeoffCurve> curve;
  if (a.kind == "eps-delta") {
    if (std::isnan(a.eps) || !(a.eps >= 0.0) || !(a.delta >= 0.0 && a.delta < 1.0)) {
      return absl::InvalidArgumentError("eps-delta needs --eps >= 0 and --delta in [0, 1)");
    }
    curve = TradeoffCurve::EpsDelta(a.eps, a.delta);
  } else if (a.kind == "gdp") {
    double mu = a.mu;
    if (std::isnan(mu) && !std::isnan(a.sigma)) mu = 1.0 / a.sigma;
    if (std::isnan(mu) || !(mu >= 0.0)) {
      return absl::InvalidArgumentError("gdp needs --mu >= 0 or --sigma");
    }
    curve = TradeoffCurve::Gdp(mu);
  } else if (a.kind == "pld") {
    ASSIGN_OR_RETURN(const PldAccountant pld, BuildPld(a));
    ASSIGN_OR_RETURN(curve, PldCurve(a, pld));
  } else {
    return absl::InvalidArgumentError("--kind must be eps-delta, gdp or pld");
  }
  Outcome outcome;
  const std::string csv = FormatTradeoff(curve->Sample(a.points));
  if (a.common.out.empty()) {
    out << csv;
  } else {
    RETURN_IF_ERROR(Emit(a.common.out, csv, &outcome));
  }
  return outcome;
}

absl::StatusOr<Outcome> Accountant(const CurveArgs& a, std::ostream& out) {
  ASSIGN_OR_RETURN(const PldAccountant pld, BuildPld(a));
  Outcome outcome;
  Json report;
  report["sigma"] = a.sigma;
  report["q"] = a.q;
  report["steps"] = a.steps;
  if (!std::isnan(a.query_eps)) {
    report["eps"] = a.query_eps;
    report["delta"] = pld.DeltaOfEps(a.query_eps);
  } else {
    report["delta"] = a.delta;
    absl::StatusOr<double> eps = pld.EpsOfDelta(a.delta);
    if (!eps.ok() && eps.status().code() != absl::StatusCode::kOutOfRange) {
      return eps.status();
    }
    report["eps"] = Finite(eps.ok() ? *eps : INFINITY);
  }
  if (a.curve) {
    if (a.common.out.empty()) {
      return absl::InvalidArgumentError("--curve needs --out");
    }
    ASSIGN_OR_RETURN(const TradeoffCurve curve, PldCurve(a, pld));
    RETURN_IF_ERROR(
        Emit(a.common.out, FormatTradeoff(curve.Sample(a.points)), &outcome));
    report["curve"] = outcome.outputs.back();
  }
  out << report.dump(2) << "\n";
  return outcome;
}

struct ComposeArgs {
  Common common;
  std::vector<double> mus;
  int64_t steps = 1;
  double q = 1.0;
  double delta = 1e-5;
};

absl::StatusOr<Outcome> Compose(const ComposeArgs& a, std::ostream& out) {
  if (a.mus.empty()) return absl::InvalidArgumentError("--mu is required");
  for (double m : a.mus) {
    if (!(m >= 0.0)) return absl::InvalidArgumentError("--mu values must be >= 0");
  }
  Json report;
  report["delta"] = a.delta;
  if (a.mus.size() > 1) {
    const double mu = GdpCompose(a.mus);
    report["mu"] = mu;
    report["eps"] = Finite(GdpEpsOfDelta(mu, a.delta));
  } else if (a.q >= 1.0) {
    const double mu = a.mus[0] * std::sqrt(static_cast<double>(a.steps));
    report["mu"] = mu;
    report["eps"] = Finite(GdpEpsOfDelta(mu, a.delta));
  } else {
    ASSIGN_OR_RETURN(const double eps,
                     StepsToEndEps(a.mus[0], a.steps, a.q, a.delta));
    report["eps"] = Finite(eps);
    report["estimate"] = true;
  }
  report["steps"] = a.steps;
  report["q"] = a.q;
  out << report.dump(2) << "\n";
  return Outcome{};
}

}  // namespace

absl::Status WriteManifest(const std::string& path, const Manifest& m) {
  Json j;
  j["command"] = m.command;
  j["args"] = m.args;
  j["flags"] = m.flags;
  j["seed"] = m.seed;
  j["tool_version"] = kToolVersion;
  auto digests = [](const std::vector<std::string>& files)
      -> absl::StatusOr<Json> {
    Json arr = Json::array();
    for (const std::string& f : files) {
      ASSIGN_OR_RETURN(const std::string sha, Sha256File(f));
      arr.push_back({{"path", f}, {"sha256", sha}});
    }
    return arr;
  };
  ASSIGN_OR_RETURN(j["inputs"], digests(m.inputs));
  ASSIGN_OR_RETURN(j["outputs"], digests(m.outputs));
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  return WriteFileAtomic(path, j.dump(2) + "\n");
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Privacy auditing of DP mechanisms and DP-SGD", "dpaudit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with default flag values");
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand("simulate", "Sample observations of a mechanism");
  AddCommon(s, &sim.common, true);
  s->add_option("--mechanism", sim.mechanism, "gaussian, subsampled or rr")
      ->capture_default_str();
  s->add_option("--sigma", sim.sigma, "Noise multiplier");
  s->add_option("--eps", sim.eps, "Per-step eps; sets sigma via GDP at --delta");
  s->add_option("--delta", sim.delta)->capture_default_str();
  s->add_option("--q", sim.q)->capture_default_str();
  s->add_option("--n", sim.n, "Observations per world")->capture_default_str();

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train with DP-SGD and record canary observations");
  AddCommon(t, &tr.common, true);
  t->add_option("--task", tr.task, "logistic or mlp")->capture_default_str();
  t->add_option("--mode", tr.mode, "whitebox or blackbox")->capture_default_str();
  t->add_option("--canary", tr.canary,
                "dirac, constant, random, mislabeled, blank or crafted")
      ->capture_default_str();
  t->add_option("--refresh", tr.refresh, "static or per-step")->capture_default_str();
  t->add_option("--bug", tr.bug,
                "none, clip-after-avg, biased-noise:k or noise-scale:s")
      ->capture_default_str();
  t->add_option("--q", tr.q)->capture_default_str();
  t->add_option("--eta", tr.eta)->capture_default_str();
  t->add_option("--sigma", tr.sigma, "Noise multiplier");
  t->add_option("--eps", tr.eps, "Claimed per-step eps; sets sigma");
  t->add_option("--delta", tr.delta)->capture_default_str();
  t->add_option("--clip", tr.clip)->capture_default_str();
  t->add_option("--steps", tr.steps)->capture_default_str();
  t->add_option("--qc", tr.qc)->capture_default_str();
  t->add_option("--canary-magnitude", tr.magnitude,
                "Raw gradient canary norm in units of the clip norm")
      ->capture_default_str();
  t->add_option("--pad", tr.pad, "Unused parameters that host gradient canaries")
      ->capture_default_str();
  t->add_option("--hidden", tr.hidden)->capture_default_str();
  t->add_option("--data-size", tr.data_size, "0 picks the task default");
  t->add_option("--runs", tr.runs, "Model pairs in black-box mode")->capture_default_str();
  t->add_option("--window-begin", tr.window_begin)->capture_default_str();
  t->add_option("--window-end", tr.window_end, "0 means the last step")
      ->capture_default_str();
  t->add_option("--craft-steps", tr.craft_steps)->capture_default_str();

  AuditArgs au;
  CLI::App* a = app.add_subcommand("audit", "Lower-bound privacy from observations");
  AddAuditOptions(a, &au);

  AuditArgs ve;
  CLI::App* v = app.add_subcommand("verify", "Check a claimed eps; exit 2 on violation");
  AddAuditOptions(v, &ve);
  v->add_option("--claimed-eps", ve.claimed)->required();

  SweepArgs sw;
  CLI::App* w = app.add_subcommand("sweep", "Export the FPR/FNR curve over thresholds");
  AddCommon(w, &sw.common, true);
  w->add_option("--in", sw.in)->required();
  w->add_option("--max-thresholds", sw.max_thresholds)->capture_default_str();

  CurveArgs tc;
  CLI::App* c = app.add_subcommand("tradeoff", "Export a trade-off curve");
  AddCommon(c, &tc.common, true);
  c->add_option("--kind", tc.kind, "eps-delta, gdp or pld")->capture_default_str();
  c->add_option("--eps", tc.eps);
  c->add_option("--delta", tc.delta)->capture_default_str();
  c->add_option("--mu", tc.mu);
  c->add_option("--sigma", tc.sigma);
  c->add_option("--q", tc.q)->capture_default_str();
  c->add_option("--steps", tc.steps)->capture_default_str();
  c->add_option("--lines", tc.lines)->capture_default_str();
  c->add_option("--combiner", tc.combiner)->capture_default_str();
  c->add_option("--points", tc.points)->capture_default_str();

  CurveArgs ac;
  CLI::App* p = app.add_subcommand("accountant", "PLD accountant queries");
  AddCommon(p, &ac.common, true);
  p->add_option("--sigma", ac.sigma)->required();
  p->add_option("--q", ac.q)->capture_default_str();
  p->add_option("--steps", ac.steps)->capture_default_str();
  p->add_option("--delta", ac.delta)->capture_default_str();
  p->add_option("--eps", ac.query_eps, "Query delta(eps) instead of eps(delta)");
  p->add_flag("--curve", ac.curve, "Write the approximate trade-off curve to --out");
  p->add_option("--lines", ac.lines)->capture_default_str();
  p->add_option("--combiner", ac.combiner)->capture_default_str();
  p->add_option("--points", ac.points)->capture_default_str();
  p->add_option("--discretization", ac.discretization)->capture_default_str();
  p->add_option("--truncation", ac.truncation)->capture_default_str();

  ComposeArgs co;
  CLI::App* k = app.add_subcommand("compose", "Compose GDP guarantees");
  AddCommon(k, &co.common, false);
  k->add_option("--mu", co.mus, "Per-step mu (repeat to compose distinct steps)")
      ->required();
  k->add_option("--steps", co.steps)->capture_default_str();
  k->add_option("--q", co.q)->capture_default_str();
  k->add_option("--delta", co.delta)->capture_default_str();

  std::string pipeline_config;
  std::string pipeline_dir;
  Common pl;
  CLI::App* l = app.add_subcommand("pipeline", "Run a configured end-to-end pipeline");
  AddCommon(l, &pl, false);
  l->add_option("file", pipeline_config, "Pipeline TOML")->required();
  l->add_option("--out-dir", pipeline_dir, "Output directory");

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest;
  manifest.command = sub->get_name();
  manifest.args = args;
  manifest.flags = sub->config_to_str(true, false);

  absl::StatusOr<Outcome> result = absl::UnknownError("no command");
  manifest.seed = sub->get_option("--seed")->as<uint64_t>();
  if (sub == s) {
    result = Simulate(sim, out);
  } else if (sub == t) {
    result = Train(tr, out);
  } else if (sub == a) {
    result = AuditCommand(au, false, out, err);
  } else if (sub == v) {
    result = AuditCommand(ve, true, out, err);
  } else if (sub == w) {
    result = Sweep(sw, out, err);
  } else if (sub == c) {
    result = Tradeoff(tc, out);
  } else if (sub == p) {
    result = Accountant(ac, out);
  } else if (sub == k) {
    result = Compose(co, out);
  } else if (sub == l) {
    std::string dir = pipeline_dir;
    if (dir.empty()) dir = ResolveOutput("pipeline");
    std::optional<uint64_t> seed;
    if (l->get_option("--seed")->count() > 0) seed = pl.seed;
    return RunPipeline(pipeline_config, dir, pl.jobs, seed, out, err,
                       std::move(manifest));
  }
  if (!result.ok()) {
    err << "error: " << result.status().message() << "\n";
    return kExitError;
  }
  for (const std::string& o : result->outputs) {
    manifest.inputs = result->inputs;
    manifest.outputs = {o};
    manifest.wall_clock_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    const absl::Status st = WriteManifest(o + ".manifest.json", manifest);
    if (!st.ok()) {
      err << "error: " << st.message() << "\n";
      return kExitError;
    }
  }
  return result->code;
}

}  // namespace dpaudit::cli
