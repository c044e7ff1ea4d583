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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. `--only N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/str_format.h"
#include "cli.h"
#include "dpaudit/accountant.h"
#include "dpaudit/attack.h"
#include "dpaudit/dpsgd.h"
#include "dpaudit/estimators.h"
#include "dpaudit/mechanisms.h"
#include "dpaudit/numerics.h"
#include "dpaudit/tradeoff.h"
#include "io.h"
#include "json.hpp"

namespace dpaudit {
namespace {

namespace fs = std::filesystem;

constexpr double kDelta = 1e-5;
constexpr uint64_t kSeed = 20260101;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void Note(const std::string& s) {
    detail += (detail.empty() ? "" : "; ") + s;
  }
};

template <typename T>
T Must(absl::StatusOr<T> v) {
  if (!v.ok()) {
    std::fprintf(stderr, "fatal: %s\n", std::string(v.status().message()).c_str());
    std::exit(1);
  }
  return *std::move(v);
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SigmaForEps(double eps) { return 1.0 / Must(GdpMuOfEps(eps, kDelta)); }

SweepAuditOptions Method(AuditMethod m) {
  SweepAuditOptions o;
  o.audit.method = m;
  o.audit.delta = kDelta;
  o.audit.gamma = 0.05;
  return o;
}

double SweptEps(const ObservationPair& obs, AuditMethod m) {
  return Must(SweepAudit(obs.d.scores, obs.dprime.scores, Method(m)))
      .result.eps_lower;
}

Outcome Criterion1() {
  Outcome out;
  for (double eps : {1.0, 2.0, 4.0, 6.0}) {
    const double sigma = SigmaForEps(eps);
    std::vector<double> fdp, dp;
    for (uint64_t r = 0; r < 20; ++r) {
      const ObservationPair obs = Must(
          SimulateGaussianPair(sigma, 1000, DeriveSeed(kSeed + 1, r)));
      fdp.push_back(SweptEps(obs, AuditMethod::kFdpCp));
      dp.push_back(SweptEps(obs, AuditMethod::kDpCp));
    }
    const double f = Mean(fdp), d = Mean(dp);
    out.Note(absl::StrFormat("eps=%g fdp-cp=%.3f dp-cp=%.3f", eps, f, d));
    out.Require(f >= 0.7 * eps && f <= eps,
                absl::StrFormat("eps=%g fdp-cp mean in [%.2f, %g]", eps,
                                0.7 * eps, eps));
    out.Require(d < f, absl::StrFormat("eps=%g dp-cp below fdp-cp", eps));
  }
  return out;
}

Outcome Criterion2() {
  Outcome out;
  constexpr int kRuns = 200;
  constexpr int64_t kN = 1000;
  const double limit = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / kRuns);
  const double sigma = 1.0;
  const double true_mu = 1.0 / sigma;
  const double true_eps = GdpEpsOfDelta(true_mu, kDelta);
  struct Case {
    AuditMethod method;
    double threshold;
  };
  // Thresholds are fixed in advance; f-DP at the symmetric point, (eps, delta)
  // methods further right where the bound is informative at n = 1000.
  const std::vector<Case> cases = {{AuditMethod::kFdpCp, 0.5},
                                   {AuditMethod::kFdpZb, 0.5},
                                   {AuditMethod::kDpCp, 2.0},
                                   {AuditMethod::kDpZb, 2.0},
                                   {AuditMethod::kKatz, 2.0}};
  std::vector<ObservationPair> runs;
  for (int r = 0; r < kRuns; ++r) {
    runs.push_back(Must(SimulateGaussianPair(sigma, kN, DeriveSeed(kSeed + 2, r))));
  }
  for (const Case& c : cases) {
    AuditOptions o = Method(c.method).audit;
    // Katz bounds ln(TPR / FPR) at the threshold, with delta = 0.
    double truth = true_eps;
    if (c.method == AuditMethod::kKatz) {
      o.delta = 0.0;
      truth = std::log((1.0 - StdNormalCdf((c.threshold - 1.0) / sigma)) /
                       (1.0 - StdNormalCdf(c.threshold / sigma)));
    }
    const bool fdp =
        c.method == AuditMethod::kFdpCp || c.method == AuditMethod::kFdpZb;
    int above = 0;
    for (const ObservationPair& obs : runs) {
      const ErrorCounts counts = Must(
          ComputeErrorCounts(obs.d.scores, obs.dprime.scores, c.threshold));
      const AuditResult r = Must(Audit(counts, o));
      if (fdp ? r.mu_lower > true_mu : r.eps_lower > truth) ++above;
    }
    const double rate = static_cast<double>(above) / kRuns;
    const std::string name(AuditMethodName(c.method));
    out.Note(absl::StrFormat("%s %.3f", name, rate));
    out.Require(rate <= limit, absl::StrFormat("%s rate <= %.4f", name, limit));
  }
  return out;
}

Outcome Criterion3() {
  Outcome out;
  const double sigma = 1.0;
  const ObservationPair obs =
      Must(SimulateGaussianPair(sigma, 5000, DeriveSeed(kSeed + 3, 0)));
  const RateCurve curve =
      Must(SweepThresholds(obs.d.scores, obs.dprime.scores));
  // Finite thresholds only; the two corners are trivial.
  std::vector<double> z;
  for (const RatePoint& p : curve.points) {
    if (std::isfinite(p.threshold)) z.push_back(p.threshold);
  }
  std::sort(z.begin(), z.end());
  const size_t lo = z.size() / 4, hi = z.size() - z.size() / 4;
  double fmin = INFINITY, fmax = 0.0, dmin = INFINITY, dmax = 0.0;
  double identity_err = 0.0;
  for (size_t i = lo; i < hi; ++i) {
    const ErrorCounts c =
        Must(ComputeErrorCounts(obs.d.scores, obs.dprime.scores, z[i]));
    const double f = Must(Audit(c, Method(AuditMethod::kFdpCp).audit)).eps_lower;
    const double d = Must(Audit(c, Method(AuditMethod::kDpCp).audit)).eps_lower;
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    identity_err = std::max(
        identity_err, std::fabs(GdpPluginThresholdInvariance(sigma, z[i]) - 1.0 / sigma));
  }
  const double fr = fmax / fmin, dr = dmin > 0 ? dmax / dmin : INFINITY;
  out.Note(absl::StrFormat("%d thresholds, fdp-cp ratio %.3f, dp-cp ratio %.3f, "
                           "identity err %.2e",
                           hi - lo, fr, dr, identity_err));
  out.Require(fr <= 1.2, "fdp-cp ratio <= 1.2");
  out.Require(dr >= 2.0, "dp-cp ratio >= 2.0");
  out.Require(identity_err <= 1e-9, "identity within 1e-9");
  return out;
}

Outcome Criterion4() {
  Outcome out;
  constexpr int kGrid = 1000000;
  double worst_pos = 0.0, worst_val = 0.0;
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (double c : {0.5, 1.0, 2.0}) {
      const double w = Must(OptimalThresholdDp(sigma, c, kDelta));
      const double a = c / 2.0, b = c / 2.0 + 12.0 * sigma;
      const double h = (b - a) / (kGrid - 1);
      double best = -INFINITY, arg = a;
      for (int i = 0; i < kGrid; ++i) {
        const double z = a + h * i;
        const double v = LogH(sigma, c, kDelta, z);
        if (v > best) {
          best = v;
          arg = z;
        }
      }
      const double pos = std::fabs(arg - w) / h;
      const double val =
          std::fabs(LogH(sigma, c, kDelta, w) - MaxEpsLowerAnalytic(sigma, c, w));
      worst_pos = std::max(worst_pos, pos);
      worst_val = std::max(worst_val, val);
      out.Require(pos <= 1.0,
                  absl::StrFormat("sigma=%g c=%g root within grid spacing", sigma, c));
      out.Require(val <= 1e-6,
                  absl::StrFormat("sigma=%g c=%g closed form", sigma, c));
    }
  }
  out.Note(absl::StrFormat("max |argmax - root| = %.3f spacings, max closed-form "
                           "error %.2e",
                           worst_pos, worst_val));
  return out;
}

Outcome Criterion5() {
  Outcome out;
  double worst = 0.0;
  for (double mu : {0.25, 0.5, 1.0}) {
    for (int64_t t : {1, 4, 16}) {
      MechanismSpec spec;
      spec.sigma = 1.0 / mu;
      spec.q = 1.0;
      spec.steps = t;
      const PldAccountant acc = Must(PldAccountant::Build(spec));
      const double pld = Must(acc.EpsOfDelta(kDelta));
      const double gdp = GdpEpsOfDelta(std::sqrt(static_cast<double>(t)) * mu, kDelta);
      worst = std::max(worst, std::fabs(pld - gdp));
      out.Require(std::fabs(pld - gdp) <= 1e-2,
                  absl::StrFormat("mu=%g T=%d: pld %.5f gdp %.5f", mu, t, pld, gdp));
    }
  }
  out.Note(absl::StrFormat("max |pld - gdp| = %.2e", worst));
  return out;
}

double MaxGap(const TradeoffCurve& a, const TradeoffCurve& b) {
  double gap = 0.0;
  for (int j = 0; j <= 100000; ++j) {
    const double x = j / 100000.0;
    gap = std::max(gap, std::fabs(a(x) - b(x)));
  }
  return gap;
}

Outcome Criterion6() {
  Outcome out;
  struct Mech {
    std::string name;
    EpsOfDeltaFn fn;
  };
  std::vector<Mech> mechs;
  for (double mu : {0.5, 1.0, 2.0}) {
    mechs.push_back({absl::StrFormat("gdp mu=%g", mu),
                     [mu](double d) -> absl::StatusOr<double> {
                       return GdpEpsOfDelta(mu, d);
                     }});
  }
  MechanismSpec spec;
  spec.sigma = 1.0;
  spec.q = 0.01;
  spec.steps = 1000;
  auto acc = std::make_shared<PldAccountant>(Must(PldAccountant::Build(spec)));
  mechs.push_back({"pld sigma=1 q=0.01 T=1000",
                   [acc](double d) { return acc->EpsOfDelta(d); }});
  for (const Mech& m : mechs) {
    const TradeoffCurve ref =
        Must(ApproxTradeoffFromAccountant(m.fn, 1000, kDelta, Combiner::kMax));
    const double g10 = MaxGap(
        Must(ApproxTradeoffFromAccountant(m.fn, 10, kDelta, Combiner::kMax)), ref);
    const double g100 = MaxGap(
        Must(ApproxTradeoffFromAccountant(m.fn, 100, kDelta, Combiner::kMax)), ref);
    out.Note(absl::StrFormat("%s: gap10 %.4f gap100 %.4f", m.name, g10, g100));
    out.Require(g10 <= 0.1, m.name + " n=10 gap");
    out.Require(g100 <= 0.02, m.name + " n=100 gap");
  }
  return out;
}

struct Cli {
  int code = 0;
  nlohmann::json json;
  std::string err;
};

Cli RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "dpaudit");
  std::ostringstream out, err;
  Cli r;
  r.code = cli::Run(args, out, err);
  r.err = err.str();
  if (!out.str().empty() && out.str().front() == '{') {
    r.json = nlohmann::json::parse(out.str());
  }
  return r;
}

Outcome Criterion7(const fs::path& dir) {
  Outcome out;
  const std::string claimed = "1.27";
  const std::vector<std::string> harness = {
      "train", "--task", "logistic", "--canary", "dirac", "--refresh",
      "per-step", "--eps", claimed, "--q", "0.01", "--eta", "0.01", "--clip",
      "1", "--canary-magnitude", "10", "--pad", "32", "--seed", "11"};
  auto train = [&](const std::string& bug, int64_t steps) {
    const std::string path = (dir / (bug + ".csv")).string();
    std::vector<std::string> args = harness;
    args.insert(args.end(), {"--bug", bug, "--steps", absl::StrFormat("%d", steps),
                             "--out", path});
    const Cli r = RunCli(args);
    if (r.code != 0) {
      std::fprintf(stderr, "train failed: %s", r.err.c_str());
      std::exit(1);
    }
    return path;
  };
  // Threshold chosen on the first half, bound computed on the second half.
  auto verify = [&](const std::string& path, const std::string& method) {
    return RunCli({"verify", "--in", path, "--method", method, "--claimed-eps",
                   claimed, "--holdout-fraction", "0.5"});
  };
  auto eps = [](const Cli& r) { return r.json.value("eps_lower", NAN); };

  const std::string ca = train("clip-after-avg", 10000);
  const Cli a = verify(ca, "fdp-cp");
  out.Note(absl::StrFormat("(a) fdp-cp %.3f exit %d", eps(a), a.code));
  out.Require(a.code == cli::kExitViolation, "(a) verify exits 2");
  out.Require(eps(a) > 5 * 1.27, "(a) bound > 5x claim");

  const std::string bn = train("biased-noise:100", 100000);
  const Cli bf = verify(bn, "fdp-cp");
  const Cli bd = verify(bn, "dp-zb");
  out.Note(absl::StrFormat("(b) fdp-cp %.3f exit %d, dp-zb %.3f exit %d", eps(bf),
                           bf.code, eps(bd), bd.code));
  out.Require(bf.code == cli::kExitViolation, "(b) fdp verify exits 2");
  out.Require(bd.code == cli::kExitOk, "(b) dp-zb does not flag");

  const double true_sigma = SigmaForEps(1.57);
  const std::string ns = train(absl::StrFormat("noise-scale:%.17g", true_sigma), 100000);
  const Cli c = verify(ns, "fdp-cp");
  out.Note(absl::StrFormat("(c) true eps 1.57: fdp-cp %.3f exit %d", eps(c), c.code));
  out.Require(c.code == cli::kExitViolation, "(c) verify exits 2");
  return out;
}

Outcome Criterion8() {
  Outcome out;
  const double sigma = std::sqrt(0.3);
  const double q = 0.25;
  constexpr int64_t kN = 10000;
  const ObservationPair obs = Must(
      SimulateSubsampledGaussianPair(sigma, q, kN, DeriveSeed(kSeed + 8, 0)));
  MechanismSpec spec;
  spec.sigma = sigma;
  spec.q = q;
  const PldAccountant acc = Must(PldAccountant::Build(spec));
  const TradeoffCurve pld = Must(ApproxTradeoffFromAccountant(
      [&acc](double d) { return acc.EpsOfDelta(d); }, 1000, kDelta, Combiner::kMax));
  const TradeoffCurve gdp = TradeoffCurve::Gdp(1.0 / sigma);
  const RateCurve curve = Must(SweepThresholds(obs.d.scores, obs.dprime.scores));
  // Empirical attack power must not exceed the theory at any threshold:
  // beta >= f(alpha) once both rates are moved to their CP limits.
  constexpr double kConfidence = 0.999;
  int bad_pld = 0, bad_gdp = 0;
  double worst = INFINITY;
  for (const RatePoint& p : curve.points) {
    const int64_t fp = std::llround(p.alpha * kN);
    const int64_t fn = std::llround(p.beta * kN);
    const double a_hi = Must(ClopperPearsonUpper(fp, kN, kConfidence));
    const double b_hi = Must(ClopperPearsonUpper(fn, kN, kConfidence));
    const double margin = std::min(b_hi - pld(a_hi), b_hi - gdp(a_hi));
    worst = std::min(worst, margin);
    if (b_hi < pld(a_hi)) ++bad_pld;
    if (b_hi < gdp(a_hi)) ++bad_gdp;
  }
  out.Note(absl::StrFormat("%d thresholds, below pld %d, below gdp %d, min slack %.4f",
                           curve.points.size(), bad_pld, bad_gdp, worst));
  out.Require(bad_pld == 0, "empirical curve within pld bound");
  out.Require(bad_gdp == 0, "empirical curve within gdp bound");
  return out;
}

Outcome Criterion9() {
  Outcome out;
  for (double eps : {1.0, 4.0}) {
    const double sigma = SigmaForEps(eps);
    std::vector<double> zb, cp;
    for (uint64_t r = 0; r < 20; ++r) {
      const ObservationPair obs = Must(
          SimulateGaussianPair(sigma, 1000, DeriveSeed(kSeed + 9, r)));
      zb.push_back(SweptEps(obs, AuditMethod::kFdpZb));
      cp.push_back(SweptEps(obs, AuditMethod::kFdpCp));
    }
    out.Note(absl::StrFormat("eps=%g fdp-zb %.3f fdp-cp %.3f", eps, Mean(zb),
                             Mean(cp)));
    out.Require(Mean(zb) >= Mean(cp), absl::StrFormat("eps=%g zb >= cp", eps));
  }
  return out;
}

Outcome Criterion10(const fs::path& dir) {
  Outcome out;
  // Trade-off curves: nonincreasing, within [0, 1 - alpha], GDP above its
  // (eps, delta) envelope.
  bool monotone = true, dominance = true;
  for (double mu : {0.25, 1.0, 3.0}) {
    const TradeoffCurve g = TradeoffCurve::Gdp(mu);
    const TradeoffCurve e = TradeoffCurve::EpsDelta(GdpEpsOfDelta(mu, kDelta), kDelta);
    double prev_g = 2.0, prev_e = 2.0;
    for (int j = 0; j <= 10000; ++j) {
      const double a = j / 10000.0;
      const double vg = g(a), ve = e(a);
      monotone &= vg <= prev_g + 1e-15 && ve <= prev_e + 1e-15 && vg >= 0 &&
                  vg <= 1 - a + 1e-12 && ve >= 0 && ve <= 1 - a + 1e-12;
      dominance &= vg >= ve - 1e-9;
      prev_g = vg;
      prev_e = ve;
    }
  }
  out.Require(monotone, "trade-off monotonicity");
  out.Require(dominance, "gdp dominance");

  // Privacy region symmetric under swapping and complementing the rates.
  bool symmetric = true;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const PrivacyPoint p{i / 100.0, j / 100.0};
      const bool in = PrivacyRegionContains(1.0, kDelta, p);
      symmetric &= in == PrivacyRegionContains(1.0, kDelta, {p.beta, p.alpha});
      symmetric &= in == PrivacyRegionContains(1.0, kDelta, {1 - p.alpha, 1 - p.beta});
    }
  }
  out.Require(symmetric, "region symmetry");

  // Clipping.
  CounterRng rng(kSeed + 10);
  double worst_clip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng.Below(50));
    const double scale = std::exp(6.0 * rng.Normal());
    for (double& x : v) x = scale * rng.Normal();
    const std::vector<double> c = ClipVector(v, 1.0);
    double n2 = 0.0;
    for (double x : c) n2 += x * x;
    worst_clip = std::max(worst_clip, std::sqrt(n2));
  }
  const Dataset data = MakeTwoGaussians(400, 5, 2.0, kSeed);
  TinyModel model = Must(TinyModel::Create(Architecture::kLogistic, 5, 2, 0, 8, kSeed));
  DpSgdConfig cfg;
  cfg.q = 0.1;
  cfg.sigma = 1.0;
  cfg.clip = 1.0;
  cfg.steps = 200;
  cfg.seed = kSeed;
  CanarySpec canary;
  canary.magnitude = 10.0;
  const WhiteboxResult wr = Must(TrainWhitebox(data, model, cfg, canary));
  out.Require(worst_clip <= 1.0 + 1e-12 &&
                  wr.stats.max_contribution_norm <= 1.0 + 1e-12,
              "clipping norm bound");

  // Determinism and manifests.
  auto sim = [&](const std::string& name, const std::string& jobs) {
    const std::string path = (dir / name).string();
    RunCli({"simulate", "--eps", "2", "--n", "2000", "--seed", "5", "--jobs", jobs,
            "--out", path});
    return path;
  };
  const std::string s1 = sim("det1.csv", "1"), s2 = sim("det2.csv", "4");
  const std::string b1 = Must(cli::ReadFile(s1)), b2 = Must(cli::ReadFile(s2));
  const nlohmann::json m1 =
      nlohmann::json::parse(Must(cli::ReadFile(s1 + ".manifest.json")));
  out.Require(!b1.empty() && b1 == b2 &&
                  m1["outputs"][0]["sha256"] == Must(cli::Sha256File(s2)),
              "determinism and manifest digest");

  // Zero-bias quadrature against Monte Carlo.
  double worst_mc = 0.0;
  for (const ErrorCounts& c : {ErrorCounts{100, 300, 1000}, ErrorCounts{20, 600, 1000},
                               ErrorCounts{5, 40, 200}}) {
    const RatePosterior post(c);
    const double mu = std::fabs(Must(StdNormalQuantile(c.fp / double(c.n))) +
                                Must(StdNormalQuantile(c.fn / double(c.n))));
    constexpr int kDraws = 20000;
    int inside = 0;
    for (int k = 0; k < kDraws; ++k) {
      const double a = Must(BetaQuantile(rng.Uniform(), c.fp + 0.5, c.n - c.fp + 0.5));
      const double b = Must(BetaQuantile(rng.Uniform(), c.fn + 0.5, c.n - c.fn + 0.5));
      const double z = Must(StdNormalQuantile(a));
      if (b >= StdNormalCdf(-z - mu) && b <= StdNormalCdf(-z + mu)) ++inside;
    }
    worst_mc = std::max(worst_mc, std::fabs(MassInsideGdpRegion(post, mu) -
                                            static_cast<double>(inside) / kDraws));
  }
  out.Require(worst_mc <= 0.05, "quadrature vs monte carlo");
  out.Note(absl::StrFormat("max clip norm %.6f, quadrature-mc gap %.4f", worst_clip,
                           worst_mc));
  out.Note("per-module property suites run as separate ctest entries");
  return out;
}

}  // namespace
}  // namespace dpaudit

int main(int argc, char** argv) {
  using namespace dpaudit;
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") only = std::atoi(argv[i + 1]);
  }
  const fs::path dir = fs::current_path() / "acceptance_out";
  fs::create_directories(dir);

  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, 10, Criterion1},
      {2, 120, Criterion2},
      {3, 0, Criterion3},
      {4, 0, Criterion4},
      {5, 30, Criterion5},
      {6, 0, Criterion6},
      {7, 0, [&] { return Criterion7(dir); }},
      {8, 0, Criterion8},
      {9, 0, Criterion9},
      {10, 0, [&] { return Criterion10(dir); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const double secs = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0) {
      o.Require(secs < c.budget_s, absl::StrFormat("runtime < %gs", c.budget_s));
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s (%.1fs) %s\n", c.id, o.pass ? "PASS" : "FAIL",
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
