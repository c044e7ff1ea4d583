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

#include "dpaudit/dpsgd.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpaudit/status_macros.h"

namespace dpaudit {
namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

double LogSumExp(const double* z, int n, int skip) {
  double m = -INFINITY;
  for (int k = 0; k < n; ++k) {
    if (k != skip) m = std::max(m, z[k]);
  }
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k != skip) s += std::exp(z[k] - m);
  }
  return m + std::log(s);
}

// Poisson subsample: each index joins with probability q. Geometric gaps
// keep the cost proportional to the batch size.
void SampleBatch(CounterRng& rng, int64_t n, double q,
                 std::vector<int64_t>& batch) {
  batch.clear();
  if (q >= 1.0) {
    batch.resize(n);
    std::iota(batch.begin(), batch.end(), int64_t{0});
    return;
  }
  const double log1mq = std::log1p(-q);
  int64_t i = -1;
  while (true) {
    const double gap = std::floor(std::log(rng.Uniform()) / log1mq);
    if (gap >= static_cast<double>(n - i - 1)) break;
    i += 1 + static_cast<int64_t>(gap);
    batch.push_back(i);
  }
}

// Adds DP noise, honestly or through one of the noise bugs.
class NoiseSource {
 public:
  NoiseSource(const DpSgdConfig& cfg, int64_t dim)
      : dim_(dim),
        biased_(cfg.bug.kind == BugKind::kBiasedNoise),
        scale_((cfg.bug.kind == BugKind::kNoiseScale ? cfg.bug.actual_sigma
                                                     : cfg.sigma) *
               cfg.clip),
        pool_seed_(DeriveSeed(cfg.seed, 2)) {
    if (biased_) pool_.resize(cfg.bug.seeds);
  }

  // Returns the pool index used, or -1 for fresh noise.
  int64_t Add(CounterRng& rng, std::vector<double>& v) {
    if (!biased_) {
      for (double& x : v) x += scale_ * rng.Normal();
      return -1;
    }
    const int64_t k = static_cast<int64_t>(rng.Below(pool_.size()));
    std::vector<double>& noise = pool_[k];
    if (noise.empty()) {
      CounterRng gen(DeriveSeed(pool_seed_, k));
      noise.resize(dim_);
      for (double& x : noise) x = scale_ * gen.Normal();
    }
    for (int64_t i = 0; i < dim_; ++i) v[i] += noise[i];
    return k;
  }

 private:
  int64_t dim_;
  bool biased_;
  double scale_;
  uint64_t pool_seed_;
  std::vector<std::vector<double>> pool_;
};

// Clipped sum of per-example gradients of `batch`, plus an optional extra
// raw gradient treated as one more example.
class Aggregator {
 public:
  Aggregator(const TinyModel& model, double clip, bool clip_after_average)
      : clip_(clip),
        after_average_(clip_after_average),
        grad_(model.num_params()) {}

  void Sum(const Dataset& data, const TinyModel& model,
           const std::vector<int64_t>& batch, const double* extra,
           std::vector<double>& sum, double* max_contribution) {
    std::fill(sum.begin(), sum.end(), 0.0);
    double max_raw = 0.0;
    int64_t count = 0;
    auto accumulate = [&](const double* g) {
      const std::span<const double> gs(g, grad_.size());
      const double norm = Norm(gs);
      double scale = 1.0;
      if (!after_average_ && norm > clip_) scale = clip_ / norm;
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += scale * g[i];
      max_raw = std::max(max_raw, scale * norm);
      ++count;
    };
    for (int64_t idx : batch) {
      model.Gradient(data.row(idx), data.labels[idx], grad_.data());
      accumulate(grad_.data());
    }
    if (extra != nullptr) accumulate(extra);
    double shrink = 1.0;
    if (after_average_ && count > 0) {
      // |B| * clip(mean) equals the raw sum scaled by min(1, C / ||mean||).
      const double mean_norm = Norm(sum) / static_cast<double>(count);
      if (mean_norm > clip_) shrink = clip_ / mean_norm;
      for (double& x : sum) x *= shrink;
    }
    *max_contribution = std::max(*max_contribution, shrink * max_raw);
  }

 private:
  double clip_;
  bool after_average_;
  std::vector<double> grad_;
};

absl::Status CheckData(const Dataset& data, const TinyModel& model) {
  if (data.size() < 1) return absl::InvalidArgumentError("dataset is empty");
  if (data.dim != model.input_dim()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("dataset dim %d does not match model input dim %d",
                        data.dim, model.input_dim()));
  }
  for (int y : data.labels) {
    if (y < 0 || y >= model.num_classes()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "label %d outside [0, %d)", y, model.num_classes()));
    }
  }
  return absl::OkStatus();
}

std::vector<double> MeanGradient(const TinyModel& model, const Dataset& data) {
  std::vector<double> mean(model.num_params(), 0.0);
  std::vector<double> g(model.num_params());
  for (int64_t i = 0; i < data.size(); ++i) {
    model.Gradient(data.row(i), data.labels[i], g.data());
    for (size_t k = 0; k < g.size(); ++k) mean[k] += g[k];
  }
  for (double& x : mean) x /= static_cast<double>(data.size());
  return mean;
}

double AbsCosine(const TinyModel& model, std::span<const double> mean_grad,
                 std::span<const double> x, int label,
                 std::vector<double>& scratch) {
  model.Gradient(x.data(), label, scratch.data());
  const double denom = Norm(scratch) * Norm(mean_grad);
  if (denom == 0.0) return 0.0;
  return std::abs(Dot(scratch, mean_grad)) / denom;
}

}  // namespace

void Dataset::Append(std::span<const double> x, int label) {
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

Dataset MakeTwoGaussians(int64_t n, int64_t dim, double separation,
                         uint64_t seed) {
  Dataset data;
  data.dim = dim;
  data.num_classes = 2;
  data.features.reserve(n * dim);
  data.labels.reserve(n);
  CounterRng rng(seed);
  const double shift = 0.5 * separation / std::sqrt(static_cast<double>(dim));
  std::vector<double> x(dim);
  for (int64_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double sign = y == 1 ? 1.0 : -1.0;
    for (double& v : x) v = sign * shift + rng.Normal();
    data.Append(x, y);
  }
  return data;
}

Dataset MakeSpiral(int64_t n, int num_classes, double noise, uint64_t seed) {
  Dataset data;
  data.dim = 2;
  data.num_classes = num_classes;
  CounterRng rng(seed);
  const int64_t per_class = std::max<int64_t>(1, n / num_classes);
  for (int64_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % num_classes);
    const double r =
        static_cast<double>(i / num_classes) / static_cast<double>(per_class);
    const double t = 4.0 * r + 2.0 * std::numbers::pi * y / num_classes +
                     noise * rng.Normal();
    const double x[2] = {r * std::cos(t), r * std::sin(t)};
    data.Append(x, y);
  }
  return data;
}

absl::StatusOr<Architecture> ParseArchitecture(std::string_view name) {
  if (name == "logistic") return Architecture::kLogistic;
  if (name == "mlp") return Architecture::kMlp;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown task '%s' (want logistic or mlp)",
                      std::string(name)));
}

absl::StatusOr<TinyModel> TinyModel::Create(Architecture arch,
                                            int64_t input_dim,
                                            int num_classes, int64_t hidden,
                                            int64_t pad, uint64_t seed) {
  if (input_dim < 1 || pad < 0) {
    return absl::InvalidArgumentError("input_dim must be >= 1 and pad >= 0");
  }
  TinyModel m;
  m.arch_ = arch;
  m.input_dim_ = input_dim;
  m.pad_ = pad;
  int64_t body = 0;
  if (arch == Architecture::kLogistic) {
    if (num_classes != 2) {
      return absl::InvalidArgumentError("logistic model needs 2 classes");
    }
    body = input_dim + 1;
  } else {
    if (num_classes < 2 || hidden < 1) {
      return absl::InvalidArgumentError("mlp needs >= 2 classes, hidden >= 1");
    }
    body = hidden * input_dim + hidden + num_classes * hidden + num_classes;
  }
  m.num_classes_ = num_classes;
  m.hidden_ = arch == Architecture::kMlp ? hidden : 0;
  if (body + pad > kMaxModelParams) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d parameters exceed the limit of %d", body + pad, kMaxModelParams));
  }
  m.params_.assign(body + pad, 0.0);
  if (arch == Architecture::kMlp) {
    CounterRng rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    double* w1 = m.params_.data();
    double* w2 = w1 + hidden * input_dim + hidden;
    for (int64_t i = 0; i < hidden * input_dim; ++i) w1[i] = s1 * rng.Normal();
    for (int64_t i = 0; i < num_classes * hidden; ++i) w2[i] = s2 * rng.Normal();
  }
  return m;
}

void TinyModel::Probabilities(const double* x, double* probs) const {
  std::vector<double> z(num_classes_);
  if (arch_ == Architecture::kLogistic) {
    const double m = std::inner_product(x, x + input_dim_, params_.data(),
                                        params_[input_dim_]);
    z[0] = 0.0;
    z[1] = m;
  } else {
    const double* w1 = params_.data();
    const double* b1 = w1 + hidden_ * input_dim_;
    const double* w2 = b1 + hidden_;
    const double* b2 = w2 + num_classes_ * hidden_;
    std::vector<double> h(hidden_);
    for (int64_t j = 0; j < hidden_; ++j) {
      h[j] = std::tanh(
          std::inner_product(x, x + input_dim_, w1 + j * input_dim_, b1[j]));
    }
    for (int k = 0; k < num_classes_; ++k) {
      z[k] = std::inner_product(h.begin(), h.end(), w2 + k * hidden_, b2[k]);
    }
  }
  const double lse = LogSumExp(z.data(), num_classes_, -1);
  for (int k = 0; k < num_classes_; ++k) probs[k] = std::exp(z[k] - lse);
}

double TinyModel::Probability(const double* x, int label) const {
  std::vector<double> p(num_classes_);
  Probabilities(x, p.data());
  return p[label];
}

double TinyModel::Loss(const double* x, int label) const {
  return -std::log(Probability(x, label));
}

void TinyModel::Gradient(const double* x, int label, double* grad) const {
  std::fill(grad, grad + params_.size(), 0.0);
  std::vector<double> p(num_classes_);
  Probabilities(x, p.data());
  if (arch_ == Architecture::kLogistic) {
    const double r = p[1] - (label == 1 ? 1.0 : 0.0);
    for (int64_t i = 0; i < input_dim_; ++i) grad[i] = r * x[i];
    grad[input_dim_] = r;
    return;
  }
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_ * input_dim_;
  const double* w2 = b1 + hidden_;
  double* gw1 = grad;
  double* gb1 = gw1 + hidden_ * input_dim_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + num_classes_ * hidden_;
  std::vector<double> h(hidden_);
  for (int64_t j = 0; j < hidden_; ++j) {
    h[j] = std::tanh(
        std::inner_product(x, x + input_dim_, w1 + j * input_dim_, b1[j]));
  }
  std::vector<double> dh(hidden_, 0.0);
  for (int k = 0; k < num_classes_; ++k) {
    const double dz = p[k] - (k == label ? 1.0 : 0.0);
    gb2[k] = dz;
    for (int64_t j = 0; j < hidden_; ++j) {
      gw2[k * hidden_ + j] = dz * h[j];
      dh[j] += dz * w2[k * hidden_ + j];
    }
  }
  for (int64_t j = 0; j < hidden_; ++j) {
    const double da = dh[j] * (1.0 - h[j] * h[j]);
    gb1[j] = da;
    for (int64_t i = 0; i < input_dim_; ++i) gw1[j * input_dim_ + i] = da * x[i];
  }
}

bool TinyModel::Finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::vector<double> ClipVector(std::span<const double> v, double clip) {
  std::vector<double> out(v.begin(), v.end());
  ClipInPlace(out, clip);
  return out;
}

void ClipInPlace(std::span<double> v, double clip) {
  const double norm = Norm(v);
  if (norm <= clip || norm == 0.0) return;
  const double s = clip / norm;
  for (double& x : v) x *= s;
}

absl::Status BugSpec::Validate() const {
  if (kind == BugKind::kBiasedNoise && seeds < 1) {
    return absl::InvalidArgumentError("biased-noise needs k >= 1 seeds");
  }
  if (kind == BugKind::kNoiseScale && !(actual_sigma > 0.0)) {
    return absl::InvalidArgumentError("noise-scale needs sigma' > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<BugSpec> ParseBug(std::string_view text) {
  BugSpec bug;
  const size_t colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string arg =
      colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  auto number = [&](double* out) -> absl::Status {
    char* end = nullptr;
    *out = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("bad bug argument in '%s'", std::string(text)));
    }
    return absl::OkStatus();
  };
  if (head == "none" && arg.empty()) {
    bug.kind = BugKind::kNone;
  } else if ((head == "clip-after-avg" || head == "clip-after-average") &&
             arg.empty()) {
    bug.kind = BugKind::kClipAfterAverage;
  } else if (head == "biased-noise") {
    bug.kind = BugKind::kBiasedNoise;
    if (!arg.empty()) {
      double k = 0;
      RETURN_IF_ERROR(number(&k));
      if (k != std::floor(k)) {
        return absl::InvalidArgumentError("biased-noise seed count must be an integer");
      }
      bug.seeds = static_cast<int64_t>(k);
    }
  } else if (head == "noise-scale") {
    bug.kind = BugKind::kNoiseScale;
    RETURN_IF_ERROR(number(&bug.actual_sigma));
  } else {
    return absl::InvalidArgumentError(absl::StrFormat(
        "unknown bug '%s' (want none, clip-after-avg, biased-noise:k or "
        "noise-scale:s)",
        std::string(text)));
  }
  RETURN_IF_ERROR(bug.Validate());
  return bug;
}

std::string BugName(const BugSpec& bug) {
  switch (bug.kind) {
    case BugKind::kNone:
      return "none";
    case BugKind::kClipAfterAverage:
      return "clip-after-avg";
    case BugKind::kBiasedNoise:
      return absl::StrFormat("biased-noise:%d", bug.seeds);
    case BugKind::kNoiseScale:
      return absl::StrFormat("noise-scale:%.17g", bug.actual_sigma);
  }
  return "none";
}

absl::Status DpSgdConfig::Validate() const {
  if (!(q > 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrFormat("q=%g not in (0, 1]", q));
  }
  if (!(qc > 0.0 && qc <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("qc=%g not in (0, 1]", qc));
  }
  if (!(eta > 0.0) || !(sigma > 0.0) || !(clip > 0.0)) {
    return absl::InvalidArgumentError("eta, sigma and clip must be positive");
  }
  if (steps < 0) return absl::InvalidArgumentError("steps must be >= 0");
  if (window_begin < 0 || window_end < 0 ||
      (window_end > 0 && window_end < window_begin)) {
    return absl::InvalidArgumentError("bad observation window");
  }
  return bug.Validate();
}

absl::StatusOr<CanaryKind> ParseCanaryKind(std::string_view name) {
  if (name == "dirac") return CanaryKind::kDiracGradient;
  if (name == "constant") return CanaryKind::kConstantGradient;
  if (name == "random") return CanaryKind::kRandomGradient;
  if (name == "mislabeled") return CanaryKind::kMislabeledInput;
  if (name == "blank") return CanaryKind::kBlankInput;
  if (name == "crafted") return CanaryKind::kCraftedInput;
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown canary '%s' (want dirac, constant, random, mislabeled, blank "
      "or crafted)",
      std::string(name)));
}

std::string CanaryKindName(CanaryKind kind) {
  switch (kind) {
    case CanaryKind::kDiracGradient:
      return "dirac";
    case CanaryKind::kConstantGradient:
      return "constant";
    case CanaryKind::kRandomGradient:
      return "random";
    case CanaryKind::kMislabeledInput:
      return "mislabeled";
    case CanaryKind::kBlankInput:
      return "blank";
    case CanaryKind::kCraftedInput:
      return "crafted";
  }
  return "dirac";
}

bool IsInputCanary(CanaryKind kind) {
  return kind == CanaryKind::kMislabeledInput ||
         kind == CanaryKind::kBlankInput || kind == CanaryKind::kCraftedInput;
}

absl::StatusOr<WhiteboxResult> TrainWhitebox(const Dataset& data,
                                             TinyModel model,
                                             const DpSgdConfig& cfg,
                                             const CanarySpec& canary) {
  RETURN_IF_ERROR(cfg.Validate());
  RETURN_IF_ERROR(CheckData(data, model));
  const bool input = IsInputCanary(canary.kind);
  if (input) {
    if (static_cast<int64_t>(canary.input.size()) != model.input_dim() ||
        canary.label < 0 || canary.label >= model.num_classes()) {
      return absl::InvalidArgumentError(
          "input canary payload does not match the model");
    }
  } else if (!(canary.magnitude > 0.0)) {
    return absl::InvalidArgumentError("canary magnitude must be positive");
  }
  const int64_t dim = model.num_params();
  const double c = cfg.clip;
  const int64_t end = cfg.window_end == 0 ? cfg.steps
                                          : std::min(cfg.window_end, cfg.steps);
  const int64_t begin = std::min(cfg.window_begin, end);
  const int64_t range_begin = model.pad() > 0 ? model.pad_begin() : 0;
  const int64_t range = model.pad() > 0 ? model.pad() : dim;

  CounterRng train_rng(DeriveSeed(cfg.seed, 0));
  CounterRng audit_rng(DeriveSeed(cfg.seed, 1));
  const uint64_t dirac_start = DeriveSeed(cfg.seed, 3) % range;
  const bool clip_after = cfg.bug.kind == BugKind::kClipAfterAverage;
  NoiseSource train_noise(cfg, dim);
  NoiseSource audit_noise(cfg, dim);
  Aggregator aggregator(model, c, clip_after);

  WhiteboxResult result{model, {}, {}};
  result.observations.d.world = World::kD;
  result.observations.dprime.world = World::kDprime;
  result.observations.d.seed = cfg.seed;
  result.observations.dprime.seed = cfg.seed;
  std::vector<double>& o = result.observations.d.scores;
  std::vector<double>& o2 = result.observations.dprime.scores;
  if (cfg.capture_observations) {
    o.reserve(end - begin);
    o2.reserve(end - begin);
  }

  std::vector<int64_t> batch;
  std::vector<double> sum(dim), sum2(dim);
  std::vector<double> direction(dim), raw(dim);
  std::unordered_set<int64_t> pool_used;
  TinyModel& m = result.model;
  double max_contrib = 0.0;

  auto gradient_canary = [&](int64_t t) {
    std::fill(direction.begin(), direction.end(), 0.0);
    const bool fresh = canary.refresh == CanaryRefresh::kPerStep;
    switch (canary.kind) {
      case CanaryKind::kDiracGradient: {
        const int64_t j = range_begin +
            static_cast<int64_t>((dirac_start + (fresh ? t : 0)) % range);
        direction[j] = c;
        break;
      }
      case CanaryKind::kConstantGradient: {
        const double v = c / std::sqrt(static_cast<double>(range));
        for (int64_t j = 0; j < range; ++j) direction[range_begin + j] = v;
        break;
      }
      default: {
        CounterRng gen(DeriveSeed(cfg.seed, fresh ? 4 + t : 4));
        for (int64_t j = 0; j < range; ++j) {
          direction[range_begin + j] = gen.Normal();
        }
        const double norm = Norm(direction);
        for (double& x : direction) x *= c / norm;
        break;
      }
    }
    for (int64_t j = 0; j < dim; ++j) raw[j] = canary.magnitude * direction[j];
  };

  for (int64_t t = 0; t < cfg.steps; ++t) {
    SampleBatch(train_rng, data.size(), cfg.q, batch);
    aggregator.Sum(data, m, batch, nullptr, sum, &max_contrib);
    const int64_t k = train_noise.Add(train_rng, sum);
    if (k >= 0) pool_used.insert(k);

    if (cfg.capture_observations && t >= begin && t < end) {
      if (input) {
        m.Gradient(canary.input.data(), canary.label, raw.data());
        direction = ClipVector(raw, c);
      } else {
        gradient_canary(t);
      }
      SampleBatch(audit_rng, data.size(), cfg.q, batch);
      const bool present = audit_rng.Bernoulli(cfg.qc);
      if (present) ++result.stats.canary_steps;
      aggregator.Sum(data, m, batch, present ? raw.data() : nullptr, sum2,
                     &max_contrib);
      audit_noise.Add(audit_rng, sum2);
      o.push_back(Dot(direction, sum) / (c * c));
      o2.push_back(Dot(direction, sum2) / (c * c));
    }

    for (int64_t j = 0; j < dim; ++j) m.params()[j] -= cfg.eta * sum[j];
    if (!m.Finite()) {
      return absl::InternalError(
          absl::StrFormat("parameters became non-finite at step %d", t));
    }
  }
  result.stats.max_contribution_norm = max_contrib;
  result.stats.distinct_noise_vectors =
      cfg.bug.kind == BugKind::kBiasedNoise
          ? static_cast<int64_t>(pool_used.size())
          : cfg.steps;
  return result;
}

absl::StatusOr<TinyModel> TrainDpSgd(const Dataset& data, TinyModel model,
                                     const DpSgdConfig& cfg,
                                     TrainStats* stats) {
  DpSgdConfig plain = cfg;
  plain.capture_observations = false;
  ASSIGN_OR_RETURN(WhiteboxResult r,
                   TrainWhitebox(data, std::move(model), plain, CanarySpec{}));
  if (stats != nullptr) *stats = r.stats;
  return std::move(r.model);
}

double CanaryLogit(const TinyModel& model, std::span<const double> x,
                   int label) {
  std::vector<double> p(model.num_classes());
  model.Probabilities(x.data(), p.data());
  // log p - log(1 - p) from the probabilities of the other classes.
  double rest = 0.0;
  for (int k = 0; k < model.num_classes(); ++k) {
    if (k != label) rest += p[k];
  }
  if (rest > 0.5) return std::log(p[label]) - std::log(rest);
  return std::log(p[label]) - std::log1p(-p[label]);
}

absl::StatusOr<ObservationPair> TrainBlackbox(const Dataset& data,
                                              const TinyModel& init,
                                              const DpSgdConfig& cfg,
                                              std::span<const double> x,
                                              int label, int64_t runs,
                                              int jobs) {
  if (runs < 1) return absl::InvalidArgumentError("runs must be >= 1");
  RETURN_IF_ERROR(cfg.Validate());
  RETURN_IF_ERROR(CheckData(data, init));
  if (static_cast<int64_t>(x.size()) != init.input_dim() || label < 0 ||
      label >= init.num_classes()) {
    return absl::InvalidArgumentError("canary does not match the model");
  }
  Dataset with = data;
  with.Append(x, label);

  ObservationPair out;
  out.d.world = World::kD;
  out.dprime.world = World::kDprime;
  out.d.seed = out.dprime.seed = cfg.seed;
  out.d.scores.assign(runs, 0.0);
  out.dprime.scores.assign(runs, 0.0);
  std::vector<absl::Status> errors(runs);
  ParallelFor(runs, jobs, [&](int64_t r) {
    const uint64_t run_seed = DeriveSeed(cfg.seed, r);
    for (int world = 0; world < 2; ++world) {
      DpSgdConfig c = cfg;
      c.seed = DeriveSeed(run_seed, world);
      absl::StatusOr<TinyModel> m =
          TrainDpSgd(world == 0 ? data : with, init, c);
      if (!m.ok()) {
        errors[r] = m.status();
        return;
      }
      (world == 0 ? out.d.scores : out.dprime.scores)[r] =
          CanaryLogit(*m, x, label);
    }
  });
  for (const absl::Status& s : errors) RETURN_IF_ERROR(s);
  return out;
}

double CanaryCosine(const TinyModel& model, const Dataset& dist_data,
                    std::span<const double> x, int label) {
  const std::vector<double> mean = MeanGradient(model, dist_data);
  std::vector<double> scratch(model.num_params());
  return AbsCosine(model, mean, x, label, scratch);
}

absl::StatusOr<CraftResult> CraftInputCanary(const Dataset& dist_data,
                                             const TinyModel& model,
                                             std::span<const double> start,
                                             int label,
                                             const CraftOptions& opts) {
  RETURN_IF_ERROR(CheckData(dist_data, model));
  if (static_cast<int64_t>(start.size()) != model.input_dim() || label < 0 ||
      label >= model.num_classes()) {
    return absl::InvalidArgumentError("start sample does not match the model");
  }
  if (!(opts.eta > 0.0) || !(opts.fd_step > 0.0) || opts.steps < 0) {
    return absl::InvalidArgumentError("bad crafting options");
  }
  const std::vector<double> mean = MeanGradient(model, dist_data);
  std::vector<double> scratch(model.num_params());
  auto objective = [&](std::span<const double> x) {
    return AbsCosine(model, mean, x, label, scratch);
  };

  CraftResult out;
  out.label = label;
  out.input.assign(start.begin(), start.end());
  double value = objective(out.input);
  out.objective.push_back(value);
  const int64_t d = model.input_dim();
  std::vector<double> grad(d), probe(d), candidate(d);
  for (int64_t step = 0; step < opts.steps; ++step) {
    for (int64_t i = 0; i < d; ++i) {
      probe = out.input;
      probe[i] += opts.fd_step;
      const double up = objective(probe);
      probe[i] -= 2.0 * opts.fd_step;
      const double down = objective(probe);
      grad[i] = (up - down) / (2.0 * opts.fd_step);
      if (!std::isfinite(grad[i])) {
        return absl::FailedPreconditionError(absl::StrFormat(
            "non-finite crafting gradient at step %d, input %d", step, i));
      }
    }
    double eta = opts.eta;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, eta *= 0.5) {
      for (int64_t i = 0; i < d; ++i) candidate[i] = out.input[i] - eta * grad[i];
      const double v = objective(candidate);
      if (std::isfinite(v) && v <= value) {
        out.input = candidate;
        value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.objective.push_back(value);
  }
  return out;
}

absl::StatusOr<CanarySpec> MakeInputCanary(CanaryKind kind,
                                           const Dataset& data,
                                           const TinyModel& model,
                                           uint64_t seed,
                                           const CraftOptions& opts) {
  if (!IsInputCanary(kind)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s is not an input canary", CanaryKindName(kind)));
  }
  RETURN_IF_ERROR(CheckData(data, model));
  CanarySpec spec;
  spec.kind = kind;
  spec.refresh = CanaryRefresh::kStatic;
  CounterRng rng(seed);
  const int64_t i = static_cast<int64_t>(rng.Below(data.size()));
  const std::span<const double> row(data.row(i), data.dim);
  switch (kind) {
    case CanaryKind::kBlankInput:
      spec.input.assign(data.dim, 0.0);
      spec.label = 0;
      break;
    case CanaryKind::kMislabeledInput:
      spec.input.assign(row.begin(), row.end());
      spec.label = static_cast<int>(
          (data.labels[i] + 1 + rng.Below(model.num_classes() - 1)) %
          model.num_classes());
      break;
    default: {
      ASSIGN_OR_RETURN(CraftResult r,
                       CraftInputCanary(data, model, row, data.labels[i], opts));
      spec.input = std::move(r.input);
      spec.label = r.label;
      break;
    }
  }
  return spec;
}

}  // namespace dpaudit
