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

#ifndef DPAUDIT_DPSGD_H_
#define DPAUDIT_DPSGD_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpaudit/mechanisms.h"

namespace dpaudit {

// Row-major feature matrix with integer class labels.
struct Dataset {
  int64_t dim = 0;
  int num_classes = 2;
  std::vector<double> features;
  std::vector<int> labels;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  const double* row(int64_t i) const { return features.data() + i * dim; }
  void Append(std::span<const double> x, int label);
};

// Two spherical Gaussian classes in `dim` dimensions whose means are
// `separation` apart along the all-ones direction.
Dataset MakeTwoGaussians(int64_t n, int64_t dim, double separation,
                         uint64_t seed);

// Interleaved spiral arms in the plane, one per class.
Dataset MakeSpiral(int64_t n, int num_classes, double noise, uint64_t seed);

enum class Architecture { kLogistic, kMlp };

absl::StatusOr<Architecture> ParseArchitecture(std::string_view name);

inline constexpr int64_t kMaxModelParams = 100000;

// Small differentiable classifier with a flat parameter vector and analytic
// per-example gradients.
//
// Logistic layout: [w (dim), b, pad]. Binary labels only.
// MLP layout: [W1 (hidden x dim), b1 (hidden), W2 (classes x hidden),
// b2 (classes), pad], tanh hidden layer and softmax output.
//
// The trailing `pad` parameters are never read by the forward pass. They
// receive DP noise but no data gradient, like rarely touched coordinates of
// a large model, and give gradient canaries a coordinate range where the
// batch contributes nothing.
class TinyModel {
 public:
  static absl::StatusOr<TinyModel> Create(Architecture arch, int64_t input_dim,
                                          int num_classes, int64_t hidden,
                                          int64_t pad, uint64_t seed);

  Architecture architecture() const { return arch_; }
  int64_t input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  int64_t hidden() const { return hidden_; }
  int64_t pad() const { return pad_; }
  int64_t num_params() const { return static_cast<int64_t>(params_.size()); }
  // First index of the pad block.
  int64_t pad_begin() const { return num_params() - pad_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Class probabilities; `probs` has num_classes() entries.
  void Probabilities(const double* x, double* probs) const;
  double Probability(const double* x, int label) const;
  // Cross-entropy loss of one example.
  double Loss(const double* x, int label) const;
  // Gradient of Loss with respect to the parameters; `grad` has
  // num_params() entries and the pad block is zero.
  void Gradient(const double* x, int label, double* grad) const;
  bool Finite() const;

 private:
  TinyModel() = default;

  Architecture arch_ = Architecture::kLogistic;
  int64_t input_dim_ = 0;
  int num_classes_ = 2;
  int64_t hidden_ = 0;
  int64_t pad_ = 0;
  std::vector<double> params_;
};

// v * min(1, C / ||v||). The zero vector passes through.
std::vector<double> ClipVector(std::span<const double> v, double clip);
void ClipInPlace(std::span<double> v, double clip);

enum class BugKind { kNone, kClipAfterAverage, kBiasedNoise, kNoiseScale };

struct BugSpec {
  BugKind kind = BugKind::kNone;
  // Number of distinct noise seeds for kBiasedNoise.
  int64_t seeds = 100;
  // Noise multiplier actually used by kNoiseScale.
  double actual_sigma = 0.0;

  absl::Status Validate() const;
};

// Accepts "none", "clip-after-avg" (or "clip-after-average"),
// "biased-noise[:k]" and "noise-scale:s".
absl::StatusOr<BugSpec> ParseBug(std::string_view text);
std::string BugName(const BugSpec& bug);

struct DpSgdConfig {
  double q = 0.01;
  double eta = 0.01;
  // Noise multiplier; the trainer adds N(0, (sigma * clip)^2 I).
  double sigma = 1.0;
  double clip = 1.0;
  int64_t steps = 1000;
  double qc = 1.0;
  uint64_t seed = 0;
  BugSpec bug;
  // Observations are recorded for steps in [window_begin, window_end);
  // window_end = 0 means all steps.
  int64_t window_begin = 0;
  int64_t window_end = 0;
  // When false, B' and the canary are never sampled. The trained model is
  // bit-identical either way.
  bool capture_observations = true;

  absl::Status Validate() const;
};

enum class CanaryKind {
  kDiracGradient,
  kConstantGradient,
  kRandomGradient,
  kMislabeledInput,
  kBlankInput,
  kCraftedInput,
};

enum class CanaryRefresh { kStatic, kPerStep };

absl::StatusOr<CanaryKind> ParseCanaryKind(std::string_view name);
std::string CanaryKindName(CanaryKind kind);
bool IsInputCanary(CanaryKind kind);

struct CanarySpec {
  CanaryKind kind = CanaryKind::kDiracGradient;
  CanaryRefresh refresh = CanaryRefresh::kPerStep;
  // Gradient canaries enter B' with norm magnitude * C; the observation
  // direction always has norm C. Honest clipping removes the extra scale.
  double magnitude = 1.0;
  // Input canary payload.
  std::vector<double> input;
  int label = 0;
};

// Per-step bookkeeping of the aggregation path.
struct TrainStats {
  // Largest norm of any single example's contribution to a pre-noise sum.
  double max_contribution_norm = 0.0;
  // Number of distinct noise vectors used for the model update.
  int64_t distinct_noise_vectors = 0;
  int64_t canary_steps = 0;
};

struct WhiteboxResult {
  TinyModel model;
  // Scores are <g', grad> / C^2, so D has mean 0 and D' mean 1 for a
  // Dirac canary on the pad.
  ObservationPair observations;
  TrainStats stats;
};

// One DP-SGD run that records white-box observations: per step it samples
// B and B' with rate q, adds the canary to B' with probability qc, clips,
// sums and noises both, records O[t] = <g', grad~[t]> and
// O'[t] = <g', grad~'[t]>, and updates theta with grad~ only.
absl::StatusOr<WhiteboxResult> TrainWhitebox(const Dataset& data,
                                             TinyModel model,
                                             const DpSgdConfig& cfg,
                                             const CanarySpec& canary);

// Plain DP-SGD on `data` (no canary, no observations).
absl::StatusOr<TinyModel> TrainDpSgd(const Dataset& data, TinyModel model,
                                     const DpSgdConfig& cfg,
                                     TrainStats* stats = nullptr);

// log(p / (1 - p)) for the canary label probability p.
double CanaryLogit(const TinyModel& model, std::span<const double> x,
                   int label);

// Trains `runs` model pairs on D and on D plus the canary and records the
// canary logit of each trained model. Run r uses DeriveSeed(cfg.seed, r).
absl::StatusOr<ObservationPair> TrainBlackbox(const Dataset& data,
                                              const TinyModel& init,
                                              const DpSgdConfig& cfg,
                                              std::span<const double> x,
                                              int label, int64_t runs,
                                              int jobs = 1);

struct CraftOptions {
  int64_t steps = 50;
  double eta = 0.5;
  double fd_step = 1e-5;
  int max_halvings = 30;
};

struct CraftResult {
  std::vector<double> input;
  int label = 0;
  // |cosine| after each accepted step, starting with the initial value.
  std::vector<double> objective;
};

// |cos(grad l(theta, (x, y)), mean gradient over dist_data)|.
double CanaryCosine(const TinyModel& model, const Dataset& dist_data,
                    std::span<const double> x, int label);

// Descends |cosine| in input space by central finite differences. Each step
// halves the learning rate until the objective does not increase.
absl::StatusOr<CraftResult> CraftInputCanary(const Dataset& dist_data,
                                             const TinyModel& model,
                                             std::span<const double> start,
                                             int label,
                                             const CraftOptions& opts = {});

// Builds the payload of an input canary. Mislabeled takes a random example
// and a different label; blank is the zero input with label 0; crafted
// starts from a random example and runs CraftInputCanary against `model`.
absl::StatusOr<CanarySpec> MakeInputCanary(CanaryKind kind,
                                           const Dataset& data,
                                           const TinyModel& model,
                                           uint64_t seed,
                                           const CraftOptions& opts = {});

}  // namespace dpaudit

#endif  // DPAUDIT_DPSGD_H_
