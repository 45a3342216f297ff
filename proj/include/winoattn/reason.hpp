// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "winoattn/features.hpp"
#include "winoattn/head_id.hpp"

namespace winoattn::reason {

using features::FeatureLayout;
using features::FeatureVector;

struct TrainConfig {
  double lambda = 1.0;  // L2 strength on the weights; the bias is not penalized
  double tolerance = 1e-6;  // on the infinity norm of the gradient
  int max_iterations = 1000;
  bool allow_degenerate = false;  // permit fits where only one class is present
  std::uint64_t seed = 0;         // recorded in the model; the solver itself is deterministic
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Logistic regression over attention features: p(class 1) = sigmoid(w.x + b).
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  FeatureLayout layout;
  double lambda = 1.0;
  TrainMeta meta;

  std::string to_json() const;
  static LinearModel from_json(std::string_view text);
};

/// Minimizes 0.5 * lambda * |w|^2 + sum_i log(1 + exp(-s_i (w.x_i + b))) with
/// s_i = +1 for class 1 and -1 for class 0, by damped Newton iterations.
LinearModel train(std::span<const FeatureVector> x, std::span<const int> y, const TrainConfig& cfg = {});

/// Objective value and gradient (weights then bias) for given parameters.
double objective(std::span<const double> weights, double bias, std::span<const FeatureVector> x,
                 std::span<const int> y, double lambda, std::vector<double>* gradient = nullptr);

struct Prediction {
  int label = 0;
  double probability = 0.5;  // of class 1
};

/// Class 1 iff p > 0.5; an exact tie goes to class 0.
Prediction predict(const LinearModel& m, const FeatureVector& x);

/// Percentage of rows predicted correctly. Throws on empty input.
double accuracy(const LinearModel& m, std::span<const FeatureVector> x, std::span<const int> y);

/// Heads by descending |weight|; concat layouts score a head by the larger
/// magnitude of its two block weights. Ties go to (layer, head) ascending.
std::vector<HeadId> rank_heads(const LinearModel& m);

/// The k heads with the smallest mean rank position across models.
std::vector<HeadId> common_heads(const std::map<std::string, LinearModel>& models, int k);

/// Keeps the listed heads (both blocks under concat), in the order given.
FeatureVector restrict_features(const FeatureVector& x, std::span<const HeadId> heads);

/// k distinct heads drawn uniformly without replacement; fixed by `seed`.
std::vector<HeadId> random_heads(int layers, int heads, int k, std::uint64_t seed);

/// Reads one head per line ("l3h7"); blank lines and '#' comments skipped.
std::vector<HeadId> parse_head_list(std::string_view text);
std::string format_head_list(std::span<const HeadId> heads);

struct LabeledSet {
  std::vector<FeatureVector> x;
  std::vector<int> y;
};

/// One train/valid resample plus the sets evaluated after each refit
/// (keyed by language: the training language's test split, every other
/// language's full subset).
struct SweepInput {
  LabeledSet train;
  LabeledSet valid;
  std::map<std::string, LabeledSet> eval;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
  std::vector<double> values;

  static Summary of(std::vector<double> values);
};

struct SweepPoint {
  int n = 0;
  Summary train_acc;
  Summary valid_acc;
  std::map<std::string, Summary> eval_acc;
};

/// For each resample: fit on all heads, rank once, then refit on the top-N
/// heads for every N and record accuracies.
std::vector<SweepPoint> topn_sweep(std::span<const SweepInput> resamples, std::span<const int> ns,
                                   const TrainConfig& cfg = {});

std::string sweep_to_csv(std::span<const SweepPoint> curve);

}  // namespace winoattn::reason
