// Copyright 2026  The emokit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOKIT_TRAINER_HPP_
#define EMOKIT_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emokit/features.hpp"
#include "emokit/jsonl.hpp"

namespace emokit {

std::vector<double> Softmax(std::span<const double> logits);

/// Scalar weight per layer; the aggregation uses softmax(logits).
struct LayerWeights {
  std::vector<double> logits;
  std::vector<double> Normalized() const { return Softmax(logits); }
};

/// Temporal mean of the softmax-weighted layer sum, length D.
std::vector<double> AggregateFeatures(const FeatureStack& stack, const LayerWeights& weights);

/// (1 - beta) / (1 - beta^n_j) per class; beta == 1 gives 1 / n_j.
/// Throws kInvalidArgument for n_j == 0 or beta outside (0, 1].
std::vector<double> CbceFactors(double beta, std::span<const std::int64_t> class_counts);

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;  // d loss / d logits
};

/// sum_j factor_j * (-target_j * log softmax(logits)_j).
LossAndGrad CbceLoss(const Eigen::VectorXd& logits, std::span<const double> target,
                     std::span<const double> factors);

/// Layer weights -> dense(hidden) -> ReLU -> dense(C).
struct HeadParams {
  Eigen::VectorXd layer_logits;  // L
  Eigen::MatrixXd w1;            // H x D
  Eigen::VectorXd b1;            // H
  Eigen::MatrixXd w2;            // C x H
  Eigen::VectorXd b2;            // C

  static HeadParams Zeros(std::size_t layers, std::size_t dims, std::size_t classes,
                          std::size_t hidden);
  /// Uniform layer weights, Glorot-uniform dense layers, zero biases.
  static HeadParams Init(std::size_t layers, std::size_t dims, std::size_t classes,
                         std::size_t hidden, Rng& rng);

  std::size_t layers() const { return static_cast<std::size_t>(layer_logits.size()); }
  std::size_t dims() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(w2.rows()); }

  std::size_t NumParams() const;
  /// Flat view in a fixed order: layer_logits, w1, b1, w2, b2.
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> flat);

  Json ToJson() const;
  static HeadParams FromJson(const Json& j);
};

/// One utterance reduced to its per-layer temporal means (L x D). The head
/// is linear in the features up to the first dense layer, so this is all
/// the trainer needs.
struct Example {
  std::string utterance_id;
  Eigen::MatrixXd layer_means;
  std::vector<double> target;
};

Example MakeExample(const FeatureStack& stack, std::vector<double> target);

/// Softmax class probabilities.
Eigen::VectorXd Predict(const HeadParams& params, const Eigen::MatrixXd& layer_means);

/// Loss of one example; accumulates gradients into *grad when non-null.
double HeadLoss(const HeadParams& params, const Example& example,
                std::span<const double> factors, HeadParams* grad);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double beta = 0.9999;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t hidden = 256;
  std::uint64_t seed = 7;

  Json ToJson() const;
  static TrainConfig FromJson(const Json& j);
  std::string Hash() const;
};

struct TrainResult {
  HeadParams initial;
  HeadParams best;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<double> train_loss;
  std::vector<double> dev_loss;
  std::vector<double> factors;
};

/// Positive-sample count per class: a target counts for class j iff its
/// binarized bit j is set.
std::vector<std::int64_t> PositiveCounts(std::span<const Example> examples,
                                         std::size_t num_classes);

/// Per-class CBCE factors for training; classes without positives get 0.
std::vector<double> TrainingFactors(double beta, std::span<const std::int64_t> counts);

double MeanLoss(const HeadParams& params, std::span<const Example> examples,
                std::span<const double> factors);

/// AdamW over shuffled mini-batches. Keeps the parameters of the epoch with
/// the lowest dev loss. Deterministic for a given config.
TrainResult Train(std::span<const Example> train, std::span<const Example> dev,
                  std::size_t num_classes, const TrainConfig& config);

struct Checkpoint {
  TrainConfig config;
  std::vector<std::string> classes;
  HeadParams params;
  std::size_t best_epoch = 0;
  double best_dev_loss = 0.0;
  std::vector<double> dev_loss;

  Json ToJson() const;  // includes "config_hash"
  static Checkpoint FromJson(const Json& j);
  static Checkpoint Load(const std::filesystem::path& path);
};

struct LayerWeightReport {
  std::vector<std::vector<double>> per_checkpoint;
  std::vector<double> mean;

  Json ToJson() const;
};

/// Softmax per checkpoint, then the arithmetic mean per layer. Throws
/// kDimension when the layer counts differ.
LayerWeightReport ReportLayerWeights(std::span<const HeadParams> checkpoints);

}  // namespace emokit

#endif  // EMOKIT_TRAINER_HPP_
