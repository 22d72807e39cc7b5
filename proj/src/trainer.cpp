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

#include "emokit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "emokit/error.hpp"
#include "emokit/evaluation.hpp"
#include "emokit/hashing.hpp"

namespace emokit {

std::vector<double> Softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> AggregateFeatures(const FeatureStack& stack, const LayerWeights& weights) {
  if (weights.logits.size() != stack.layers()) {
    throw Error(ErrorCode::kDimension, "layer weight count " +
                                           std::to_string(weights.logits.size()) +
                                           " does not match " + std::to_string(stack.layers()) +
                                           " layers");
  }
  const std::vector<double> w = weights.Normalized();
  std::vector<double> out(stack.dims(), 0.0);
  for (std::size_t t = 0; t < stack.frames(); ++t) {
    for (std::size_t d = 0; d < stack.dims(); ++d) {
      double frame = 0.0;
      for (std::size_t l = 0; l < stack.layers(); ++l) frame += w[l] * stack.at(l, t, d);
      out[d] += frame;
    }
  }
  for (double& v : out) v /= static_cast<double>(stack.frames());
  return out;
}

std::vector<double> CbceFactors(double beta, std::span<const std::int64_t> class_counts) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
  }
  std::vector<double> factors;
  factors.reserve(class_counts.size());
  for (std::size_t j = 0; j < class_counts.size(); ++j) {
    const std::int64_t n = class_counts[j];
    if (n < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class " + std::to_string(j) + " has no positive samples; factor undefined",
                  {{"class_index", j}});
    }
    if (beta == 1.0) {
      factors.push_back(1.0 / static_cast<double>(n));
    } else if (n == 1) {
      factors.push_back(1.0);
    } else {
      // 1 - beta^n without cancellation for beta near 1
      const double denom = -std::expm1(static_cast<double>(n) * std::log(beta));
      factors.push_back((1.0 - beta) / denom);
    }
  }
  return factors;
}

LossAndGrad CbceLoss(const Eigen::VectorXd& logits, std::span<const double> target,
                     std::span<const double> factors) {
  const auto c = static_cast<std::size_t>(logits.size());
  if (target.size() != c || factors.size() != c) {
    throw Error(ErrorCode::kDimension, "logits, target and factors differ in length");
  }
  if (!logits.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite logits");
  const double max = logits.maxCoeff();
  const double log_sum = max + std::log((logits.array() - max).exp().sum());
  LossAndGrad out;
  out.grad.resize(logits.size());
  double weighted_mass = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    const double log_p = logits[j] - log_sum;
    if (target[j] != 0.0) out.loss -= factors[j] * target[j] * log_p;
    weighted_mass += factors[j] * target[j];
  }
  for (std::size_t k = 0; k < c; ++k) {
    const double p = std::exp(logits[k] - log_sum);
    out.grad[k] = p * weighted_mass - factors[k] * target[k];
  }
  return out;
}

HeadParams HeadParams::Zeros(std::size_t layers, std::size_t dims, std::size_t classes,
                             std::size_t hidden) {
  HeadParams p;
  p.layer_logits = Eigen::VectorXd::Zero(layers);
  p.w1 = Eigen::MatrixXd::Zero(hidden, dims);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(classes, hidden);
  p.b2 = Eigen::VectorXd::Zero(classes);
  return p;
}

HeadParams HeadParams::Init(std::size_t layers, std::size_t dims, std::size_t classes,
                            std::size_t hidden, Rng& rng) {
  HeadParams p = Zeros(layers, dims, classes, hidden);
  const double a1 = std::sqrt(6.0 / static_cast<double>(dims + hidden));
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = rng.Uniform(-a1, a1);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = rng.Uniform(-a2, a2);
  return p;
}

std::size_t HeadParams::NumParams() const {
  return static_cast<std::size_t>(layer_logits.size() + w1.size() + b1.size() + w2.size() +
                                  b2.size());
}

std::vector<double> HeadParams::Flatten() const {
  std::vector<double> flat;
  flat.reserve(NumParams());
  auto append = [&](const auto& m) { flat.insert(flat.end(), m.data(), m.data() + m.size()); };
  append(layer_logits);
  append(w1);
  append(b1);
  append(w2);
  append(b2);
  return flat;
}

void HeadParams::Unflatten(std::span<const double> flat) {
  if (flat.size() != NumParams()) throw Error(ErrorCode::kDimension, "parameter count mismatch");
  std::size_t off = 0;
  auto take = [&](auto& m) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), m.size(), m.data());
    off += static_cast<std::size_t>(m.size());
  };
  take(layer_logits);
  take(w1);
  take(b1);
  take(w2);
  take(b2);
}

namespace {

Json MatrixJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Json VectorJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VectorFromJson(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd MatrixFromJson(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorCode::kDimension, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

Json HeadParams::ToJson() const {
  return {{"layer_logits", VectorJson(layer_logits)},
          {"w1", MatrixJson(w1)},
          {"b1", VectorJson(b1)},
          {"w2", MatrixJson(w2)},
          {"b2", VectorJson(b2)}};
}

HeadParams HeadParams::FromJson(const Json& j) {
  HeadParams p;
  p.layer_logits = VectorFromJson(RequireField(j, "layer_logits"));
  p.w1 = MatrixFromJson(RequireField(j, "w1"));
  p.b1 = VectorFromJson(RequireField(j, "b1"));
  p.w2 = MatrixFromJson(RequireField(j, "w2"));
  p.b2 = VectorFromJson(RequireField(j, "b2"));
  if (p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() || p.b2.size() != p.w2.rows()) {
    throw Error(ErrorCode::kDimension, "inconsistent head parameter shapes");
  }
  return p;
}

Example MakeExample(const FeatureStack& stack, std::vector<double> target) {
  Example ex;
  ex.utterance_id = stack.utterance_id();
  ex.layer_means = Eigen::MatrixXd::Zero(stack.layers(), stack.dims());
  for (std::size_t l = 0; l < stack.layers(); ++l) {
    for (std::size_t t = 0; t < stack.frames(); ++t) {
      for (std::size_t d = 0; d < stack.dims(); ++d) ex.layer_means(l, d) += stack.at(l, t, d);
    }
  }
  ex.layer_means /= static_cast<double>(stack.frames());
  ex.target = std::move(target);
  return ex;
}

namespace {

struct Forward {
  Eigen::VectorXd w, x, h, r, z;
};

Forward RunForward(const HeadParams& p, const Eigen::MatrixXd& layer_means) {
  if (layer_means.rows() != p.layer_logits.size() || layer_means.cols() != p.w1.cols()) {
    throw Error(ErrorCode::kDimension, "features do not match the head shape");
  }
  Forward f;
  const auto w = Softmax(std::span<const double>(p.layer_logits.data(),
                                                 static_cast<std::size_t>(p.layer_logits.size())));
  f.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  f.x = layer_means.transpose() * f.w;
  f.h = p.w1 * f.x + p.b1;
  f.r = f.h.cwiseMax(0.0);
  f.z = p.w2 * f.r + p.b2;
  return f;
}

}  // namespace

Eigen::VectorXd Predict(const HeadParams& params, const Eigen::MatrixXd& layer_means) {
  const Forward f = RunForward(params, layer_means);
  const auto p = Softmax(std::span<const double>(f.z.data(), static_cast<std::size_t>(f.z.size())));
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

double HeadLoss(const HeadParams& params, const Example& example, std::span<const double> factors,
                HeadParams* grad) {
  const Forward f = RunForward(params, example.layer_means);
  const LossAndGrad lg = CbceLoss(f.z, example.target, factors);
  if (grad != nullptr) {
    const Eigen::VectorXd& gz = lg.grad;
    grad->w2.noalias() += gz * f.r.transpose();
    grad->b2 += gz;
    const Eigen::VectorXd gh =
        (params.w2.transpose() * gz).cwiseProduct((f.h.array() > 0.0).cast<double>().matrix());
    grad->w1.noalias() += gh * f.x.transpose();
    grad->b1 += gh;
    const Eigen::VectorXd gx = params.w1.transpose() * gh;
    const Eigen::VectorXd gw = example.layer_means * gx;
    const double mean = f.w.dot(gw);
    grad->layer_logits += f.w.cwiseProduct((gw.array() - mean).matrix());
  }
  return lg.loss;
}

Json TrainConfig::ToJson() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"epochs", epochs},               {"beta", beta},
          {"weight_decay", weight_decay},   {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},       {"adam_epsilon", adam_epsilon},
          {"hidden", hidden},               {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const Json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.beta = j.value("beta", c.beta);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.hidden = j.value("hidden", c.hidden);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string TrainConfig::Hash() const { return Sha256Hex(ToJson().dump()); }

std::vector<std::int64_t> PositiveCounts(std::span<const Example> examples,
                                         std::size_t num_classes) {
  std::vector<std::int64_t> counts(num_classes, 0);
  for (const auto& ex : examples) {
    const MultiHot bits = Binarize(ex.target);
    for (std::size_t j = 0; j < num_classes && j < bits.size(); ++j) counts[j] += bits.bits[j];
  }
  return counts;
}

std::vector<double> TrainingFactors(double beta, std::span<const std::int64_t> counts) {
  std::vector<double> factors(counts.size(), 0.0);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      spdlog::warn("class {} has no positive training samples; excluded from the loss", j);
      continue;
    }
    const std::int64_t n = counts[j];
    factors[j] = CbceFactors(beta, std::span<const std::int64_t>(&n, 1)).front();
  }
  return factors;
}

double MeanLoss(const HeadParams& params, std::span<const Example> examples,
                std::span<const double> factors) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : examples) sum += HeadLoss(params, ex, factors, nullptr);
  return sum / static_cast<double>(examples.size());
}

namespace {

void CheckExamples(std::span<const Example> examples, std::size_t num_classes,
                   const char* split) {
  if (examples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("empty ") + split + " split");
  }
  const auto& first = examples.front().layer_means;
  for (const auto& ex : examples) {
    if (ex.layer_means.rows() != first.rows() || ex.layer_means.cols() != first.cols()) {
      throw Error(ErrorCode::kDimension, "feature shape of \"" + ex.utterance_id + "\" differs");
    }
    if (ex.target.size() != num_classes) {
      throw Error(ErrorCode::kDimension, "target of \"" + ex.utterance_id + "\" is not C-dim");
    }
  }
}

}  // namespace

TrainResult Train(std::span<const Example> train, std::span<const Example> dev,
                  std::size_t num_classes, const TrainConfig& config) {
  CheckExamples(train, num_classes, "train");
  CheckExamples(dev, num_classes, "dev");
  if (config.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (train.front().layer_means.rows() != dev.front().layer_means.rows() ||
      train.front().layer_means.cols() != dev.front().layer_means.cols()) {
    throw Error(ErrorCode::kDimension, "train and dev features differ in shape");
  }

  const auto layers = static_cast<std::size_t>(train.front().layer_means.rows());
  const auto dims = static_cast<std::size_t>(train.front().layer_means.cols());

  TrainResult result;
  result.factors = TrainingFactors(config.beta, PositiveCounts(train, num_classes));

  Rng rng(config.seed);
  HeadParams params = HeadParams::Init(layers, dims, num_classes, config.hidden, rng);
  result.initial = params;
  result.best = params;

  std::vector<double> theta = params.Flatten();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  double best_dev = std::numeric_limits<double>::infinity();
  std::uint64_t step = 0;
  HeadParams grad = HeadParams::Zeros(layers, dims, num_classes, config.hidden);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grad.layer_logits.setZero();
      grad.w1.setZero();
      grad.b1.setZero();
      grad.w2.setZero();
      grad.b2.setZero();
      for (std::size_t i = start; i < end; ++i) {
        epoch_loss += HeadLoss(params, train[order[i]], result.factors, &grad);
      }
      const std::vector<double> g = grad.Flatten();
      const double scale = 1.0 / static_cast<double>(end - start);

      ++step;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = g[i] * scale;
        theta[i] -= config.learning_rate * config.weight_decay * theta[i];
        m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * gi;
        v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * gi * gi;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
      }
      params.Unflatten(theta);
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    const double dev_loss = MeanLoss(params, dev, result.factors);
    result.dev_loss.push_back(dev_loss);
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

Json Checkpoint::ToJson() const {
  return {{"format", "emokit-head-v1"},
          {"config", config.ToJson()},
          {"config_hash", config.Hash()},
          {"classes", classes},
          {"best_epoch", best_epoch},
          {"best_dev_loss", best_dev_loss},
          {"dev_loss", dev_loss},
          {"params", params.ToJson()}};
}

Checkpoint Checkpoint::FromJson(const Json& j) {
  Checkpoint c;
  c.config = TrainConfig::FromJson(RequireField(j, "config"));
  c.classes = RequireField(j, "classes").get<std::vector<std::string>>();
  c.best_epoch = j.value("best_epoch", std::size_t{0});
  c.best_dev_loss = j.value("best_dev_loss", 0.0);
  if (j.contains("dev_loss")) c.dev_loss = j["dev_loss"].get<std::vector<double>>();
  c.params = HeadParams::FromJson(RequireField(j, "params"));
  if (auto it = j.find("config_hash"); it != j.end() && it->get<std::string>() != c.config.Hash()) {
    throw Error(ErrorCode::kValidation, "checkpoint config_hash does not match its config");
  }
  return c;
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  try {
    return FromJson(ReadJsonFile(path));
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(path.string());
    throw;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, e.what()).WithLocation(path.string());
  }
}

Json LayerWeightReport::ToJson() const {
  return {{"layers", mean.size()},
          {"checkpoints", per_checkpoint.size()},
          {"mean", mean},
          {"per_checkpoint", per_checkpoint}};
}

LayerWeightReport ReportLayerWeights(std::span<const HeadParams> checkpoints) {
  if (checkpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "no checkpoints");
  const std::size_t layers = checkpoints.front().layers();
  LayerWeightReport report;
  report.mean.assign(layers, 0.0);
  for (const auto& c : checkpoints) {
    if (c.layers() != layers) {
      throw Error(ErrorCode::kDimension, "checkpoints disagree on the layer count (" +
                                             std::to_string(layers) + " vs " +
                                             std::to_string(c.layers()) + ")");
    }
    auto w = Softmax(std::span<const double>(c.layer_logits.data(), layers));
    for (std::size_t l = 0; l < layers; ++l) report.mean[l] += w[l];
    report.per_checkpoint.push_back(std::move(w));
  }
  for (double& v : report.mean) v /= static_cast<double>(checkpoints.size());
  return report;
}

}  // namespace emokit
