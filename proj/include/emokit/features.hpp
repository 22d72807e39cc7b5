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

#ifndef EMOKIT_FEATURES_HPP_
#define EMOKIT_FEATURES_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "emokit/jsonl.hpp"

namespace emokit {

/// Layer-stacked frame features of one utterance, L x T x D, row-major.
class FeatureStack {
 public:
  FeatureStack(std::string utterance_id, std::size_t layers, std::size_t frames,
               std::size_t dims, std::vector<double> values);

  const std::string& utterance_id() const { return utterance_id_; }
  std::size_t layers() const { return layers_; }
  std::size_t frames() const { return frames_; }
  std::size_t dims() const { return dims_; }
  double at(std::size_t l, std::size_t t, std::size_t d) const {
    return values_[(l * frames_ + t) * dims_ + d];
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::string utterance_id_;
  std::size_t layers_, frames_, dims_;
  std::vector<double> values_;
};

// On disk: <stem>.json sidecar {"utterance_id", "L", "T", "D"} next to
// <stem>.f32 holding L*T*D little-endian float32 values.
void WriteFeatureStack(const FeatureStack& stack, const std::filesystem::path& sidecar);
FeatureStack ReadFeatureStack(const std::filesystem::path& sidecar);
/// Every *.json sidecar in `dir`, sorted by file name.
std::vector<FeatureStack> ReadFeatureDir(const std::filesystem::path& dir);

/// Deterministic generator shared by the trainer, tests and `emokit synth`.
/// Raw 64-bit engine output is mapped to doubles by hand so the stream does
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform();  // [0, 1)
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  std::size_t Below(std::size_t n);
  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct SyntheticSpec {
  std::size_t num_classes = 2;
  std::size_t layers = 3;
  std::size_t frames = 8;
  std::size_t dims = 16;
  std::size_t utterances = 200;
  double separation = 1.0;  // std-dev of class centroids per layer
  double noise = 0.5;       // per-frame noise std-dev
  std::uint64_t seed = 7;
};

struct SyntheticItem {
  FeatureStack stack;
  std::size_t label;
};

/// Gaussian clusters: every class has its own centroid in every layer and
/// frames scatter around it. Labels cycle through the classes.
std::vector<SyntheticItem> GenerateSynthetic(const SyntheticSpec& spec);

}  // namespace emokit

#endif  // EMOKIT_FEATURES_HPP_
