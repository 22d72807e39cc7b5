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

#include "emokit/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "emokit/error.hpp"

namespace emokit {

namespace fs = std::filesystem;

FeatureStack::FeatureStack(std::string utterance_id, std::size_t layers, std::size_t frames,
                           std::size_t dims, std::vector<double> values)
    : utterance_id_(std::move(utterance_id)),
      layers_(layers),
      frames_(frames),
      dims_(dims),
      values_(std::move(values)) {
  if (layers_ == 0 || frames_ == 0 || dims_ == 0) {
    throw Error(ErrorCode::kDimension, "feature stack \"" + utterance_id_ + "\" has an empty axis");
  }
  if (values_.size() != layers_ * frames_ * dims_) {
    throw Error(ErrorCode::kDimension, "feature stack \"" + utterance_id_ +
                                           "\" holds " + std::to_string(values_.size()) +
                                           " values, expected L*T*D");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature stack \"" + utterance_id_ + "\" has a non-finite value");
    }
  }
}

namespace {

std::uint32_t ToLittleEndian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
  }
  return v;
}

fs::path DataPath(const fs::path& sidecar) {
  fs::path p = sidecar;
  return p.replace_extension(".f32");
}

}  // namespace

void WriteFeatureStack(const FeatureStack& stack, const fs::path& sidecar) {
  if (sidecar.has_parent_path()) fs::create_directories(sidecar.parent_path());
  const Json meta = {{"utterance_id", stack.utterance_id()},
                     {"L", stack.layers()},
                     {"T", stack.frames()},
                     {"D", stack.dims()}};
  WriteTextFile(sidecar, meta.dump() + "\n");
  std::string bytes;
  bytes.resize(stack.values().size() * 4);
  for (std::size_t i = 0; i < stack.values().size(); ++i) {
    const std::uint32_t word =
        ToLittleEndian(std::bit_cast<std::uint32_t>(static_cast<float>(stack.values()[i])));
    std::memcpy(bytes.data() + 4 * i, &word, 4);
  }
  WriteTextFile(DataPath(sidecar), bytes);
}

FeatureStack ReadFeatureStack(const fs::path& sidecar) {
  try {
    const Json meta = ReadJsonFile(sidecar);
    const std::string id = RequireString(meta, "utterance_id");
    const auto layers = RequireField(meta, "L").get<std::size_t>();
    const auto frames = RequireField(meta, "T").get<std::size_t>();
    const auto dims = RequireField(meta, "D").get<std::size_t>();
    const std::string bytes = ReadTextFile(DataPath(sidecar));
    const std::size_t count = layers * frames * dims;
    if (bytes.size() != count * 4) {
      throw Error(ErrorCode::kDimension, "feature file for \"" + id + "\" has " +
                                             std::to_string(bytes.size()) + " bytes, expected " +
                                             std::to_string(count * 4));
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t word;
      std::memcpy(&word, bytes.data() + 4 * i, 4);
      values[i] = std::bit_cast<float>(ToLittleEndian(word));
    }
    return FeatureStack(id, layers, frames, dims, std::move(values));
  } catch (Error& e) {
    if (!e.file()) e.WithLocation(sidecar.string());
    throw;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, e.what()).WithLocation(sidecar.string());
  }
}

std::vector<FeatureStack> ReadFeatureDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      sidecars.push_back(entry.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<FeatureStack> out;
  out.reserve(sidecars.size());
  for (const auto& p : sidecars) out.push_back(ReadFeatureStack(p));
  return out;
}

double Rng::Uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::Below(std::size_t n) {
  return static_cast<std::size_t>(Uniform() * static_cast<double>(n));
}

std::vector<SyntheticItem> GenerateSynthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 classes");
  Rng rng(spec.seed);
  const std::size_t width = spec.layers * spec.dims;
  std::vector<std::vector<double>> centroids(spec.num_classes, std::vector<double>(width));
  for (auto& c : centroids) {
    for (auto& v : c) v = spec.separation * rng.Normal();
  }
  std::vector<SyntheticItem> items;
  items.reserve(spec.utterances);
  for (std::size_t i = 0; i < spec.utterances; ++i) {
    const std::size_t label = i % spec.num_classes;
    std::vector<double> values(spec.layers * spec.frames * spec.dims);
    for (std::size_t l = 0; l < spec.layers; ++l) {
      for (std::size_t t = 0; t < spec.frames; ++t) {
        for (std::size_t d = 0; d < spec.dims; ++d) {
          values[(l * spec.frames + t) * spec.dims + d] =
              centroids[label][l * spec.dims + d] + spec.noise * rng.Normal();
        }
      }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "syn%05zu", i);
    items.push_back({FeatureStack(id, spec.layers, spec.frames, spec.dims, std::move(values)), label});
  }
  return items;
}

}  // namespace emokit
