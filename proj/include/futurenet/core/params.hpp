// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "futurenet/core/error.hpp"
#include "futurenet/core/graph.hpp"
#include "futurenet/core/rng.hpp"
#include "futurenet/core/tensor.hpp"

namespace futurenet {

enum class InitKind { kFanInUniform, kZeros, kOnes };

class BoundParams;

/// Named trainable tensors. Master copies and gradient accumulators live in
/// double regardless of the compute precision; forward passes bind casted
/// leaves into a Graph. Initialization draws from a stream derived from the
/// tensor name, so values do not depend on registration order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  void add(const std::string & name, Shape shape, InitKind kind, std::int64_t fan_in = -1) {
    if (index_.count(name) != 0) throw ConfigError("duplicate parameter '" + name + "'");
    Tensor<double> t = Tensor<double>::zeros(shape);
    switch (kind) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        t.fill(1.0);
        break;
      case InitKind::kFanInUniform: {
        std::int64_t fi = fan_in;
        if (fi < 0) fi = shape.size() >= 2 ? shape[shape.size() - 1] : shape[0];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fi));
        RandomStream rng(RandomStream::mix(seed_, name_stream(name)));
        for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-bound, bound);
        break;
      }
    }
    index_.emplace(name, names_.size());
    names_.push_back(name);
    grads_.push_back(Tensor<double>::zeros(t.shape()));
    tensors_.push_back(std::move(t));
  }

  bool has(const std::string & name) const { return index_.count(name) != 0; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string> & names() const { return names_; }

  Tensor<double> & tensor(const std::string & name) { return tensors_[find(name)]; }
  const Tensor<double> & tensor(const std::string & name) const { return tensors_[find(name)]; }
  Tensor<double> & tensor(std::size_t i) { return tensors_[i]; }
  const Tensor<double> & tensor(std::size_t i) const { return tensors_[i]; }
  Tensor<double> & grad(std::size_t i) { return grads_[i]; }
  const Tensor<double> & grad(std::size_t i) const { return grads_[i]; }

  std::int64_t numel() const {
    std::int64_t n = 0;
    for (const auto & t : tensors_) n += t.numel();
    return n;
  }

  void zero_grads() {
    for (auto & g : grads_) g.fill(0.0);
  }

  template <typename T>
  BoundParams bind(Graph<T> & g) const;

  /// Add scale * (leaf gradients from a finished backward pass) into the
  /// double accumulators.
  template <typename T>
  void accumulate_grads(const Graph<T> & g, const BoundParams & bound, double scale = 1.0);

  static std::uint64_t name_stream(const std::string & name) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (const char c : name) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  friend class BoundParams;

  std::size_t find(const std::string & name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::uint64_t seed_;
  std::vector<std::string> names_;
  std::vector<Tensor<double>> tensors_;
  std::vector<Tensor<double>> grads_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Graph handles for every parameter of one forward pass.
class BoundParams {
 public:
  BoundParams(const ParamStore * store, std::vector<Var> vars)
      : store_(store), vars_(std::move(vars)) {}

  Var operator()(const std::string & name) const { return vars_[store_->find(name)]; }
  Var at(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }

 private:
  const ParamStore * store_;
  std::vector<Var> vars_;
};

template <typename T>
BoundParams ParamStore::bind(Graph<T> & g) const {
  std::vector<Var> vars;
  vars.reserve(tensors_.size());
  for (const auto & t : tensors_) vars.push_back(g.leaf(t.template cast<T>()));
  return BoundParams(this, std::move(vars));
}

template <typename T>
void ParamStore::accumulate_grads(const Graph<T> & g, const BoundParams & bound, double scale) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const Tensor<T> & src = g.grad(bound.at(i));
    Tensor<double> & dst = grads_[i];
    for (std::int64_t j = 0; j < dst.numel(); ++j) {
      dst.data()[j] += scale * static_cast<double>(src.data()[j]);
    }
  }
}

}  // namespace futurenet
