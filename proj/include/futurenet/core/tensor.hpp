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

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <numeric>
#include <vector>

namespace futurenet {

/// Allocator with a fixed 64-byte alignment. Keeping every buffer identically
/// aligned keeps vectorized kernels on one code path, which in turn keeps
/// floating-point summation order independent of where the heap placed a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U> &) noexcept {}

  T * allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void * p = std::aligned_alloc(kAlignment, round_up(n * sizeof(T)));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T *>(p);
  }
  void deallocate(T * p, std::size_t) noexcept { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAllocator<U> &) const noexcept {
    return true;
  }

 private:
  static std::size_t round_up(std::size_t bytes) {
    return (bytes + kAlignment - 1) / kAlignment * kAlignment;
  }
};

using Shape = std::vector<std::int64_t>;

/// Dense row-major tensor. Rank is dynamic but in practice 1 to 3.
template <typename T>
class Tensor {
 public:
  using Shape = futurenet::Shape;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(count(shape_), T(0)) {}
  Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(count(shape_), fill) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }

  const Shape & shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T * data() { return data_.data(); }
  const T * data() const { return data_.data(); }

  T & operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T & operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T & at(std::int64_t i, std::int64_t j) {
    assert(rank() == 2);
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  const T & at(std::int64_t i, std::int64_t j) const {
    assert(rank() == 2);
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  T & at(std::int64_t i, std::int64_t j, std::int64_t k) {
    assert(rank() == 3);
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  const T & at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    assert(rank() == 3);
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  T & at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) {
    assert(rank() == 4);
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  const T & at(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
    assert(rank() == 4);
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor & other) const { return shape_ == other.shape_; }

  /// Element-for-element exact equality (used by bitwise determinism checks).
  bool operator==(const Tensor & other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  static std::size_t count(const Shape & s) {
    std::size_t n = 1;
    for (auto d : s) {
      assert(d >= 0);
      n *= static_cast<std::size_t>(d);
    }
    return s.empty() ? 0 : n;
  }

  Shape shape_;
  std::vector<T, AlignedAllocator<T>> data_;
};

}  // namespace futurenet
