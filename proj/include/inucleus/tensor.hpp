/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INUCLEUS_TENSOR_HPP
#define INUCLEUS_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "inucleus/errors.hpp"

namespace inucleus {

using Shape = std::vector<std::size_t>;

/// Number of elements described by `shape` (1 for rank 0).
std::size_t shape_size(const Shape& shape);

/// Formats a shape as "[2, 5]".
std::string shape_string(const Shape& shape);

/**
 * Dense row-major n-dimensional array.
 *
 * Activations use a channels-first layout: (channels, length) for 1D maps and
 * (channels, height, width) for images. A default-constructed tensor is empty
 * and has no shape; every constructed tensor has all dimensions >= 1 and
 * product(shape) == size().
 */
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor holds real values");

 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data has " + std::to_string(data_.size()) +
                       " elements but shape " + shape_string(shape_) +
                       " needs " + std::to_string(shape_size(shape_)));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
      throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                       shape_string(shape_));
    }
    return shape_[axis];
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Row-major offset of a multi-index.
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw ShapeError("index rank " + std::to_string(index.size()) +
                       " does not match tensor rank " + std::to_string(shape_.size()));
    }
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= shape_[axis]) {
        throw ShapeError("index " + std::to_string(i) + " out of range on axis " +
                         std::to_string(axis) + " of " + shape_string(shape_));
      }
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const {
    return data_[offset(index)];
  }

  /// Same data, new shape; element count must match.
  Tensor reshape(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshape(std::move(shape));
  }

  Tensor reshape(Shape shape) && {
    check_shape(shape);
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                       shape_string(shape));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = std::move(data_);
    shape_.clear();
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> converted(data_.begin(), data_.end());
    if (shape_.empty()) return Tensor<U>();
    return Tensor<U>(shape_, std::move(converted));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor dimension must be >= 1 in " + shape_string(shape));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

/// Same shape and identical bytes (distinguishes -0 from +0, compares NaN payloads).
template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

namespace detail {
inline std::size_t inner_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t i = 1; i < s.size(); ++i) n *= s[i];
  return n;
}
}  // namespace detail

/**
 * Stacks channel-first tensors along axis 0. All inputs must share every
 * trailing dimension; input i occupies its channel block in order.
 */
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> inputs) {
  if (inputs.size() < 2) {
    throw ShapeError("concat_channels needs at least 2 inputs, got " +
                     std::to_string(inputs.size()));
  }
  const Shape& ref = inputs[0].shape();
  if (ref.size() < 2) throw ShapeError("concat_channels inputs must have rank >= 2");
  std::size_t channels = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape& s = inputs[i].shape();
    if (s.size() != ref.size() || !std::equal(s.begin() + 1, s.end(), ref.begin() + 1)) {
      throw ShapeError("concat_channels: length mismatch at input " + std::to_string(i) +
                       " (" + shape_string(s) + " vs " + shape_string(ref) + ")");
    }
    channels += s[0];
  }
  Shape out_shape = ref;
  out_shape[0] = channels;
  std::vector<T> data;
  data.reserve(shape_size(out_shape));
  for (const Tensor<T>& t : inputs) data.insert(data.end(), t.data(), t.data() + t.size());
  return Tensor<T>(std::move(out_shape), std::move(data));
}

template <typename T>
Tensor<T> concat_channels(std::initializer_list<Tensor<T>> inputs) {
  return concat_channels<T>(std::span<const Tensor<T>>(inputs.begin(), inputs.size()));
}

/// Channels [begin, begin + count) of a channel-first tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count) {
  if (t.rank() < 2) throw ShapeError("slice_channels input must have rank >= 2");
  if (count == 0 || begin + count > t.dim(0)) {
    throw ShapeError("channel slice [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     shape_string(t.shape()));
  }
  const std::size_t inner = detail::inner_size(t.shape());
  Shape s = t.shape();
  s[0] = count;
  return Tensor<T>(std::move(s), std::vector<T>(t.data() + begin * inner,
                                                t.data() + (begin + count) * inner));
}

/**
 * Views a (channels, length) map as a single-channel (height, width, 1) image
 * with height = channels and width = length; pixel (i, j) is element (i, j).
 */
template <typename T>
Tensor<T> reshape_to_image(const Tensor<T>& l) {
  if (l.rank() != 2) {
    throw ShapeError("reshape_to_image expects a rank-2 (channels, length) tensor, got " +
                     shape_string(l.shape()));
  }
  return l.reshape({l.dim(0), l.dim(1), 1});
}

/// Inverse of reshape_to_image.
template <typename T>
Tensor<T> image_to_channels(const Tensor<T>& img) {
  if (img.rank() != 3 || img.dim(2) != 1) {
    throw ShapeError("image_to_channels expects a (height, width, 1) tensor, got " +
                     shape_string(img.shape()));
  }
  return img.reshape({img.dim(0), img.dim(1)});
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& m) {
  if (m.rank() != 2) throw ShapeError("transpose2d expects rank 2, got " + shape_string(m.shape()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor<T> out({cols, rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = m[r * cols + c];
  return out;
}

}  // namespace inucleus

#endif  // INUCLEUS_TENSOR_HPP
