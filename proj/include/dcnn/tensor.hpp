#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcnn {

class ShapeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an op produces NaN/Inf while finite checks are enabled.
class NonFiniteError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape);

/// Dense row-major n-dimensional array. The scalar type is float for
/// training and double for the verification harnesses.
template <class T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}
  TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_str(shape_));
    }
  }

  static TensorT full(Shape shape, T value) {
    TensorT t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
  }
  static TensorT scalar(T value) { return TensorT({1}, {value}); }

  bool empty() const { return data_.empty(); }
  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // NCHW accessor for 4-d tensors.
  T& at4(int n, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
  }
  const T& at4(int n, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
  }
  T& at2(int r, int c) { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }
  const T& at2(int r, int c) const { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }

  void fill(T value) {
    for (auto& v : data_) v = value;
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  template <class U>
  TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return TensorT<U>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

/// Global NaN/Inf post-op checking. Defaults to on in debug builds.
bool finite_checks_enabled();
void set_finite_checks(bool enabled);

template <class T>
void check_finite(const TensorT<T>& t, const char* op) {
  if (!finite_checks_enabled()) return;
  if (!t.all_finite()) throw NonFiniteError(std::string("non-finite value produced by ") + op);
}

}  // namespace dcnn
