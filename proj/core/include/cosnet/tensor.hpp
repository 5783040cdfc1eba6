#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cosnet {

class Tape;

// Dense shape, always normalized to rank 4 and interpreted as N,C,H,W.
// Lower-rank shapes are leading-1-padded: a length-K vector is {1,1,1,K},
// a scalar {1,1,1,1}.
struct Shape4 {
  int n = 1, c = 1, h = 1, w = 1;

  Shape4() = default;
  Shape4(int n_, int c_, int h_, int w_);

  // Builds a shape from 1..4 extents, padding leading dimensions with 1.
  static Shape4 of(std::initializer_list<int> extents);

  int64_t numel() const { return int64_t(n) * c * h * w; }
  int operator[](int axis) const;
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

namespace detail {

struct TensorImpl {
  Shape4 shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass populates it
  Tape* tape = nullptr;      // non-owning; cleared when the tape is destroyed
  int node = -1;
};

}  // namespace detail

// Shared-handle dense tensor of 64-bit reals. Copies alias the same storage;
// engine operations never mutate their inputs, so aliasing is safe. The two
// sanctioned mutation paths are values_mut() (optimizer updates, checkpoint
// restore) and the gradient slot written by Tape::backward().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape4& shape);
  static Tensor full(const Shape4& shape, double value);
  static Tensor from_values(const Shape4& shape, std::vector<double> values);
  static Tensor scalar(double value);
  // Length-n vector, shape {1,1,1,n}.
  static Tensor vector(std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }

  const Shape4& shape() const;
  int64_t numel() const { return shape().numel(); }

  std::span<const double> values() const;
  // Direct mutable access to the storage. Caller must not hold a live tape
  // over the tensor while rewriting it.
  std::span<double> values_mut();

  double at(int n, int c, int h, int w) const;
  // Value of a single-element tensor.
  double item() const;

  // Deep copy; the clone is detached from any tape and carries no grad.
  Tensor clone() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void clear_grad();

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
  friend class Tape;
};

// Integer label raster [N,H,W], the ground-truth/prediction side of the
// segmentation pipeline. Kept separate from Tensor since labels are not
// differentiable quantities.
struct LabelMap {
  int n = 0, h = 0, w = 0;
  std::vector<int32_t> v;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_, int32_t fill = 0);

  int64_t numel() const { return int64_t(n) * h * w; }
  int32_t& at(int ni, int hi, int wi) { return v[(int64_t(ni) * h + hi) * w + wi]; }
  int32_t at(int ni, int hi, int wi) const { return v[(int64_t(ni) * h + hi) * w + wi]; }
  bool operator==(const LabelMap&) const = default;
};

}  // namespace cosnet
