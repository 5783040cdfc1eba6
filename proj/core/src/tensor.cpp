#include "cosnet/tensor.hpp"

#include <cmath>

#include "cosnet/error.hpp"

namespace cosnet {

Shape4::Shape4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
  if (n < 1 || c < 1 || h < 1 || w < 1) {
    throw ShapeError("shape extents must be positive, got " + str());
  }
}

Shape4 Shape4::of(std::initializer_list<int> extents) {
  if (extents.size() < 1 || extents.size() > 4) {
    throw ShapeError("rank must be between 1 and 4, got rank " + std::to_string(extents.size()));
  }
  int e[4] = {1, 1, 1, 1};
  int i = 4 - int(extents.size());
  for (int x : extents) e[i++] = x;
  return Shape4(e[0], e[1], e[2], e[3]);
}

int Shape4::operator[](int axis) const {
  switch (axis) {
    case 0: return n;
    case 1: return c;
    case 2: return h;
    case 3: return w;
    default: throw ValueError("axis out of range: " + std::to_string(axis));
  }
}

std::string Shape4::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + "]";
}

namespace {

std::shared_ptr<detail::TensorImpl> make_impl(const Shape4& shape, std::vector<double> values) {
  if (int64_t(values.size()) != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape.str());
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->values = std::move(values);
  return impl;
}

}  // namespace

Tensor Tensor::zeros(const Shape4& shape) {
  return Tensor(make_impl(shape, std::vector<double>(size_t(shape.numel()), 0.0)));
}

Tensor Tensor::full(const Shape4& shape, double value) {
  if (!std::isfinite(value)) throw NumericError("Tensor::full with non-finite value");
  return Tensor(make_impl(shape, std::vector<double>(size_t(shape.numel()), value)));
}

Tensor Tensor::from_values(const Shape4& shape, std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("Tensor::from_values with non-finite value");
  }
  return Tensor(make_impl(shape, std::move(values)));
}

Tensor Tensor::scalar(double value) { return full(Shape4(1, 1, 1, 1), value); }

Tensor Tensor::vector(std::vector<double> values) {
  int n = int(values.size());
  return from_values(Shape4(1, 1, 1, n), std::move(values));
}

const Shape4& Tensor::shape() const {
  if (!impl_) throw ValueError("use of a default-constructed Tensor");
  return impl_->shape;
}

std::span<const double> Tensor::values() const {
  if (!impl_) throw ValueError("use of a default-constructed Tensor");
  return impl_->values;
}

std::span<double> Tensor::values_mut() {
  if (!impl_) throw ValueError("use of a default-constructed Tensor");
  return impl_->values;
}

double Tensor::at(int n, int c, int h, int w) const {
  const Shape4& s = shape();
  if (n < 0 || n >= s.n || c < 0 || c >= s.c || h < 0 || h >= s.h || w < 0 || w >= s.w) {
    throw ValueError("index out of range for shape " + s.str());
  }
  return impl_->values[((int64_t(n) * s.c + c) * s.h + h) * s.w + w];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
  return impl_->values[0];
}

Tensor Tensor::clone() const {
  return Tensor(make_impl(shape(), impl_->values));
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!impl_) throw ValueError("use of a default-constructed Tensor");
  return impl_->grad;
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.clear();
}

LabelMap::LabelMap(int n_, int h_, int w_, int32_t fill) : n(n_), h(h_), w(w_) {
  if (n < 1 || h < 1 || w < 1) throw ShapeError("LabelMap extents must be positive");
  v.assign(size_t(numel()), fill);
}

}  // namespace cosnet
