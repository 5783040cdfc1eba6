// Reductions, softmax and concatenation.

#include <algorithm>
#include <cmath>

#include "cosnet/ops.hpp"
#include "ops_common.hpp"

namespace cosnet {

namespace {

// Decompose the 4-extent layout around `axis` into outer * len * inner.
struct AxisView {
  int64_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape4& s, int axis) {
  if (axis < 0 || axis > 3) throw ValueError("axis out of range: " + std::to_string(axis));
  AxisView v;
  for (int i = 0; i < 4; ++i) {
    if (i < axis) v.outer *= s[i];
    else if (i == axis) v.len = s[i];
    else v.inner *= s[i];
  }
  return v;
}

}  // namespace

Tensor softmax(const Tensor& input, int axis) {
  const AxisView v = axis_view(input.shape(), axis);
  std::span<const double> x = input.values();
  std::vector<double> out(x.size());
  for (int64_t o = 0; o < v.outer; ++o) {
    for (int64_t in = 0; in < v.inner; ++in) {
      const int64_t base = o * v.len * v.inner + in;
      double mx = x[size_t(base)];
      for (int64_t l = 1; l < v.len; ++l) mx = std::max(mx, x[size_t(base + l * v.inner)]);
      double denom = 0.0;
      for (int64_t l = 0; l < v.len; ++l) {
        const double e = std::exp(x[size_t(base + l * v.inner)] - mx);
        out[size_t(base + l * v.inner)] = e;
        denom += e;
      }
      for (int64_t l = 0; l < v.len; ++l) out[size_t(base + l * v.inner)] /= denom;
    }
  }
  Tensor result = detail::make_result(input.shape(), std::move(out), "softmax");

  if (Tape* tape = Tape::common_tape({&input})) {
    auto yi = result.impl();
    tape->record("softmax", {&input}, result, [yi, v](const double* gout, GradSink& sink) {
      std::vector<double>& gin = sink.input_grad(0);
      const std::vector<double>& y = yi->values;
      for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t in = 0; in < v.inner; ++in) {
          const int64_t base = o * v.len * v.inner + in;
          double dot = 0.0;
          for (int64_t l = 0; l < v.len; ++l) {
            const size_t i = size_t(base + l * v.inner);
            dot += gout[i] * y[i];
          }
          for (int64_t l = 0; l < v.len; ++l) {
            const size_t i = size_t(base + l * v.inner);
            gin[i] += (gout[i] - dot) * y[i];
          }
        }
      }
    });
  }
  return result;
}

Tensor channel_mean(const Tensor& input) {
  const Shape4& s = input.shape();
  const int64_t plane = int64_t(s.h) * s.w;
  std::span<const double> x = input.values();
  std::vector<double> out(size_t(int64_t(s.n) * plane), 0.0);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.data() + (int64_t(n) * s.c + c) * plane;
      double* dst = out.data() + int64_t(n) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] += src[i];
    }
  }
  const double inv_c = 1.0 / s.c;
  for (double& o : out) o *= inv_c;
  Tensor result = detail::make_result(Shape4(s.n, 1, s.h, s.w), std::move(out), "channel_mean");

  if (Tape* tape = Tape::common_tape({&input})) {
    const int n_ = s.n, c_ = s.c;
    tape->record("channel_mean", {&input}, result,
                 [n_, c_, plane, inv_c](const double* gout, GradSink& sink) {
                   std::vector<double>& gin = sink.input_grad(0);
                   for (int n = 0; n < n_; ++n) {
                     for (int c = 0; c < c_; ++c) {
                       double* dst = gin.data() + (int64_t(n) * c_ + c) * plane;
                       const double* g = gout + int64_t(n) * plane;
                       for (int64_t i = 0; i < plane; ++i) dst[i] += g[i] * inv_c;
                     }
                   }
                 });
  }
  return result;
}

Tensor spatial_mean(const Tensor& input) {
  const Shape4& s = input.shape();
  const int64_t plane = int64_t(s.h) * s.w;
  const int64_t nc = int64_t(s.n) * s.c;
  std::span<const double> x = input.values();
  std::vector<double> out(size_t(nc), 0.0);
  const double inv = 1.0 / double(plane);
  for (int64_t p = 0; p < nc; ++p) {
    const double* src = x.data() + p * plane;
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += src[i];
    out[size_t(p)] = acc * inv;
  }
  Tensor result = detail::make_result(Shape4(s.n, s.c, 1, 1), std::move(out), "spatial_mean");

  if (Tape* tape = Tape::common_tape({&input})) {
    tape->record("spatial_mean", {&input}, result,
                 [nc, plane, inv](const double* gout, GradSink& sink) {
                   std::vector<double>& gin = sink.input_grad(0);
                   for (int64_t p = 0; p < nc; ++p) {
                     double* dst = gin.data() + p * plane;
                     const double gv = gout[p] * inv;
                     for (int64_t i = 0; i < plane; ++i) dst[i] += gv;
                   }
                 });
  }
  return result;
}

Tensor sum(const Tensor& input) {
  std::span<const double> x = input.values();
  double acc = 0.0;
  for (double v : x) acc += v;
  Tensor result = detail::make_result(Shape4(1, 1, 1, 1), {acc}, "sum");
  if (Tape* tape = Tape::common_tape({&input})) {
    const int64_t n = input.numel();
    tape->record("sum", {&input}, result, [n](const double* gout, GradSink& sink) {
      std::vector<double>& gin = sink.input_grad(0);
      for (int64_t i = 0; i < n; ++i) gin[size_t(i)] += gout[0];
    });
  }
  return result;
}

Tensor concat(std::span<const Tensor> inputs, int axis) {
  if (inputs.empty()) throw ValueError("concat of zero tensors");
  if (axis < 0 || axis > 3) throw ValueError("axis out of range: " + std::to_string(axis));
  const Shape4& first = inputs[0].shape();
  int total = 0;
  for (const Tensor& t : inputs) {
    const Shape4& s = t.shape();
    for (int i = 0; i < 4; ++i) {
      if (i != axis && s[i] != first[i]) {
        throw ShapeError("concat inputs disagree off-axis: " + first.str() + " vs " + s.str());
      }
    }
    total += s[axis];
  }
  Shape4 out_shape = first;
  (axis == 0 ? out_shape.n : axis == 1 ? out_shape.c : axis == 2 ? out_shape.h : out_shape.w) =
      total;

  const AxisView ov = axis_view(out_shape, axis);
  std::vector<double> out(size_t(out_shape.numel()));
  std::vector<int64_t> extents;  // per-input axis extent
  int64_t offset = 0;
  for (const Tensor& t : inputs) {
    const int64_t len = t.shape()[axis];
    std::span<const double> x = t.values();
    for (int64_t o = 0; o < ov.outer; ++o) {
      const double* src = x.data() + o * len * ov.inner;
      double* dst = out.data() + (o * ov.len + offset) * ov.inner;
      std::copy(src, src + len * ov.inner, dst);
    }
    extents.push_back(len);
    offset += len;
  }
  Tensor result = detail::make_result(out_shape, std::move(out), "concat");

  Tape* tape = nullptr;
  for (const Tensor& t : inputs) {
    Tape* other = Tape::common_tape({&t});
    if (other && tape && other != tape) {
      throw ValueError("operation mixes tensors from two different tapes");
    }
    if (other) tape = other;
  }
  if (tape) {
    std::vector<const Tensor*> list;
    for (const Tensor& t : inputs) list.push_back(&t);
    auto ext = std::make_shared<std::vector<int64_t>>(extents);
    tape->record_many("concat", list, result, [ext, ov](const double* gout, GradSink& sink) {
      int64_t offset = 0;
      for (size_t k = 0; k < ext->size(); ++k) {
        const int64_t len = (*ext)[k];
        std::vector<double>& gin = sink.input_grad(k);
        for (int64_t o = 0; o < ov.outer; ++o) {
          const double* g = gout + (o * ov.len + offset) * ov.inner;
          double* dst = gin.data() + o * len * ov.inner;
          for (int64_t i = 0; i < len * ov.inner; ++i) dst[i] += g[i];
        }
        offset += len;
      }
    });
  }
  return result;
}

}  // namespace cosnet
