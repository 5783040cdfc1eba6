// Elementwise arithmetic with the two sanctioned broadcast patterns, scalar
// scaling and the gaussian-error-linear activation.

#include <cmath>

#include "cosnet/ops.hpp"
#include "ops_common.hpp"

namespace cosnet {

namespace {

enum class Bcast {
  kNone,     // identical shapes
  kChannel,  // [N,1,H,W] expanded over C
  kPixel,    // [N,C,1,1] expanded over H*W
};

struct EwPlan {
  Shape4 out;
  Bcast kind = Bcast::kNone;
  bool swap = false;  // true when a is the broadcast side
};

EwPlan plan_elementwise(const Shape4& a, const Shape4& b, const char* op) {
  if (a == b) return {a, Bcast::kNone, false};
  if (b.n == a.n && b.c == 1 && b.h == a.h && b.w == a.w) return {a, Bcast::kChannel, false};
  if (b.n == a.n && b.c == a.c && b.h == 1 && b.w == 1) return {a, Bcast::kPixel, false};
  if (a.n == b.n && a.c == 1 && a.h == b.h && a.w == b.w) return {b, Bcast::kChannel, true};
  if (a.n == b.n && a.c == b.c && a.h == 1 && a.w == 1) return {b, Bcast::kPixel, true};
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str() +
                   " (only [N,1,H,W] and [N,C,1,1] broadcasts are supported)");
}

// Index of the broadcast-side element feeding full-tensor position i.
struct BcastIndex {
  Bcast kind;
  int c;
  int64_t plane;  // H*W

  int64_t operator()(int64_t i) const {
    switch (kind) {
      case Bcast::kNone: return i;
      case Bcast::kChannel: {
        const int64_t n = i / (plane * c);
        return n * plane + i % plane;
      }
      case Bcast::kPixel: return i / plane;
    }
    return i;
  }
};

template <typename Fwd>
std::vector<double> ew_forward(const Tensor& full, const Tensor& small, const BcastIndex& idx,
                               Fwd f) {
  std::span<const double> av = full.values();
  std::span<const double> bv = small.values();
  std::vector<double> out(av.size());
  for (int64_t i = 0; i < int64_t(av.size()); ++i) out[size_t(i)] = f(av[size_t(i)], bv[size_t(idx(i))]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const EwPlan plan = plan_elementwise(a.shape(), b.shape(), "add");
  const Tensor& full = plan.swap ? b : a;
  const Tensor& small = plan.swap ? a : b;
  const BcastIndex idx{plan.kind, full.shape().c, int64_t(full.shape().h) * full.shape().w};
  Tensor result = detail::make_result(
      plan.out, ew_forward(full, small, idx, [](double x, double y) { return x + y; }), "add");
  if (Tape* tape = Tape::common_tape({&a, &b})) {
    const int64_t n_out = plan.out.numel();
    const bool swap = plan.swap;
    tape->record("add", {&a, &b}, result, [idx, n_out, swap](const double* gout, GradSink& sink) {
      std::vector<double>& gfull = sink.input_grad(swap ? 1 : 0);
      std::vector<double>& gsmall = sink.input_grad(swap ? 0 : 1);
      for (int64_t i = 0; i < n_out; ++i) {
        gfull[size_t(i)] += gout[i];
        gsmall[size_t(idx(i))] += gout[i];
      }
    });
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const EwPlan plan = plan_elementwise(a.shape(), b.shape(), "sub");
  const Tensor& full = plan.swap ? b : a;
  const Tensor& small = plan.swap ? a : b;
  const BcastIndex idx{plan.kind, full.shape().c, int64_t(full.shape().h) * full.shape().w};
  // a - b regardless of which side is broadcast.
  double (*fwd)(double, double) =
      plan.swap ? +[](double fullv, double smallv) { return smallv - fullv; }
                : +[](double fullv, double smallv) { return fullv - smallv; };
  Tensor result = detail::make_result(plan.out, ew_forward(full, small, idx, fwd), "sub");
  if (Tape* tape = Tape::common_tape({&a, &b})) {
    const int64_t n_out = plan.out.numel();
    const bool swap = plan.swap;
    tape->record("sub", {&a, &b}, result, [idx, n_out, swap](const double* gout, GradSink& sink) {
      std::vector<double>& ga = sink.input_grad(0);
      std::vector<double>& gb = sink.input_grad(1);
      if (!swap) {
        for (int64_t i = 0; i < n_out; ++i) {
          ga[size_t(i)] += gout[i];
          gb[size_t(idx(i))] -= gout[i];
        }
      } else {
        for (int64_t i = 0; i < n_out; ++i) {
          ga[size_t(idx(i))] += gout[i];
          gb[size_t(i)] -= gout[i];
        }
      }
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const EwPlan plan = plan_elementwise(a.shape(), b.shape(), "mul");
  const Tensor& full = plan.swap ? b : a;
  const Tensor& small = plan.swap ? a : b;
  const BcastIndex idx{plan.kind, full.shape().c, int64_t(full.shape().h) * full.shape().w};
  Tensor result = detail::make_result(
      plan.out, ew_forward(full, small, idx, [](double x, double y) { return x * y; }), "mul");
  if (Tape* tape = Tape::common_tape({&a, &b})) {
    auto fi = full.impl();
    auto si = small.impl();
    const int64_t n_out = plan.out.numel();
    const bool swap = plan.swap;
    tape->record("mul", {&a, &b}, result,
                 [idx, n_out, swap, fi, si](const double* gout, GradSink& sink) {
                   std::vector<double>& gfull = sink.input_grad(swap ? 1 : 0);
                   std::vector<double>& gsmall = sink.input_grad(swap ? 0 : 1);
                   for (int64_t i = 0; i < n_out; ++i) {
                     const int64_t j = idx(i);
                     gfull[size_t(i)] += gout[i] * si->values[size_t(j)];
                     gsmall[size_t(j)] += gout[i] * fi->values[size_t(i)];
                   }
                 });
  }
  return result;
}

Tensor scale(const Tensor& input, double k) {
  if (!std::isfinite(k)) throw NumericError("scale factor must be finite");
  std::span<const double> x = input.values();
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * k;
  Tensor result = detail::make_result(input.shape(), std::move(out), "scale");
  if (Tape* tape = Tape::common_tape({&input})) {
    const int64_t n = input.numel();
    tape->record("scale", {&input}, result, [k, n](const double* gout, GradSink& sink) {
      std::vector<double>& gin = sink.input_grad(0);
      for (int64_t i = 0; i < n; ++i) gin[size_t(i)] += k * gout[i];
    });
  }
  return result;
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

Tensor gelu(const Tensor& input) {
  std::span<const double> x = input.values();
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * gauss_cdf(x[i]);
  Tensor result = detail::make_result(input.shape(), std::move(out), "gelu");
  if (Tape* tape = Tape::common_tape({&input})) {
    auto xi = input.impl();
    const int64_t n = input.numel();
    tape->record("gelu", {&input}, result, [xi, n](const double* gout, GradSink& sink) {
      std::vector<double>& gin = sink.input_grad(0);
      for (int64_t i = 0; i < n; ++i) {
        const double v = xi->values[size_t(i)];
        gin[size_t(i)] += gout[i] * (gauss_cdf(v) + v * gauss_pdf(v));
      }
    });
  }
  return result;
}

}  // namespace cosnet
