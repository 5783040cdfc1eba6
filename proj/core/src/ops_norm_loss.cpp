// Group normalization and the cross-entropy objective.

#include <cmath>

#include "cosnet/ops.hpp"
#include "ops_common.hpp"

namespace cosnet {

Tensor group_norm(const Tensor& input, int num_groups, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const Shape4& s = input.shape();
  if (num_groups < 1 || s.c % num_groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(num_groups) + " groups do not divide C=" +
                     std::to_string(s.c));
  }
  if (gamma.numel() != s.c || beta.numel() != s.c) {
    throw ShapeError("group_norm: affine parameters must have length C=" + std::to_string(s.c));
  }
  if (eps <= 0) throw ValueError("group_norm: eps must be positive");

  const int cg = s.c / num_groups;                  // channels per group
  const int64_t plane = int64_t(s.h) * s.w;
  const int64_t group_elems = int64_t(cg) * plane;  // elements per (n, group)

  std::span<const double> x = input.values();
  std::span<const double> gm = gamma.values();
  std::span<const double> bt = beta.values();
  std::vector<double> out(x.size());
  // Saved statistics per (n, group) for the backward pass.
  auto mean = std::make_shared<std::vector<double>>(size_t(s.n) * num_groups);
  auto inv_std = std::make_shared<std::vector<double>>(size_t(s.n) * num_groups);

  for (int n = 0; n < s.n; ++n) {
    for (int g = 0; g < num_groups; ++g) {
      const int64_t base = (int64_t(n) * s.c + int64_t(g) * cg) * plane;
      double mu = 0.0;
      for (int64_t i = 0; i < group_elems; ++i) mu += x[size_t(base + i)];
      mu /= double(group_elems);
      double var = 0.0;
      for (int64_t i = 0; i < group_elems; ++i) {
        const double d = x[size_t(base + i)] - mu;
        var += d * d;
      }
      var /= double(group_elems);
      const double inv = 1.0 / std::sqrt(var + eps);
      (*mean)[size_t(n) * num_groups + g] = mu;
      (*inv_std)[size_t(n) * num_groups + g] = inv;
      for (int c = 0; c < cg; ++c) {
        const int ch = g * cg + c;
        const int64_t cb = base + int64_t(c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          out[size_t(cb + i)] = gm[size_t(ch)] * ((x[size_t(cb + i)] - mu) * inv) + bt[size_t(ch)];
        }
      }
    }
  }
  Tensor result = detail::make_result(s, std::move(out), "group_norm");

  if (Tape* tape = Tape::common_tape({&input, &gamma, &beta})) {
    auto xi = input.impl();
    auto gi = gamma.impl();
    tape->record(
        "group_norm", {&input, &gamma, &beta}, result,
        [xi, gi, mean, inv_std, num_groups, cg, plane, group_elems, s](const double* gout,
                                                                       GradSink& sink) {
          std::vector<double>& gin = sink.input_grad(0);
          std::vector<double>& ggamma = sink.input_grad(1);
          std::vector<double>& gbeta = sink.input_grad(2);
          const std::vector<double>& x = xi->values;
          const std::vector<double>& gm = gi->values;
          for (int n = 0; n < s.n; ++n) {
            for (int g = 0; g < num_groups; ++g) {
              const int64_t base = (int64_t(n) * s.c + int64_t(g) * cg) * plane;
              const double mu = (*mean)[size_t(n) * num_groups + g];
              const double inv = (*inv_std)[size_t(n) * num_groups + g];
              // Two reductions over the group, then the elementwise formula
              //   dx = inv * (gh - mean(gh) - xhat * mean(gh*xhat))
              // with gh = gout * gamma.
              double sum_gh = 0.0, sum_gh_xhat = 0.0;
              for (int c = 0; c < cg; ++c) {
                const int ch = g * cg + c;
                const int64_t cb = base + int64_t(c) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                  const double xhat = (x[size_t(cb + i)] - mu) * inv;
                  const double gh = gout[cb + i] * gm[size_t(ch)];
                  sum_gh += gh;
                  sum_gh_xhat += gh * xhat;
                  ggamma[size_t(ch)] += gout[cb + i] * xhat;
                  gbeta[size_t(ch)] += gout[cb + i];
                }
              }
              const double mean_gh = sum_gh / double(group_elems);
              const double mean_gh_xhat = sum_gh_xhat / double(group_elems);
              for (int c = 0; c < cg; ++c) {
                const int ch = g * cg + c;
                const int64_t cb = base + int64_t(c) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                  const double xhat = (x[size_t(cb + i)] - mu) * inv;
                  const double gh = gout[cb + i] * gm[size_t(ch)];
                  gin[size_t(cb + i)] += inv * (gh - mean_gh - xhat * mean_gh_xhat);
                }
              }
            }
          }
        });
  }
  return result;
}

Tensor cross_entropy(const Tensor& logits, const LabelMap& labels, int ignore_index) {
  const Shape4& s = logits.shape();
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w) {
    throw ShapeError("cross_entropy: label map extents do not match logits " + s.str());
  }
  const int k = s.c;
  const int64_t plane = int64_t(s.h) * s.w;
  std::span<const double> x = logits.values();

  double loss = 0.0;
  int64_t count = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int64_t i = 0; i < plane; ++i) {
      const int32_t label = labels.v[size_t(int64_t(n) * plane + i)];
      if (label == ignore_index) continue;
      if (label < 0 || label >= k) {
        throw ValueError("cross_entropy: label " + std::to_string(label) + " outside [0," +
                         std::to_string(k) + ")");
      }
      const int64_t base = int64_t(n) * k * plane + i;
      double mx = x[size_t(base)];
      for (int c = 1; c < k; ++c) mx = std::max(mx, x[size_t(base + c * plane)]);
      double denom = 0.0;
      for (int c = 0; c < k; ++c) denom += std::exp(x[size_t(base + c * plane)] - mx);
      loss += (std::log(denom) + mx) - x[size_t(base + int64_t(label) * plane)];
      ++count;
    }
  }
  loss = count > 0 ? loss / double(count) : 0.0;
  Tensor result = detail::make_result(Shape4(1, 1, 1, 1), {loss}, "cross_entropy");

  if (Tape* tape = Tape::common_tape({&logits})) {
    auto xi = logits.impl();
    auto lbl = std::make_shared<LabelMap>(labels);
    tape->record("cross_entropy", {&logits}, result,
                 [xi, lbl, ignore_index, k, plane, count, s](const double* gout, GradSink& sink) {
                   if (count == 0) return;  // all ignored: zero gradient
                   std::vector<double>& gin = sink.input_grad(0);
                   const std::vector<double>& x = xi->values;
                   const double gscale = gout[0] / double(count);
                   for (int n = 0; n < s.n; ++n) {
                     for (int64_t i = 0; i < plane; ++i) {
                       const int32_t label = lbl->v[size_t(int64_t(n) * plane + i)];
                       if (label == ignore_index) continue;
                       const int64_t base = int64_t(n) * k * plane + i;
                       double mx = x[size_t(base)];
                       for (int c = 1; c < k; ++c) mx = std::max(mx, x[size_t(base + c * plane)]);
                       double denom = 0.0;
                       for (int c = 0; c < k; ++c) {
                         denom += std::exp(x[size_t(base + c * plane)] - mx);
                       }
                       for (int c = 0; c < k; ++c) {
                         const double p = std::exp(x[size_t(base + c * plane)] - mx) / denom;
                         gin[size_t(base + c * plane)] +=
                             gscale * (p - (c == label ? 1.0 : 0.0));
                       }
                     }
                   }
                 });
  }
  return result;
}

}  // namespace cosnet
