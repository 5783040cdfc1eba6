#include "cosnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cosnet/autodiff.hpp"
#include "cosnet/error.hpp"

namespace cosnet {

namespace {

double eval_scalar(const ScalarFn& fn, std::span<Tensor> inputs) {
  Tensor out = fn(inputs);
  if (out.numel() != 1) {
    throw ValueError("grad_check: function must return a scalar, got " + out.shape().str());
  }
  return out.item();
}

}  // namespace

GradCheckReport grad_check_sampled(const ScalarFn& fn, std::vector<Tensor> inputs, double eps,
                                   int max_elems, uint64_t seed) {
  if (eps <= 0) throw ValueError("grad_check: eps must be positive");

  // Analytic pass. The tape lives only for this block so the numeric passes
  // below evaluate without recording.
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Tape tape;
    for (Tensor& t : inputs) tape.watch(t);
    Tensor out = fn(inputs);
    if (out.numel() != 1) {
      throw ValueError("grad_check: function must return a scalar, got " + out.shape().str());
    }
    tape.backward(out);
    for (size_t i = 0; i < inputs.size(); ++i) {
      analytic[i].assign(inputs[i].grad().begin(), inputs[i].grad().end());
    }
  }

  std::mt19937_64 rng(seed);
  GradCheckReport report;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const int64_t n = inputs[i].numel();
    std::vector<int64_t> elems(size_t(n), 0);
    std::iota(elems.begin(), elems.end(), 0);
    if (int64_t(max_elems) < n) {
      std::shuffle(elems.begin(), elems.end(), rng);
      elems.resize(size_t(max_elems));
    }
    std::span<double> vals = inputs[i].values_mut();
    for (int64_t e : elems) {
      const double saved = vals[size_t(e)];
      const double h = eps * std::max(1.0, std::abs(saved));
      vals[size_t(e)] = saved + h;
      const double f_plus = eval_scalar(fn, inputs);
      vals[size_t(e)] = saved - h;
      const double f_minus = eval_scalar(fn, inputs);
      vals[size_t(e)] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw NumericError("grad_check: non-finite function value during differencing");
      }
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[i][size_t(e)];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = "input " + std::to_string(i) + " element " + std::to_string(e) +
                       ": analytic=" + std::to_string(a) + " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

GradCheckReport grad_check(const ScalarFn& fn, std::vector<Tensor> inputs, double eps) {
  return grad_check_sampled(fn, std::move(inputs), eps, std::numeric_limits<int>::max(), 0);
}

}  // namespace cosnet
