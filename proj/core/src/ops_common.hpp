#pragma once

// Shared helpers for the primitive op implementations. Internal to core/src.

#include <cmath>
#include <string>
#include <vector>

#include "cosnet/error.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet::detail {

// Every op funnels its result through here so the finite-values invariant
// holds after any engine operation (from_values rejects NaN/Inf).
inline Tensor make_result(const Shape4& shape, std::vector<double> values, const char* op) {
  try {
    return Tensor::from_values(shape, std::move(values));
  } catch (const NumericError&) {
    throw NumericError(std::string(op) + " produced a non-finite value");
  }
}

// ceil(a/b) for b > 0 and any sign of a.
inline int div_ceil(int a, int b) { return a > 0 ? (a + b - 1) / b : -((-a) / b); }

}  // namespace cosnet::detail
