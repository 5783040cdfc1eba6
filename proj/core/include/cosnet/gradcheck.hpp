#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cosnet/tensor.hpp"

namespace cosnet {

// A deterministic function from the given tensors to a scalar tensor. The
// checker attaches the inputs to a tape itself; the function body just runs
// engine ops on them.
using ScalarFn = std::function<Tensor(std::span<Tensor>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // human-readable location of the worst element

  bool ok(double tol) const { return max_rel_error < tol; }
};

// Compares tape gradients of fn against central finite differences with
// per-element step eps * max(1, |x|). The relative error of one element is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(const ScalarFn& fn, std::vector<Tensor> inputs, double eps = 1e-6);

// Same, but checks at most max_elems randomly chosen elements per input
// tensor. Used for large parameter sets where the full sweep would be slow.
GradCheckReport grad_check_sampled(const ScalarFn& fn, std::vector<Tensor> inputs, double eps,
                                   int max_elems, uint64_t seed);

struct SuiteEntry {
  std::string name;
  double tolerance;  // pinned per check; the full-model sample runs at 1e-4
  GradCheckReport report;

  bool ok() const { return report.ok(tolerance); }
};

// Named finite-difference checks covering every differentiable primitive and
// every network block at toy widths. Deterministic for a given seed.
std::vector<SuiteEntry> run_gradient_suite(uint64_t seed);

struct ModelConfig;

// Sampled end-to-end check of a concrete model configuration: cross-entropy
// through the full network, gradients spot-checked on the input image plus
// one element of up to max_tensors randomly chosen parameters. Intended for
// arbitrary user configs where a full element sweep would be prohibitive.
SuiteEntry run_model_gradcheck(const ModelConfig& config, uint64_t seed, int max_tensors = 63);

}  // namespace cosnet
