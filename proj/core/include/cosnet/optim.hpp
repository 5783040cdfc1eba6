#pragma once

#include <cstdint>
#include <vector>

#include "cosnet/params.hpp"

namespace cosnet {

// base_lr * (1 - iter/total)^power, the polynomial decay schedule.
// Requires 0 <= iter <= total.
double poly_lr(int iter, int total, double base_lr, double power = 1.0);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. The decay θ -= lr*wd*θ is applied before
// the bias-corrected adaptive update. State is kept per parameter in store
// order; the store handed to step() must be the one used at construction.
class AdamW {
 public:
  AdamW(const ParamStore& params, AdamWConfig config = {});

  // Consumes the gradients currently held by the parameters. Throws
  // NumericError naming the parameter path if a gradient is missing or
  // non-finite.
  void step(ParamStore& params, double lr);

  int64_t step_count() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamWConfig cfg_;
  std::vector<Moments> moments_;
  int64_t step_ = 0;
};

}  // namespace cosnet
