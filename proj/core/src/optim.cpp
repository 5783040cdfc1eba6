#include "cosnet/optim.hpp"

#include <cmath>

#include "cosnet/error.hpp"

namespace cosnet {

double poly_lr(int iter, int total, double base_lr, double power) {
  if (total <= 0) throw ValueError("poly_lr: total must be positive");
  if (iter < 0 || iter > total) {
    throw ValueError("poly_lr: iter " + std::to_string(iter) + " outside [0," +
                     std::to_string(total) + "]");
  }
  return base_lr * std::pow(1.0 - double(iter) / double(total), power);
}

AdamW::AdamW(const ParamStore& params, AdamWConfig config) : cfg_(config) {
  if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1 || cfg_.eps <= 0 ||
      cfg_.weight_decay < 0) {
    throw ValueError("AdamW: invalid hyperparameters");
  }
  moments_.reserve(params.size());
  for (const auto& [path, t] : params) {
    Moments m;
    m.m.assign(size_t(t.numel()), 0.0);
    m.v.assign(size_t(t.numel()), 0.0);
    moments_.push_back(std::move(m));
  }
}

void AdamW::step(ParamStore& params, double lr) {
  if (params.size() != moments_.size()) {
    throw ValueError("AdamW: parameter store does not match optimizer state");
  }
  if (!std::isfinite(lr) || lr < 0) throw ValueError("AdamW: invalid learning rate");

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));

  size_t idx = 0;
  for (auto& [path, t] : params) {
    Moments& mom = moments_[idx++];
    std::span<const double> g = t.grad();
    if (g.size() != size_t(t.numel())) {
      throw NumericError("AdamW: missing gradient for parameter '" + path + "'");
    }
    std::span<double> theta = t.values_mut();
    for (size_t i = 0; i < theta.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("AdamW: non-finite gradient for parameter '" + path + "'");
      }
      if (cfg_.weight_decay != 0.0) {
        theta[i] -= lr * cfg_.weight_decay * theta[i];
      }
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace cosnet
