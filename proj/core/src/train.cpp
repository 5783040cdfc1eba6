#include "cosnet/train.hpp"

#include <cmath>

#include "cosnet/error.hpp"
#include "cosnet/metrics.hpp"
#include "cosnet/ops.hpp"

namespace cosnet {

std::pair<Tensor, LabelMap> stack_dataset(const ToyDataset& data) {
  if (data.samples.empty()) throw ValueError("stack_dataset: empty dataset");
  const Shape4 s0 = data.samples[0].image.shape();
  const int n = int(data.samples.size());
  std::vector<double> values;
  values.reserve(size_t(int64_t(n) * s0.numel()));
  LabelMap labels(n, s0.h, s0.w);
  for (int i = 0; i < n; ++i) {
    const ToySample& sample = data.samples[size_t(i)];
    if (!(sample.image.shape() == s0)) throw ShapeError("stack_dataset: inhomogeneous images");
    auto v = sample.image.values();
    values.insert(values.end(), v.begin(), v.end());
    std::copy(sample.labels.v.begin(), sample.labels.v.end(),
              labels.v.begin() + int64_t(i) * s0.h * s0.w);
  }
  return {Tensor::from_values(Shape4(n, s0.c, s0.h, s0.w), std::move(values)), labels};
}

TrainResult train_toy(Model& model, const ToyDataset& data, const TrainOptions& options) {
  if (options.iters < 0) throw ValueError("train_toy: negative iteration count");
  auto [batch, labels] = stack_dataset(data);

  TrainResult result;
  AdamW optimizer(model.store, options.adamw);
  for (int iter = 0; iter < options.iters; ++iter) {
    const double lr = poly_lr(iter, options.iters, options.base_lr, options.lr_power);
    try {
      Tape tape;
      model.store.watch_all(tape);
      Tensor logits = model_forward(model, batch);
      Tensor loss = cross_entropy(logits, labels, options.ignore_index);
      tape.backward(loss);
      result.losses.push_back(loss.item());
      result.lrs.push_back(lr);
      optimizer.step(model.store, lr);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at iteration " + std::to_string(iter) + ": " +
                         e.what());
    }
    model.store.clear_grads();
  }
  result.final_miou = evaluate_miou(model, data, options.ignore_index);
  return result;
}

double evaluate_miou(const Model& model, const ToyDataset& data, int ignore_index) {
  ConfusionMatrix conf(model.config.num_classes);
  for (const ToySample& sample : data.samples) {
    conf.accumulate(predict_mask(model, sample.image), sample.labels, ignore_index);
  }
  return conf.miou();
}

}  // namespace cosnet
