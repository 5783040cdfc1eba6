#pragma once

#include "cosnet/model.hpp"
#include "cosnet/optim.hpp"
#include "cosnet/toy_data.hpp"

namespace cosnet {

struct TrainOptions {
  int iters = 300;
  double base_lr = 1e-3;  // toy-scale default; full-scale runs use 9e-5
  double lr_power = 1.0;
  AdamWConfig adamw{};
  int ignore_index = -1;
};

struct TrainResult {
  std::vector<double> losses;  // one entry per iteration
  std::vector<double> lrs;
  double final_miou = 0.0;     // on the training set
};

// Full-batch supervised training on the toy set: cross-entropy objective,
// decoupled-weight-decay adaptive steps, polynomial LR decay. Deterministic
// given (model seed, dataset seed, options). Aborts with a NumericError
// naming the iteration if the loss diverges.
TrainResult train_toy(Model& model, const ToyDataset& data, const TrainOptions& options = {});

// Stacks dataset images/labels into one batch pair.
std::pair<Tensor, LabelMap> stack_dataset(const ToyDataset& data);

// Mean IoU of the model's predictions over the dataset.
double evaluate_miou(const Model& model, const ToyDataset& data, int ignore_index = -1);

}  // namespace cosnet
