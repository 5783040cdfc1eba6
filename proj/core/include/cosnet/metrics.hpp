#pragma once

#include <cstdint>
#include <vector>

#include "cosnet/tensor.hpp"

namespace cosnet {

// K x K confusion counts, rows = ground truth, columns = prediction.
// Accumulation is plain integer addition, so merging per-image matrices is
// order-independent.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return k_; }
  uint64_t at(int gt, int pred) const;
  uint64_t total() const;    // evaluated (non-ignored) pixel count
  uint64_t ignored() const { return ignored_; }

  void accumulate(const LabelMap& pred, const LabelMap& gt, int ignore_index = -1);
  void merge(const ConfusionMatrix& other);

  // IoU_k = TP / (TP + FP + FN); classes whose union is zero get a quiet NaN
  // and are excluded from the mean.
  std::vector<double> class_iou() const;
  double miou() const;
  double pixel_accuracy() const;

 private:
  int k_;
  std::vector<uint64_t> counts_;
  uint64_t ignored_ = 0;
};

// Unweighted mean of the finite entries; the same averaging miou() uses.
// Errors when no entry is finite.
double mean_valid_iou(const std::vector<double>& per_class);

}  // namespace cosnet
