#include "cosnet/metrics.hpp"

#include <cmath>
#include <limits>

#include "cosnet/error.hpp"

namespace cosnet {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
  if (num_classes < 1) throw ValueError("ConfusionMatrix: need at least one class");
  counts_.assign(size_t(k_) * k_, 0);
}

uint64_t ConfusionMatrix::at(int gt, int pred) const {
  if (gt < 0 || gt >= k_ || pred < 0 || pred >= k_) {
    throw ValueError("ConfusionMatrix: index out of range");
  }
  return counts_[size_t(gt) * k_ + size_t(pred)];
}

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (uint64_t c : counts_) t += c;
  return t;
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt, int ignore_index) {
  if (pred.n != gt.n || pred.h != gt.h || pred.w != gt.w) {
    throw ShapeError("ConfusionMatrix: prediction and ground truth extents differ");
  }
  for (size_t i = 0; i < gt.v.size(); ++i) {
    const int32_t g = gt.v[i];
    if (g == ignore_index) {
      ++ignored_;
      continue;
    }
    const int32_t p = pred.v[i];
    if (g < 0 || g >= k_ || p < 0 || p >= k_) {
      throw ValueError("ConfusionMatrix: label outside [0," + std::to_string(k_) + ")");
    }
    ++counts_[size_t(g) * k_ + size_t(p)];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ShapeError("ConfusionMatrix: class counts differ in merge");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
}

std::vector<double> ConfusionMatrix::class_iou() const {
  std::vector<double> iou(size_t(k_), 0.0);
  for (int c = 0; c < k_; ++c) {
    const uint64_t tp = counts_[size_t(c) * k_ + size_t(c)];
    uint64_t fp = 0, fn = 0;
    for (int o = 0; o < k_; ++o) {
      if (o == c) continue;
      fp += counts_[size_t(o) * k_ + size_t(c)];
      fn += counts_[size_t(c) * k_ + size_t(o)];
    }
    const uint64_t uni = tp + fp + fn;
    iou[size_t(c)] =
        uni == 0 ? std::numeric_limits<double>::quiet_NaN() : double(tp) / double(uni);
  }
  return iou;
}

double ConfusionMatrix::miou() const {
  if (total() == 0) throw ValueError("miou undefined: no pixels evaluated");
  return mean_valid_iou(class_iou());
}

double ConfusionMatrix::pixel_accuracy() const {
  const uint64_t t = total();
  if (t == 0) throw ValueError("pixel accuracy undefined: no pixels evaluated");
  uint64_t diag = 0;
  for (int c = 0; c < k_; ++c) diag += counts_[size_t(c) * k_ + size_t(c)];
  return double(diag) / double(t);
}

double mean_valid_iou(const std::vector<double>& per_class) {
  double acc = 0.0;
  int n = 0;
  for (double v : per_class) {
    if (std::isnan(v)) continue;
    acc += v;
    ++n;
  }
  if (n == 0) throw ValueError("mean IoU undefined: every class has zero union");
  return acc / n;
}

}  // namespace cosnet
