#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cosnet/tensor.hpp"

namespace cosnet {

class GradSink;

// Records one forward pass as a topologically ordered list of primitive
// applications and replays it in reverse to accumulate gradients. A tape is
// owned by one logical thread; distinct tapes may run concurrently.
//
// Recording is driven by attachment: an operation records itself if and only
// if at least one input tensor is attached to a tape (via watch() or by being
// the output of a recorded op). Plain evaluation on detached tensors has no
// autodiff overhead.
class Tape {
 public:
  Tape() = default;
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers t as a differentiable leaf. After backward() every watched
  // leaf carries a gradient (zeros when the root does not depend on it).
  void watch(Tensor& t);

  // Reverse pass from a scalar root recorded on this tape. Gradients of
  // shared inputs are summed. May be called repeatedly.
  void backward(const Tensor& root);

  int size() const { return int(nodes_.size()); }

  // ---- engine internals ----
  // Backward callback of one node: reads the node's output gradient and
  // accumulates into its inputs' gradient buffers through the sink.
  using BackFn = std::function<void(const double* grad_out, GradSink& sink)>;

  // Returns the single tape the given tensors are attached to, nullptr if
  // none. Mixing tensors of two live tapes is an error.
  static Tape* common_tape(std::initializer_list<const Tensor*> inputs);

  // Records an op application. Inputs are registered as leaves on first use;
  // the output tensor gets attached to this tape. Null entries are skipped
  // (optional inputs such as a missing bias) and do not consume a slot.
  void record(const char* op, std::initializer_list<const Tensor*> inputs, Tensor& out,
              BackFn back);
  void record_many(const char* op, std::span<const Tensor* const> inputs, Tensor& out,
                   BackFn back);

 private:
  struct Node {
    const char* op;
    std::vector<int> inputs;
    std::shared_ptr<detail::TensorImpl> impl;  // output of this node
    BackFn back;                               // null for leaves
  };

  int ensure_node(const Tensor& t);

  std::vector<Node> nodes_;
  std::vector<int> watched_;
  std::vector<std::vector<double>> gradbuf_;  // live only inside backward()

  friend class GradSink;
};

// Hands a node's backward callback write access to its inputs' gradient
// buffers. Buffers are zero-initialized on first touch; when an op consumes
// the same tensor twice both indices alias one buffer, so contributions add.
class GradSink {
 public:
  std::vector<double>& input_grad(size_t input_index) const;

 private:
  GradSink(Tape* tape, const Tape::Node* node) : tape_(tape), node_(node) {}
  Tape* tape_;
  const Tape::Node* node_;
  friend class Tape;
};

}  // namespace cosnet
