#include "cosnet/autodiff.hpp"

#include <algorithm>

#include "cosnet/error.hpp"

namespace cosnet {

Tape::~Tape() {
  // Detach surviving tensors so they can join a later tape.
  for (Node& node : nodes_) {
    if (node.impl && node.impl->tape == this) {
      node.impl->tape = nullptr;
      node.impl->node = -1;
    }
  }
}

int Tape::ensure_node(const Tensor& t) {
  auto& impl = t.impl();
  if (!impl) throw ValueError("use of a default-constructed Tensor");
  if (impl->tape == this) return impl->node;
  if (impl->tape != nullptr) {
    throw ValueError("tensor is already attached to a different tape");
  }
  impl->tape = this;
  impl->node = int(nodes_.size());
  nodes_.push_back(Node{"leaf", {}, impl, nullptr});
  return impl->node;
}

void Tape::watch(Tensor& t) {
  int id = ensure_node(t);
  if (!t.impl()->requires_grad) {
    t.impl()->requires_grad = true;
  }
  if (std::find(watched_.begin(), watched_.end(), id) == watched_.end()) {
    watched_.push_back(id);
  }
}

Tape* Tape::common_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t || !t->defined()) continue;
    Tape* other = t->impl()->tape;
    if (!other) continue;
    if (tape && other != tape) {
      throw ValueError("operation mixes tensors from two different tapes");
    }
    tape = other;
  }
  return tape;
}

void Tape::record(const char* op, std::initializer_list<const Tensor*> inputs, Tensor& out,
                  BackFn back) {
  std::vector<const Tensor*> list(inputs.begin(), inputs.end());
  record_many(op, list, out, std::move(back));
}

void Tape::record_many(const char* op, std::span<const Tensor* const> inputs, Tensor& out,
                       BackFn back) {
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    if (!t || !t->defined()) continue;
    ids.push_back(ensure_node(*t));
  }
  auto& impl = out.impl();
  impl->tape = this;
  impl->node = int(nodes_.size());
  nodes_.push_back(Node{op, std::move(ids), impl, std::move(back)});
}

void Tape::backward(const Tensor& root) {
  if (!root.defined() || root.impl()->tape != this) {
    throw ValueError("backward root is not attached to this tape");
  }
  if (root.numel() != 1) {
    throw ValueError("backward root must be a scalar, got shape " + root.shape().str());
  }

  gradbuf_.assign(nodes_.size(), {});
  gradbuf_[size_t(root.impl()->node)] = {1.0};

  // Nodes are recorded in topological order, so one reverse sweep suffices.
  for (int id = int(nodes_.size()) - 1; id >= 0; --id) {
    Node& node = nodes_[size_t(id)];
    if (!node.back || gradbuf_[size_t(id)].empty()) continue;
    GradSink sink(this, &node);
    node.back(gradbuf_[size_t(id)].data(), sink);
  }

  for (int id : watched_) {
    auto& impl = nodes_[size_t(id)].impl;
    auto& buf = gradbuf_[size_t(id)];
    if (buf.empty()) {
      impl->grad.assign(size_t(impl->shape.numel()), 0.0);
    } else {
      impl->grad = std::move(buf);
    }
  }
  gradbuf_.clear();
}

std::vector<double>& GradSink::input_grad(size_t input_index) const {
  int id = node_->inputs.at(input_index);
  auto& buf = tape_->gradbuf_[size_t(id)];
  if (buf.empty()) {
    buf.assign(size_t(tape_->nodes_[size_t(id)].impl->shape.numel()), 0.0);
  }
  return buf;
}

}  // namespace cosnet
