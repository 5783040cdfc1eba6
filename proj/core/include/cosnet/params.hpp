#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cosnet/autodiff.hpp"
#include "cosnet/tensor.hpp"

namespace cosnet {

// Named, insertion-ordered collection of parameter tensors. Entries alias
// the tensors held by the typed parameter structs, so updating a value here
// updates the network. The ordering is the checkpoint and optimizer-state
// ordering.
class ParamStore {
 public:
  // Registers a parameter; duplicate paths are an error. Returns the stored
  // (aliasing) tensor.
  Tensor& add(const std::string& path, Tensor t);

  Tensor& get(const std::string& path);
  const Tensor& get(const std::string& path) const;
  bool contains(const std::string& path) const;

  size_t size() const { return entries_.size(); }
  int64_t parameter_count() const;

  void watch_all(Tape& tape);
  void clear_grads();

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace cosnet
