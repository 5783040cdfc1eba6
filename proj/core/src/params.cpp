#include "cosnet/params.hpp"

#include "cosnet/error.hpp"

namespace cosnet {

Tensor& ParamStore::add(const std::string& path, Tensor t) {
  if (!t.defined()) throw ValueError("ParamStore::add: undefined tensor for '" + path + "'");
  if (index_.count(path)) throw ValueError("ParamStore::add: duplicate path '" + path + "'");
  index_[path] = entries_.size();
  entries_.emplace_back(path, std::move(t));
  return entries_.back().second;
}

Tensor& ParamStore::get(const std::string& path) {
  auto it = index_.find(path);
  if (it == index_.end()) throw ValueError("ParamStore::get: unknown path '" + path + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::get(const std::string& path) const {
  auto it = index_.find(path);
  if (it == index_.end()) throw ValueError("ParamStore::get: unknown path '" + path + "'");
  return entries_[it->second].second;
}

bool ParamStore::contains(const std::string& path) const { return index_.count(path) > 0; }

int64_t ParamStore::parameter_count() const {
  int64_t n = 0;
  for (const auto& [path, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::watch_all(Tape& tape) {
  for (auto& [path, t] : entries_) tape.watch(t);
}

void ParamStore::clear_grads() {
  for (auto& [path, t] : entries_) t.clear_grad();
}

}  // namespace cosnet
