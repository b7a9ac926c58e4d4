#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "opinionxf/errors.hpp"
#include "opinionxf/tensor.hpp"

namespace opinionxf {

// Named, ordered collection of parameter tensors. Registration order is the
// iteration order everywhere (init draws, optimizer updates, checkpoints),
// which is what makes runs reproducible.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
  };

  Tensor& add(const std::string& name, Tensor value, bool trainable = true) {
    if (index_.count(name))
      throw ConfigError("parameter registered twice: " + name);
    index_[name] = entries_.size();
    entries_.push_back(Entry{name, std::move(value), trainable});
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient tensors parallel to a ParamStore.
class GradStore {
 public:
  explicit GradStore(const ParamStore& params) {
    grads_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor& v = params.entry(i).value;
      grads_.emplace_back(v.rows, v.cols);
    }
  }

  Tensor& at(std::size_t i) { return grads_[i]; }
  const Tensor& at(std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero() {
    for (Tensor& g : grads_) g.fill(0.0);
  }

  void scale(double c) {
    for (Tensor& g : grads_) g *= c;
  }

  void add(const GradStore& other) {
    for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
  }

  double global_norm() const {
    double s = 0.0;
    for (const Tensor& g : grads_) s += g.squared_norm();
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const Tensor& g : grads_) {
      if (!g.all_finite()) return false;
    }
    return true;
  }

 private:
  std::vector<Tensor> grads_;
};

}  // namespace opinionxf
