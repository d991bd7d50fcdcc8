#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "g2s/autodiff.hpp"
#include "g2s/errors.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Named learnable tensors with Adam moment state.
///
/// Insertion order is the iteration order. Entries live in a deque so the
/// tensor addresses handed to a Tape stay valid as parameters are added.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    std::vector<double> m;
    std::vector<double> v;
  };

  ParamSet() = default;
  ParamSet(const ParamSet& other) : entries_(other.entries_), step_(other.step_), adam_(other.adam_) { reindex(); }
  ParamSet& operator=(const ParamSet& other) {
    if (this != &other) {
      entries_ = other.entries_;
      step_ = other.step_;
      adam_ = other.adam_;
      reindex();
    }
    return *this;
  }
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Tensor& add(const std::string& name, Tensor value) {
    if (index_.count(name)) throw ArgumentError("duplicate parameter name: " + name);
    value.requires_grad = true;
    value.grad.clear();
    const std::size_t n = value.size();
    entries_.push_back(Entry{name, std::move(value), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
    index_.emplace(name, entries_.size() - 1);
    return entries_.back().value;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second].value;
  }
  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t step() const noexcept { return step_; }
  void set_step(std::size_t s) noexcept { step_ = s; }

  std::deque<Entry>& entries() noexcept { return entries_; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  // Allocates zeroed gradients for every parameter.
  void zero_grad() {
    for (auto& e : entries_) e.value.grad.assign(e.value.size(), 0.0);
  }

  double global_grad_norm() const {
    double sq = 0.0;
    for (const auto& e : entries_)
      for (double g : e.value.grad) sq += g * g;
    return std::sqrt(sq);
  }

  /// Scales all gradients by max_norm / g when the global L2 norm g exceeds
  /// max_norm. Returns the norm before clipping.
  double clip_global_norm(double max_norm = 20.0) {
    const double norm = global_grad_norm();
    if (norm > max_norm) {
      const double s = max_norm / norm;
      for (auto& e : entries_)
        for (double& g : e.value.grad) g *= s;
    }
    return norm;
  }

  void scale_grad(double s) {
    for (auto& e : entries_)
      for (double& g : e.value.grad) g *= s;
  }

  const AdamConfig& adam_config() const noexcept { return adam_; }
  void set_adam_config(const AdamConfig& c) noexcept { adam_ = c; }

  /// One bias-corrected Adam update; gradients are zeroed afterwards.
  void adam_step(double lr) {
    for (const auto& e : entries_) {
      if (e.value.grad.size() != e.value.size()) throw StateError("parameter has no gradient: " + e.name);
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(adam_.beta1, t);
    const double c2 = 1.0 - std::pow(adam_.beta2, t);
    for (auto& e : entries_) {
      auto& w = e.value.data;
      auto& g = e.value.grad;
      for (std::size_t i = 0; i < w.size(); ++i) {
        e.m[i] = adam_.beta1 * e.m[i] + (1.0 - adam_.beta1) * g[i];
        e.v[i] = adam_.beta2 * e.v[i] + (1.0 - adam_.beta2) * g[i] * g[i];
        const double mhat = e.m[i] / c1;
        const double vhat = e.v[i] / c2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + adam_.epsilon);
        g[i] = 0.0;
      }
    }
  }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].name, i);
  }

  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t step_ = 0;
  AdamConfig adam_;
};

/// Reverse pass from a scalar loss into `params`.
///
/// Gradients accumulate on top of whatever the parameters already hold;
/// parameters the loss does not reach end up with a zero (allocated)
/// gradient. The tape is cleared afterwards.
inline void backward(Var loss, ParamSet& params) {
  Tape& tape = loss.tape();
  for (auto& e : params.entries()) {
    if (e.value.grad.size() != e.value.size()) e.value.grad.assign(e.value.size(), 0.0);
  }
  tape.backward(loss);
  tape.clear();
}

// Initializers.

inline Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(Shape{fan_in, fan_out});
  for (double& v : t.data) v = rng.uniform(-a, a);
  return t;
}

inline Tensor uniform_tensor(Shape shape, double a, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-a, a);
  return t;
}

}  // namespace g2s
