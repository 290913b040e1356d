// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/autodiff/tape.hpp"
#include "resdyn/common/rng.hpp"

namespace resdyn {

/// Named tensors in registration order. Storage is a deque so tensor addresses stay
/// valid while the tape holds pointers to them.
template <class T>
class ModelParams {
 public:
  ad::Tensor<T>& add(const std::string& name, ad::Shape shape, T fill = T{}) {
    if (index_.count(name) != 0) throw std::invalid_argument("duplicate parameter " + name);
    index_[name] = tensors_.size();
    names_.push_back(name);
    return tensors_.emplace_back(std::move(shape), fill);
  }

  [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }

  [[nodiscard]] std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter " + name);
    return it->second;
  }

  ad::Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter " + name);
    return tensors_[it->second];
  }
  const ad::Tensor<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter " + name);
    return tensors_[it->second];
  }

  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] std::size_t size() const { return tensors_.size(); }
  ad::Tensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const ad::Tensor<T>& operator[](std::size_t i) const { return tensors_[i]; }

  [[nodiscard]] std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  std::vector<ad::Tensor<T>*> pointers() {
    std::vector<ad::Tensor<T>*> out;
    for (auto& t : tensors_) out.push_back(&t);
    return out;
  }

  void zero_grad() {
    for (auto& t : tensors_) t.zero_grad();
  }

  template <class U>
  [[nodiscard]] ModelParams<U> cast() const {
    ModelParams<U> out;
    for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], tensors_[i].shape) = tensors_[i].template cast<U>();
    return out;
  }

  friend bool operator==(const ModelParams& l, const ModelParams& r) {
    if (l.names_ != r.names_) return false;
    for (std::size_t i = 0; i < l.tensors_.size(); ++i) {
      if (l.tensors_[i].shape != r.tensors_[i].shape || l.tensors_[i].data != r.tensors_[i].data) return false;
    }
    return true;
  }

 private:
  std::deque<ad::Tensor<T>> tensors_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

/// Every parameter placed on one tape, looked up by name during a forward pass.
template <class T>
class BoundParams {
 public:
  BoundParams(ad::Tape<T>& tape, ModelParams<T>& params) : tape_(&tape), params_(&params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.param(params[i]));
  }
  /// Inference binding: parameters enter as constants and no adjoints are recorded.
  BoundParams(ad::Tape<T>& tape, const ModelParams<T>& params) : tape_(&tape), params_(&params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.constant(params[i]));
  }

  [[nodiscard]] ad::Var<T> operator()(const std::string& name) const { return vars_[params_->index_of(name)]; }
  [[nodiscard]] bool contains(const std::string& name) const { return params_->contains(name); }
  [[nodiscard]] ad::Tape<T>& tape() const { return *tape_; }

 private:
  ad::Tape<T>* tape_;
  const ModelParams<T>* params_;
  std::vector<ad::Var<T>> vars_;
};

/// U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
template <class T>
void xavier_uniform(ad::Tensor<T>& w, Rng& rng) {
  if (w.rank() != 2) throw std::invalid_argument("xavier_uniform expects a matrix");
  const double limit = std::sqrt(6.0 / static_cast<double>(w.shape[0] + w.shape[1]));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <class T>
void uniform_fill(ad::Tensor<T>& w, Rng& rng, double limit) {
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace resdyn
