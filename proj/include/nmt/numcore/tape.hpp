#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nmt/error.hpp"
#include "nmt/numcore/tensor.hpp"

namespace nmt::num {

/// A named trainable tensor. Identity (address) is what the tape tracks, so
/// a parameter used in several places of one graph has a single leaf.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
};

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
class Var {
 public:
  Var() = default;

  const Tensor<T>& value() const { return tape_->value(*this); }
  Tape<T>* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradient of a scalar loss with respect to the parameters recorded on a tape.
template <typename T>
class Gradients {
 public:
  /// Gradient for p; all zeros when p never reached the loss.
  Tensor<T> of(const Parameter<T>& p) const {
    if (auto it = grads_.find(&p); it != grads_.end()) return it->second;
    return Tensor<T>::zeros_like(p.value);
  }
  const Tensor<T>* find(const Parameter<T>& p) const {
    auto it = grads_.find(&p);
    return it == grads_.end() ? nullptr : &it->second;
  }
  bool contains(const Parameter<T>& p) const { return grads_.contains(&p); }
  std::size_t size() const noexcept { return grads_.size(); }

  void accumulate(const Parameter<T>& p, const Tensor<T>& g) {
    auto [it, inserted] = grads_.try_emplace(&p, g);
    if (!inserted) {
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }

 private:
  std::unordered_map<const Parameter<T>*, Tensor<T>> grads_;
};

template <typename T>
class BackwardContext;

/// Records values and local backward rules in execution order. One tape
/// belongs to one thread and one loss evaluation. References returned by
/// value() stay valid for the tape's lifetime.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(BackwardContext<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}); }

  /// Trainable leaf. Repeated calls with the same parameter return the same leaf.
  Var<T> param(Parameter<T>& p) {
    if (auto it = param_leaf_.find(&p); it != param_leaf_.end()) return Var<T>(this, it->second);
    Var<T> v = push(p.value, true, {});
    param_leaf_.emplace(&p, v.id());
    leaf_params_.emplace_back(v.id(), &p);
    return v;
  }

  /// Parameter value as a constant: no gradient flows into it.
  Var<T> frozen(const Parameter<T>& p) {
    if (auto it = frozen_leaf_.find(&p); it != frozen_leaf_.end()) return Var<T>(this, it->second);
    Var<T> v = push(p.value, false, {});
    frozen_leaf_.emplace(&p, v.id());
    return v;
  }

  Var<T> leaf(Parameter<T>& p, bool trainable) { return trainable ? param(p) : frozen(p); }

  /// Append an op output. The backward rule is kept only when an input needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()), std::move(backward));
  }

  Var<T> record(Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn backward) {
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check_owned(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
#ifndef NDEBUG
    for (T x : value.data()) {
      if (!std::isfinite(x)) fail(ErrorKind::NumericalError, "non-finite value produced on tape");
    }
#endif
    return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
  }

  const Tensor<T>& value(Var<T> v) const {
    check_owned(v);
    return nodes_[v.id()].value;
  }
  bool requires_grad(Var<T> v) const {
    check_owned(v);
    return nodes_[v.id()].requires_grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t parameter_count() const noexcept { return leaf_params_.size(); }
  bool tracks(const Parameter<T>& p) const { return param_leaf_.contains(&p); }

  /// Reverse sweep from a scalar loss. Parameters that appear several times
  /// receive summed contributions.
  Gradients<T> backward(Var<T> loss);

  void check_owned(Var<T> v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
      fail(ErrorKind::ShapeError, "variable does not belong to this tape");
    }
  }

 private:
  friend class BackwardContext<T>;

  struct Node {
    Tensor<T> value;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    nodes_.push_back(Node{std::move(value), requires_grad, std::move(backward)});
    return Var<T>(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_leaf_;
  std::unordered_map<const Parameter<T>*, std::size_t> frozen_leaf_;
  std::vector<std::pair<std::size_t, Parameter<T>*>> leaf_params_;
};

/// What an op's backward rule sees: its output gradient and lazily
/// allocated gradient buffers for its inputs.
template <typename T>
class BackwardContext {
 public:
  BackwardContext(Tape<T>& tape, std::vector<Tensor<T>>& grads, std::size_t self)
      : tape_(tape), grads_(grads), self_(self) {}

  const Tensor<T>& grad() const { return grads_[self_]; }
  const Tensor<T>& output() const { return tape_.nodes_[self_].value; }
  const Tensor<T>& value(Var<T> v) const { return tape_.nodes_[v.id()].value; }
  bool needs(Var<T> v) const { return tape_.nodes_[v.id()].requires_grad; }

  Tensor<T>& grad_of(Var<T> v) {
    Tensor<T>& g = grads_[v.id()];
    if (g.empty()) g = Tensor<T>::zeros_like(tape_.nodes_[v.id()].value);
    return g;
  }

 private:
  Tape<T>& tape_;
  std::vector<Tensor<T>>& grads_;
  std::size_t self_;
};

template <typename T>
Gradients<T> Tape<T>::backward(Var<T> loss) {
  check_owned(loss);
  if (nodes_[loss.id()].value.size() != 1) {
    fail(ErrorKind::ShapeError, "backward requires a scalar loss, got shape " +
                                    shape_string(nodes_[loss.id()].value.shape()));
  }
  std::vector<Tensor<T>> grads(nodes_.size());
  grads[loss.id()] = Tensor<T>(nodes_[loss.id()].value.shape(), T{1});
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward || grads[i].empty()) continue;
    BackwardContext<T> ctx(*this, grads, i);
    node.backward(ctx);
  }
  Gradients<T> out;
  for (const auto& [id, p] : leaf_params_) {
    if (grads[id].empty()) {
      out.accumulate(*p, Tensor<T>::zeros_like(p->value));
    } else {
      out.accumulate(*p, grads[id]);
    }
  }
  return out;
}

}  // namespace nmt::num
