#pragma once

#include "rulgn/common.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace rulgn {

class Tape;
class GradSink;

/// Dense array of doubles with a shape and optional tape linkage.
///
/// Copies share storage and are cheap; no operation mutates an existing
/// value array, so tensors are safe to hand between threads. Construction
/// rejects non-finite values.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int> shape, Array values);
  /// Shares existing storage (used by reshape-like views). Values were
  /// already validated when first wrapped.
  Tensor(std::vector<int> shape, std::shared_ptr<const Array> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor constant(std::vector<int> shape, double v);
  static Tensor vector(std::initializer_list<double> v);
  static Tensor matrix(int rows, int cols, std::initializer_list<double> row_major);

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  int size() const { return values_ ? static_cast<int>(values_->size()) : 0; }
  int rows() const { return dim(0); }
  int cols() const { return dim(1); }

  const Array& values() const;
  std::shared_ptr<const Array> storage() const { return values_; }
  ConstMatMap as_matrix() const;  // 2-D view, row-major

  double value() const;  // single-element tensors
  double operator()(int i) const;
  double operator()(int i, int j) const;

  bool tracked() const { return tape_ != nullptr; }
  bool requires_grad() const { return requires_grad_; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  /// Same data, no tape linkage.
  Tensor detached() const;

 private:
  friend class Tape;
  std::vector<int> shape_;
  std::shared_ptr<const Array> values_;
  Tape* tape_ = nullptr;
  int node_ = -1;
  bool requires_grad_ = false;
};

/// Routes cotangent contributions to the parents of a record. Contributions
/// to untracked parents are dropped, so constants mix freely into taped
/// expressions.
class GradSink {
 public:
  GradSink(Tape& tape, const std::vector<int>& parents) : tape_(tape), parents_(parents) {}
  void add(int parent_index, const Array& g);

 private:
  Tape& tape_;
  const std::vector<int>& parents_;
};

/// Record of executed primitives in execution (hence topological) order.
/// backward() visits each record exactly once, in reverse.
///
/// A tape is confined to one logical thread; parallelism happens across
/// samples, each with its own tape.
class Tape {
 public:
  using BackwardFn = std::function<void(const Array& grad_out, GradSink& sink)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers an input tensor whose gradient will be requested.
  Tensor leaf(const Tensor& t);

  /// Records one primitive whose result is `value`. `parents` may contain
  /// untracked tensors; their slots surface as node id -1 and receive no
  /// gradient.
  Tensor emit(Tensor value, const std::vector<const Tensor*>& parents, BackwardFn fn);

  /// Reverse sweep from a scalar loss. Calling twice without reset() throws.
  void backward(const Tensor& loss);

  /// Gradient w.r.t. a tensor tracked on this tape (zeros if unreachable).
  Tensor grad(const Tensor& t) const;

  /// Clears accumulated gradients so backward() may run again.
  void reset();

  void accumulate(int node, const Array& g);
  size_t num_records() const { return records_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Record {
    int out;
    std::vector<int> parents;
    BackwardFn fn;
  };

  int add_node(const std::vector<int>& shape);

  std::vector<Record> records_;
  std::vector<std::vector<int>> node_shapes_;
  std::vector<Array> grads_;
  bool backward_done_ = false;
};

/// Tape shared by any tracked argument; null when all are constants.
/// Mixing tensors from two live tapes is an error.
Tape* common_tape(std::initializer_list<const Tensor*> ts);

}  // namespace rulgn
