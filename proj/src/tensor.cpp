#include "rulgn/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rulgn {

namespace {

int shape_product(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("tensor shape: negative extent");
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, Array values) : shape_(std::move(shape)) {
  if (shape_product(shape_) != static_cast<int>(values.size())) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape_) + " does not match " +
                                std::to_string(values.size()) + " values");
  }
  if (values.size() > 0 && !values.allFinite()) {
    throw NumericError("tensor: non-finite values in forward computation");
  }
  values_ = std::make_shared<Array>(std::move(values));
}

Tensor::Tensor(std::vector<int> shape, std::shared_ptr<const Array> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (!values_ || shape_product(shape_) != static_cast<int>(values_->size())) {
    throw std::invalid_argument("tensor: shape does not match shared storage size");
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, Array::Constant(1, v)); }

Tensor Tensor::zeros(std::vector<int> shape) {
  int n = shape_product(shape);
  return Tensor(std::move(shape), Array::Zero(n));
}

Tensor Tensor::constant(std::vector<int> shape, double v) {
  int n = shape_product(shape);
  return Tensor(std::move(shape), Array::Constant(n, v));
}

Tensor Tensor::vector(std::initializer_list<double> v) {
  Array a(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) a[i++] = x;
  return Tensor({static_cast<int>(v.size())}, std::move(a));
}

Tensor Tensor::matrix(int rows, int cols, std::initializer_list<double> row_major) {
  if (static_cast<int>(row_major.size()) != rows * cols) {
    throw std::invalid_argument("tensor matrix: element count mismatch");
  }
  Array a(rows * cols);
  int i = 0;
  for (double x : row_major) a[i++] = x;
  return Tensor({rows, cols}, std::move(a));
}

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= ndim()) throw std::invalid_argument("tensor dim: axis out of range");
  return shape_[axis];
}

const Array& Tensor::values() const {
  if (!values_) throw std::logic_error("tensor: empty");
  return *values_;
}

ConstMatMap Tensor::as_matrix() const {
  if (ndim() != 2) throw std::invalid_argument("tensor as_matrix: need 2-D, got " + shape_str(shape_));
  return ConstMatMap(values().data(), shape_[0], shape_[1]);
}

double Tensor::value() const {
  if (size() != 1) throw std::invalid_argument("tensor value: not a single element");
  return (*values_)[0];
}

double Tensor::operator()(int i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("tensor(i)");
  return (*values_)[i];
}

double Tensor::operator()(int i, int j) const {
  if (ndim() != 2) throw std::invalid_argument("tensor(i,j): need 2-D");
  if (i < 0 || i >= shape_[0] || j < 0 || j >= shape_[1]) throw std::out_of_range("tensor(i,j)");
  return (*values_)[i * shape_[1] + j];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.tape_ = nullptr;
  t.node_ = -1;
  t.requires_grad_ = false;
  return t;
}

void GradSink::add(int parent_index, const Array& g) {
  int node = parents_.at(parent_index);
  if (node < 0) return;
  tape_.accumulate(node, g);
}

int Tape::add_node(const std::vector<int>& shape) {
  node_shapes_.push_back(shape);
  return static_cast<int>(node_shapes_.size()) - 1;
}

Tensor Tape::leaf(const Tensor& t) {
  if (t.tracked()) throw std::logic_error("tape leaf: tensor already tracked");
  Tensor out = t;
  out.tape_ = this;
  out.node_ = add_node(t.shape());
  out.requires_grad_ = true;
  return out;
}

Tensor Tape::emit(Tensor value, const std::vector<const Tensor*>& parents, BackwardFn fn) {
  if (value.tracked()) throw std::logic_error("tape emit: value already tracked");
  std::vector<int> ids;
  ids.reserve(parents.size());
  for (const Tensor* p : parents) ids.push_back(p && p->tracked() ? p->node() : -1);
  value.tape_ = this;
  value.node_ = add_node(value.shape());
  records_.push_back(Record{value.node_, std::move(ids), std::move(fn)});
  return value;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_ != this) throw std::logic_error("backward: loss not tracked on this tape");
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (backward_done_) throw std::logic_error("backward: already run; call reset() first");
  grads_.assign(node_shapes_.size(), Array());
  grads_[loss.node_] = Array::Ones(1);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    const Array& gout = grads_[it->out];
    if (gout.size() == 0) continue;  // record not on the path to the loss
    GradSink sink(*this, it->parents);
    it->fn(gout, sink);
  }
  backward_done_ = true;
}

void Tape::accumulate(int node, const Array& g) {
  Array& slot = grads_.at(node);
  if (slot.size() == 0) {
    slot = g;
  } else {
    if (slot.size() != g.size()) throw std::logic_error("tape accumulate: gradient size mismatch");
    slot += g;
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.tape_ != this) throw std::logic_error("tape grad: tensor not tracked on this tape");
  if (!backward_done_) throw std::logic_error("tape grad: backward has not run");
  const Array& g = grads_.at(t.node_);
  if (g.size() == 0) return Tensor::zeros(t.shape());
  return Tensor(t.shape(), g);
}

void Tape::reset() {
  grads_.clear();
  backward_done_ = false;
}

Tape* common_tape(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t || !t->tracked()) continue;
    if (tape && tape != t->tape()) {
      throw std::logic_error("operation mixes tensors from different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

}  // namespace rulgn
