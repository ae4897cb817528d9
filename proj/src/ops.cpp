#include "rulgn/ops.hpp"

#include "rulgn/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rulgn {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

using Shared = std::shared_ptr<const Array>;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape(), a.values() + b.values());
  Tape* tp = common_tape({&a, &b});
  if (!tp) return out;
  return tp->emit(std::move(out), {&a, &b}, [](const Array& g, GradSink& sink) {
    sink.add(0, g);
    sink.add(1, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape(), a.values() - b.values());
  Tape* tp = common_tape({&a, &b});
  if (!tp) return out;
  return tp->emit(std::move(out), {&a, &b}, [](const Array& g, GradSink& sink) {
    sink.add(0, g);
    sink.add(1, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.shape(), a.values() * b.values());
  Tape* tp = common_tape({&a, &b});
  if (!tp) return out;
  Shared va = a.storage(), vb = b.storage();
  return tp->emit(std::move(out), {&a, &b}, [va, vb](const Array& g, GradSink& sink) {
    sink.add(0, g * (*vb));
    sink.add(1, g * (*va));
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape(), a.values() * c);
  Tape* tp = common_tape({&a});
  if (!tp) return out;
  return tp->emit(std::move(out), {&a},
                  [c](const Array& g, GradSink& sink) { sink.add(0, g * c); });
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape(), a.values() + c);
  Tape* tp = common_tape({&a});
  if (!tp) return out;
  return tp->emit(std::move(out), {&a},
                  [](const Array& g, GradSink& sink) { sink.add(0, g); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2) throw std::invalid_argument("matmul: operands must be 2-D");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Array out(m * n);
  MatMap(out.data(), m, n).noalias() = a.as_matrix() * b.as_matrix();
  Tensor t({m, n}, std::move(out));
  Tape* tp = common_tape({&a, &b});
  if (!tp) return t;
  Shared va = a.storage(), vb = b.storage();
  return tp->emit(std::move(t), {&a, &b}, [va, vb, m, k, n](const Array& g, GradSink& sink) {
    ConstMatMap gm(g.data(), m, n);
    ConstMatMap am(va->data(), m, k);
    ConstMatMap bm(vb->data(), k, n);
    Array da(m * k);
    MatMap(da.data(), m, k).noalias() = gm * bm.transpose();
    sink.add(0, da);
    Array db(k * n);
    MatMap(db.data(), k, n).noalias() = am.transpose() * gm;
    sink.add(1, db);
  });
}

Tensor add_bias_rows(const Tensor& m, const Tensor& b) {
  if (m.ndim() != 2 || b.ndim() != 1 || b.dim(0) != m.cols()) {
    throw std::invalid_argument("add_bias_rows: need [r,c] and [c]");
  }
  const int r = m.rows(), c = m.cols();
  Array out(r * c);
  MatMap(out.data(), r, c) = m.as_matrix().rowwise() +
                             Eigen::Map<const Eigen::RowVectorXd>(b.values().data(), c);
  Tensor t({r, c}, std::move(out));
  Tape* tp = common_tape({&m, &b});
  if (!tp) return t;
  return tp->emit(std::move(t), {&m, &b}, [r, c](const Array& g, GradSink& sink) {
    sink.add(0, g);
    sink.add(1, Array(ConstMatMap(g.data(), r, c).colwise().sum().transpose()));
  });
}

Tensor add_bias_channels(const Tensor& x, const Tensor& b) {
  if (x.ndim() != 2 || b.ndim() != 1 || b.dim(0) != x.rows()) {
    throw std::invalid_argument("add_bias_channels: need [c,l] and [c]");
  }
  const int c = x.rows(), l = x.cols();
  Array out(c * l);
  MatMap(out.data(), c, l) = x.as_matrix().colwise() +
                             Eigen::Map<const Eigen::VectorXd>(b.values().data(), c);
  Tensor t({c, l}, std::move(out));
  Tape* tp = common_tape({&x, &b});
  if (!tp) return t;
  return tp->emit(std::move(t), {&x, &b}, [c, l](const Array& g, GradSink& sink) {
    sink.add(0, g);
    sink.add(1, Array(ConstMatMap(g.data(), c, l).rowwise().sum()));
  });
}

namespace {

// Unfolds x [C,L] into [C*k, L_out]; padded positions are zero.
MatrixRM im2col(const Array& x, int c_in, int len, int k, int stride, int pad, int l_out) {
  MatrixRM cols = MatrixRM::Zero(c_in * k, l_out);
  ConstMatMap xm(x.data(), c_in, len);
  for (int j = 0; j < l_out; ++j) {
    const int base = j * stride - pad;
    for (int t = 0; t < k; ++t) {
      const int pos = base + t;
      if (pos < 0 || pos >= len) continue;
      for (int ci = 0; ci < c_in; ++ci) cols(ci * k + t, j) = xm(ci, pos);
    }
  }
  return cols;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& kernels, int stride, int padding) {
  if (x.ndim() != 2) throw std::invalid_argument("conv1d: input must be [C_in, L]");
  if (kernels.ndim() != 3) throw std::invalid_argument("conv1d: kernels must be [C_out, C_in, k]");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv1d: padding must be >= 0");
  const int c_in = x.rows(), len = x.cols();
  const int c_out = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != c_in) throw std::invalid_argument("conv1d: channel mismatch");
  if (k > len + 2 * padding) throw std::invalid_argument("conv1d: kernel longer than padded input");
  const int l_out = (len + 2 * padding - k) / stride + 1;
  if (l_out < 1) throw std::invalid_argument("conv1d: empty output");

  MatrixRM cols = im2col(x.values(), c_in, len, k, stride, padding, l_out);
  ConstMatMap wm(kernels.values().data(), c_out, c_in * k);
  Array out(c_out * l_out);
  MatMap(out.data(), c_out, l_out).noalias() = wm * cols;
  Tensor t({c_out, l_out}, std::move(out));

  Tape* tp = common_tape({&x, &kernels});
  if (!tp) return t;
  Shared vx = x.storage(), vw = kernels.storage();
  return tp->emit(std::move(t), {&x, &kernels},
                  [vx, vw, c_in, len, c_out, k, stride, padding, l_out](const Array& g,
                                                                        GradSink& sink) {
    ConstMatMap gm(g.data(), c_out, l_out);
    ConstMatMap wm(vw->data(), c_out, c_in * k);
    MatrixRM cols = im2col(*vx, c_in, len, k, stride, padding, l_out);

    Array dw(c_out * c_in * k);
    MatMap(dw.data(), c_out, c_in * k).noalias() = gm * cols.transpose();
    sink.add(1, dw);

    MatrixRM dcols(c_in * k, l_out);
    dcols.noalias() = wm.transpose() * gm;
    Array dx = Array::Zero(c_in * len);
    MatMap dxm(dx.data(), c_in, len);
    for (int j = 0; j < l_out; ++j) {
      const int base = j * stride - padding;
      for (int t = 0; t < k; ++t) {
        const int pos = base + t;
        if (pos < 0 || pos >= len) continue;
        for (int ci = 0; ci < c_in; ++ci) dxm(ci, pos) += dcols(ci * k + t, j);
      }
    }
    sink.add(0, dx);
  });
}

Tensor avg_pool1d(const Tensor& x, int k, int stride) {
  if (x.ndim() != 2) throw std::invalid_argument("avg_pool1d: input must be [C, L]");
  if (k < 1 || stride < 1) throw std::invalid_argument("avg_pool1d: k and stride must be >= 1");
  const int c = x.rows(), len = x.cols();
  if (k > len) throw std::invalid_argument("avg_pool1d: window longer than input");
  const int l_out = (len - k) / stride + 1;
  ConstMatMap xm(x.values().data(), c, len);
  Array out(c * l_out);
  MatMap om(out.data(), c, l_out);
  for (int j = 0; j < l_out; ++j) om.col(j) = xm.middleCols(j * stride, k).rowwise().mean();
  Tensor t({c, l_out}, std::move(out));
  Tape* tp = common_tape({&x});
  if (!tp) return t;
  return tp->emit(std::move(t), {&x}, [c, len, k, stride, l_out](const Array& g, GradSink& sink) {
    ConstMatMap gm(g.data(), c, l_out);
    Array dx = Array::Zero(c * len);
    MatMap dxm(dx.data(), c, len);
    const double inv = 1.0 / k;
    for (int j = 0; j < l_out; ++j) {
      for (int t = 0; t < k; ++t) dxm.col(j * stride + t) += gm.col(j) * inv;
    }
    sink.add(0, dx);
  });
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.ndim() != 2) throw std::invalid_argument("global_avg_pool: input must be [C, L]");
  const int c = x.rows(), len = x.cols();
  if (len < 1) throw std::invalid_argument("global_avg_pool: empty input");
  Array out = x.as_matrix().rowwise().mean();
  Tensor t({c}, std::move(out));
  Tape* tp = common_tape({&x});
  if (!tp) return t;
  return tp->emit(std::move(t), {&x}, [c, len](const Array& g, GradSink& sink) {
    Array dx(c * len);
    MatMap dxm(dx.data(), c, len);
    for (int i = 0; i < c; ++i) dxm.row(i).setConstant(g[i] / len);
    sink.add(0, dx);
  });
}

namespace {

constexpr double kLeakySlope = 0.01;

double sigmoid_stable(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor elementwise(Unary op, const Tensor& x) {
  const Array& v = x.values();
  if ((op == Unary::Log || op == Unary::Lgamma) && !(v > 0.0).all()) {
    throw std::domain_error("elementwise: log/lgamma require strictly positive inputs");
  }
  Array out(v.size());
  switch (op) {
    case Unary::Relu:      out = v.max(0.0); break;
    case Unary::LeakyRelu: out = (v > 0.0).select(v, v * kLeakySlope); break;
    case Unary::Sigmoid:   out = v.unaryExpr([](double a) { return sigmoid_stable(a); }); break;
    case Unary::Tanh:      out = v.tanh(); break;
    case Unary::Softplus:
      // log1p(exp(-|x|)) + max(x, 0), stable for large |x|
      out = v.unaryExpr([](double a) { return std::log1p(std::exp(-std::abs(a))) + std::max(a, 0.0); });
      break;
    case Unary::Exp:       out = v.exp(); break;
    case Unary::Log:       out = v.log(); break;
    case Unary::Lgamma:    out = v.unaryExpr([](double a) { return lgamma_approx(a); }); break;
  }
  Tensor t(x.shape(), std::move(out));
  Tape* tp = common_tape({&x});
  if (!tp) return t;
  Shared vx = x.storage(), vy = t.storage();
  return tp->emit(std::move(t), {&x}, [op, vx, vy](const Array& g, GradSink& sink) {
    const Array& in = *vx;
    const Array& y = *vy;
    Array d(in.size());
    switch (op) {
      case Unary::Relu:      d = (in > 0.0).cast<double>(); break;
      case Unary::LeakyRelu: d = (in > 0.0).select(Array::Ones(in.size()), Array::Constant(in.size(), kLeakySlope)); break;
      case Unary::Sigmoid:   d = y * (1.0 - y); break;
      case Unary::Tanh:      d = 1.0 - y * y; break;
      case Unary::Softplus:  d = in.unaryExpr([](double a) { return sigmoid_stable(a); }); break;
      case Unary::Exp:       d = y; break;
      case Unary::Log:       d = in.inverse(); break;
      case Unary::Lgamma:    d = in.unaryExpr([](double a) { return digamma(a); }); break;
    }
    sink.add(0, g * d);
  });
}

Tensor relu(const Tensor& x) { return elementwise(Unary::Relu, x); }
Tensor leaky_relu(const Tensor& x) { return elementwise(Unary::LeakyRelu, x); }
Tensor sigmoid(const Tensor& x) { return elementwise(Unary::Sigmoid, x); }
Tensor tanh(const Tensor& x) { return elementwise(Unary::Tanh, x); }
Tensor softplus(const Tensor& x) { return elementwise(Unary::Softplus, x); }
Tensor exp(const Tensor& x) { return elementwise(Unary::Exp, x); }
Tensor log(const Tensor& x) { return elementwise(Unary::Log, x); }
Tensor lgamma(const Tensor& x) { return elementwise(Unary::Lgamma, x); }

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array mask(x.size());
  for (int i = 0; i < x.size(); ++i) mask[i] = (u(rng) >= rate) ? 1.0 / keep : 0.0;
  Tensor t(x.shape(), x.values() * mask);
  Tape* tp = common_tape({&x});
  if (!tp) return t;
  auto m = std::make_shared<Array>(std::move(mask));
  return tp->emit(std::move(t), {&x},
                  [m](const Array& g, GradSink& sink) { sink.add(0, g * (*m)); });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  Tensor t(std::move(shape), x.storage());
  Tape* tp = common_tape({&x});
  if (!tp) return t;
  return tp->emit(std::move(t), {&x},
                  [](const Array& g, GradSink& sink) { sink.add(0, g); });
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const int nd = xs[0].ndim();
  if (axis < 0 || axis >= nd) throw std::invalid_argument("concat: axis out of range");
  for (const Tensor& t : xs) {
    if (t.ndim() != nd) throw std::invalid_argument("concat: rank mismatch");
    for (int a = 0; a < nd; ++a) {
      if (a != axis && t.dim(a) != xs[0].dim(a)) throw std::invalid_argument("concat: shape mismatch");
    }
  }
  std::vector<const Tensor*> parents;
  parents.reserve(xs.size());
  for (const Tensor& t : xs) parents.push_back(&t);

  Tensor out;
  std::vector<int> extents;  // per input, extent along axis
  for (const Tensor& t : xs) extents.push_back(nd == 1 ? t.dim(0) : t.dim(axis));

  if (nd == 1 || (nd == 2 && axis == 0)) {
    // storage is row-major, so both cases are flat contiguous concatenation
    int total = 0;
    for (const Tensor& t : xs) total += t.size();
    Array v(total);
    int off = 0;
    for (const Tensor& t : xs) {
      v.segment(off, t.size()) = t.values();
      off += t.size();
    }
    std::vector<int> shape = xs[0].shape();
    int sum_axis = 0;
    for (int e : extents) sum_axis += e;
    shape[axis] = sum_axis;
    out = Tensor(std::move(shape), std::move(v));
  } else if (nd == 2 && axis == 1) {
    const int r = xs[0].rows();
    int total_cols = 0;
    for (int e : extents) total_cols += e;
    Array v(r * total_cols);
    MatMap vm(v.data(), r, total_cols);
    int off = 0;
    for (const Tensor& t : xs) {
      vm.middleCols(off, t.cols()) = t.as_matrix();
      off += t.cols();
    }
    out = Tensor({r, total_cols}, std::move(v));
  } else {
    throw std::invalid_argument("concat: only 1-D and 2-D supported");
  }

  Tape* tp = nullptr;
  for (const Tensor& t : xs) {
    if (t.tracked()) {
      if (tp && tp != t.tape()) throw std::logic_error("concat: mixed tapes");
      tp = t.tape();
    }
  }
  if (!tp) return out;

  const int rows0 = nd == 2 ? xs[0].rows() : 0;
  return tp->emit(std::move(out), parents,
                  [nd, axis, extents, rows0](const Array& g, GradSink& sink) {
    if (nd == 1 || (nd == 2 && axis == 0)) {
      int off = 0;
      int row_width = 1;
      if (nd == 2) {
        int total = 0;
        for (int e : extents) total += e;
        row_width = static_cast<int>(g.size()) / total;
      }
      for (size_t i = 0; i < extents.size(); ++i) {
        const int n = extents[i] * row_width;
        sink.add(static_cast<int>(i), Array(g.segment(off, n)));
        off += n;
      }
    } else {
      int total_cols = 0;
      for (int e : extents) total_cols += e;
      ConstMatMap gm(g.data(), rows0, total_cols);
      int off = 0;
      for (size_t i = 0; i < extents.size(); ++i) {
        Array part(rows0 * extents[i]);
        MatMap(part.data(), rows0, extents[i]) = gm.middleCols(off, extents[i]);
        sink.add(static_cast<int>(i), part);
        off += extents[i];
      }
    }
  });
}

Tensor slice(const Tensor& x, int axis, int start, int count) {
  if (axis < 0 || axis >= x.ndim()) throw std::invalid_argument("slice: axis out of range");
  if (start < 0 || count < 0 || start + count > x.dim(axis)) {
    throw std::invalid_argument("slice: range out of bounds");
  }
  Tensor out;
  if (x.ndim() == 1) {
    out = Tensor({count}, Array(x.values().segment(start, count)));
  } else if (x.ndim() == 2 && axis == 0) {
    const int c = x.cols();
    out = Tensor({count, c}, Array(x.values().segment(start * c, count * c)));
  } else if (x.ndim() == 2 && axis == 1) {
    Array v(x.rows() * count);
    MatMap(v.data(), x.rows(), count) = x.as_matrix().middleCols(start, count);
    out = Tensor({x.rows(), count}, std::move(v));
  } else {
    throw std::invalid_argument("slice: only 1-D and 2-D supported");
  }
  Tape* tp = common_tape({&x});
  if (!tp) return out;
  const int nd = x.ndim(), rows = nd == 2 ? x.rows() : 0, cols = nd == 2 ? x.cols() : x.dim(0);
  return tp->emit(std::move(out), {&x},
                  [nd, axis, start, count, rows, cols](const Array& g, GradSink& sink) {
    if (nd == 1) {
      Array dx = Array::Zero(cols);
      dx.segment(start, count) = g;
      sink.add(0, dx);
    } else if (axis == 0) {
      Array dx = Array::Zero(rows * cols);
      dx.segment(start * cols, count * cols) = g;
      sink.add(0, dx);
    } else {
      Array dx = Array::Zero(rows * cols);
      MatMap(dx.data(), rows, cols).middleCols(start, count) = ConstMatMap(g.data(), rows, count);
      sink.add(0, dx);
    }
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  if (x.ndim() != 2) throw std::invalid_argument("gather_rows: input must be 2-D");
  const int n = x.rows(), d = x.cols();
  for (int i : idx) {
    if (i < 0 || i >= n) throw std::invalid_argument("gather_rows: index out of range");
  }
  const int m = static_cast<int>(idx.size());
  Array v(m * d);
  MatMap vm(v.data(), m, d);
  ConstMatMap xm(x.values().data(), n, d);
  for (int i = 0; i < m; ++i) vm.row(i) = xm.row(idx[i]);
  Tensor out({m, d}, std::move(v));
  Tape* tp = common_tape({&x});
  if (!tp) return out;
  return tp->emit(std::move(out), {&x}, [idx, n, d, m](const Array& g, GradSink& sink) {
    Array dx = Array::Zero(n * d);
    MatMap dxm(dx.data(), n, d);
    ConstMatMap gm(g.data(), m, d);
    for (int i = 0; i < m; ++i) dxm.row(idx[i]) += gm.row(i);
    sink.add(0, dx);
  });
}

Tensor sum(const Tensor& x) {
  Tensor out = Tensor::scalar(x.values().sum());
  Tape* tp = common_tape({&x});
  if (!tp) return out;
  const int n = x.size();
  return tp->emit(std::move(out), {&x}, [n](const Array& g, GradSink& sink) {
    sink.add(0, Array::Constant(n, g[0]));
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(x), 1.0 / x.size());
}

Tensor sum(const Tensor& x, int axis) {
  if (x.ndim() == 1) {
    if (axis != 0) throw std::invalid_argument("sum: axis out of range");
    return sum(x);
  }
  if (x.ndim() != 2 || axis < 0 || axis > 1) throw std::invalid_argument("sum: axis out of range");
  const int r = x.rows(), c = x.cols();
  Tensor out;
  if (axis == 0) {
    out = Tensor({c}, Array(x.as_matrix().colwise().sum().transpose()));
  } else {
    out = Tensor({r}, Array(x.as_matrix().rowwise().sum()));
  }
  Tape* tp = common_tape({&x});
  if (!tp) return out;
  return tp->emit(std::move(out), {&x}, [axis, r, c](const Array& g, GradSink& sink) {
    Array dx(r * c);
    MatMap dxm(dx.data(), r, c);
    if (axis == 0) {
      for (int i = 0; i < r; ++i) dxm.row(i) = Eigen::Map<const Eigen::RowVectorXd>(g.data(), c);
    } else {
      for (int j = 0; j < c; ++j) dxm.col(j) = Eigen::Map<const Eigen::VectorXd>(g.data(), r);
    }
    sink.add(0, dx);
  });
}

Tensor mean(const Tensor& x, int axis) {
  Tensor s = sum(x, axis);
  const int n = (x.ndim() == 1 || axis == 0) ? x.dim(0) : x.dim(1);
  return scale(s, 1.0 / n);
}

}  // namespace rulgn
