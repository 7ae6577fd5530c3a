#include "termspan/graph.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace termspan::ad {

Var Graph::make(Matrix value, std::function<void(Graph&)> back) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Matrix& Graph::grad_ref(std::int32_t index) {
  Node& n = nodes_[index];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Matrix value) { return make(std::move(value)); }

Var Graph::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return make(std::move(m));
}

Var Graph::param(Parameter& p) {
  Var out = make(p.value);
  Parameter* ptr = &p;
  const auto self = out.index;
  nodes_[self].back = [self, ptr](Graph& g) { ptr->grad += g.nodes_[self].grad; };
  return out;
}

Var Graph::lookup(Parameter& table, Index column) {
  Var out = make(table.value.col(column));
  Parameter* ptr = &table;
  const auto self = out.index;
  nodes_[self].back = [self, ptr, column](Graph& g) {
    ptr->grad.col(column) += g.nodes_[self].grad;
  };
  return out;
}

Var Graph::matmul(Var a, Var b) {
  Var out = make(nodes_[a.index].value * nodes_[b.index].value);
  const auto self = out.index;
  nodes_[self].back = [self, a, b](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    g.grad_ref(a.index).noalias() += gy * g.nodes_[b.index].value.transpose();
    g.grad_ref(b.index).noalias() += g.nodes_[a.index].value.transpose() * gy;
  };
  return out;
}

Var Graph::matmul_t(Var a, Var b) {
  Var out = make(nodes_[a.index].value.transpose() * nodes_[b.index].value);
  const auto self = out.index;
  nodes_[self].back = [self, a, b](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    g.grad_ref(a.index).noalias() += g.nodes_[b.index].value * gy.transpose();
    g.grad_ref(b.index).noalias() += g.nodes_[a.index].value * gy;
  };
  return out;
}

Var Graph::affine(Var w, Var x, Var b) {
  Matrix y = nodes_[w.index].value * nodes_[x.index].value;
  y.colwise() += nodes_[b.index].value.col(0);
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, w, x, b](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    g.grad_ref(w.index).noalias() += gy * g.nodes_[x.index].value.transpose();
    g.grad_ref(x.index).noalias() += g.nodes_[w.index].value.transpose() * gy;
    g.grad_ref(b.index).col(0) += gy.rowwise().sum();
  };
  return out;
}

Var Graph::add(Var a, Var b) {
  Var out = make(nodes_[a.index].value + nodes_[b.index].value);
  const auto self = out.index;
  nodes_[self].back = [self, a, b](Graph& g) {
    g.grad_ref(a.index) += g.nodes_[self].grad;
    g.grad_ref(b.index) += g.nodes_[self].grad;
  };
  return out;
}

Var Graph::sub(Var a, Var b) {
  Var out = make(nodes_[a.index].value - nodes_[b.index].value);
  const auto self = out.index;
  nodes_[self].back = [self, a, b](Graph& g) {
    g.grad_ref(a.index) += g.nodes_[self].grad;
    g.grad_ref(b.index) -= g.nodes_[self].grad;
  };
  return out;
}

Var Graph::cmul(Var a, Var b) {
  Var out = make(nodes_[a.index].value.cwiseProduct(nodes_[b.index].value));
  const auto self = out.index;
  nodes_[self].back = [self, a, b](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    g.grad_ref(a.index) += gy.cwiseProduct(g.nodes_[b.index].value);
    g.grad_ref(b.index) += gy.cwiseProduct(g.nodes_[a.index].value);
  };
  return out;
}

Var Graph::scale(Var a, double s) { return axpb(a, s, 0.0); }

Var Graph::axpb(Var a, double mul, double add) {
  Var out = make((nodes_[a.index].value.array() * mul + add).matrix());
  const auto self = out.index;
  nodes_[self].back = [self, a, mul](Graph& g) {
    g.grad_ref(a.index) += mul * g.nodes_[self].grad;
  };
  return out;
}

Var Graph::tanh(Var a) {
  Var out = make(nodes_[a.index].value.array().tanh().matrix());
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    const Matrix& y = g.nodes_[self].value;
    g.grad_ref(a.index).array() +=
        g.nodes_[self].grad.array() * (1.0 - y.array().square());
  };
  return out;
}

Var Graph::sigmoid(Var a) {
  Matrix y = nodes_[a.index].value.unaryExpr([](Scalar x) { return termspan::sigmoid(x); });
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    const Matrix& y = g.nodes_[self].value;
    g.grad_ref(a.index).array() += g.nodes_[self].grad.array() * y.array() * (1.0 - y.array());
  };
  return out;
}

Var Graph::softmax(Var a) {
  const Matrix& v = nodes_[a.index].value;
  assert(v.cols() == 1);
  Var out = make(termspan::softmax(v.col(0)));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    const Matrix& y = g.nodes_[self].value;
    const Matrix& gy = g.nodes_[self].grad;
    const double dot = (gy.array() * y.array()).sum();
    g.grad_ref(a.index).array() += y.array() * (gy.array() - dot);
  };
  return out;
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
  Index rows = 0;
  const Index cols = nodes_[parts.front().index].value.cols();
  for (Var p : parts) rows += nodes_[p.index].value.rows();
  Matrix y(rows, cols);
  Index at = 0;
  for (Var p : parts) {
    const Matrix& v = nodes_[p.index].value;
    y.middleRows(at, v.rows()) = v;
    at += v.rows();
  }
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, parts](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    Index at = 0;
    for (Var p : parts) {
      const Index r = g.nodes_[p.index].value.rows();
      g.grad_ref(p.index) += gy.middleRows(at, r);
      at += r;
    }
  };
  return out;
}

Var Graph::slice_rows(Var a, Index start, Index count) {
  Var out = make(nodes_[a.index].value.middleRows(start, count));
  const auto self = out.index;
  nodes_[self].back = [self, a, start, count](Graph& g) {
    g.grad_ref(a.index).middleRows(start, count) += g.nodes_[self].grad;
  };
  return out;
}

Var Graph::pad_rows(Var a, Index total_rows) {
  const Matrix& v = nodes_[a.index].value;
  if (v.rows() > total_rows) throw std::logic_error("pad_rows: input taller than target");
  Matrix y = Matrix::Zero(total_rows, v.cols());
  y.topRows(v.rows()) = v;
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    const Index r = g.nodes_[a.index].value.rows();
    g.grad_ref(a.index) += g.nodes_[self].grad.topRows(r);
  };
  return out;
}

Var Graph::cols(Var a, Index start, Index count) {
  Var out = make(nodes_[a.index].value.middleCols(start, count));
  const auto self = out.index;
  nodes_[self].back = [self, a, start, count](Graph& g) {
    g.grad_ref(a.index).middleCols(start, count) += g.nodes_[self].grad;
  };
  return out;
}

Var Graph::hstack(const std::vector<Var>& parts) {
  const Index rows = nodes_[parts.front().index].value.rows();
  Index cols = 0;
  for (Var p : parts) cols += nodes_[p.index].value.cols();
  Matrix y(rows, cols);
  Index at = 0;
  for (Var p : parts) {
    const Matrix& v = nodes_[p.index].value;
    y.middleCols(at, v.cols()) = v;
    at += v.cols();
  }
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, parts](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    Index at = 0;
    for (Var p : parts) {
      const Index c = g.nodes_[p.index].value.cols();
      g.grad_ref(p.index) += gy.middleCols(at, c);
      at += c;
    }
  };
  return out;
}

Var Graph::flatten(Var a) {
  const Matrix& v = nodes_[a.index].value;
  Matrix y = Eigen::Map<const Matrix>(v.data(), v.size(), 1);
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    const Matrix& src = g.nodes_[a.index].value;
    Matrix& ga = g.grad_ref(a.index);
    ga += Eigen::Map<const Matrix>(g.nodes_[self].grad.data(), src.rows(), src.cols());
  };
  return out;
}

Var Graph::scale_cols(Var m, Var weights) {
  const Matrix& v = nodes_[m.index].value;
  const Matrix& w = nodes_[weights.index].value;
  assert(w.cols() == 1 && w.rows() == v.cols());
  Matrix y = v.array().rowwise() * w.col(0).transpose().array();
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, m, weights](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    const Matrix& v = g.nodes_[m.index].value;
    const Matrix& w = g.nodes_[weights.index].value;
    g.grad_ref(m.index).array() += gy.array().rowwise() * w.col(0).transpose().array();
    g.grad_ref(weights.index).col(0) += (v.array() * gy.array()).colwise().sum().transpose().matrix();
  };
  return out;
}

Var Graph::mean_cols(Var m) {
  const Matrix& v = nodes_[m.index].value;
  Var out = make(v.rowwise().mean());
  const auto self = out.index;
  nodes_[self].back = [self, m](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    Matrix& gm = g.grad_ref(m.index);
    gm.colwise() += (gy / static_cast<double>(gm.cols())).col(0);
  };
  return out;
}

Var Graph::max_cols(Var m) {
  const Matrix& v = nodes_[m.index].value;
  Matrix y(v.rows(), 1);
  std::vector<Index> argmax(static_cast<std::size_t>(v.rows()));
  for (Index i = 0; i < v.rows(); ++i) {
    Index j;
    y(i, 0) = v.row(i).maxCoeff(&j);
    argmax[static_cast<std::size_t>(i)] = j;
  }
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, m, argmax](Graph& g) {
    const Matrix& gy = g.nodes_[self].grad;
    Matrix& gm = g.grad_ref(m.index);
    for (Index i = 0; i < gm.rows(); ++i) {
      gm(i, argmax[static_cast<std::size_t>(i)]) += gy(i, 0);
    }
  };
  return out;
}

Var Graph::mean_all(Var a) {
  Matrix y(1, 1);
  y(0, 0) = nodes_[a.index].value.mean();
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    Matrix& ga = g.grad_ref(a.index);
    ga.array() += g.nodes_[self].grad(0, 0) / static_cast<double>(ga.size());
  };
  return out;
}

Var Graph::sum_all(Var a) {
  Matrix y(1, 1);
  y(0, 0) = nodes_[a.index].value.sum();
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, a](Graph& g) {
    g.grad_ref(a.index).array() += g.nodes_[self].grad(0, 0);
  };
  return out;
}

Var Graph::dropout(Var a, double rate) {
  if (!train_mode_ || rate <= 0.0) return a;
  if (rng_ == nullptr) throw std::logic_error("dropout requires a graph RNG in train mode");
  const Matrix& v = nodes_[a.index].value;
  const double keep = 1.0 - rate;
  Matrix mask(v.rows(), v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) {
      mask(i, j) = rng_->bernoulli(keep) ? 1.0 / keep : 0.0;
    }
  }
  Var out = make(v.cwiseProduct(mask));
  const auto self = out.index;
  nodes_[self].back = [self, a, mask](Graph& g) {
    g.grad_ref(a.index) += g.nodes_[self].grad.cwiseProduct(mask);
  };
  return out;
}

Var Graph::bce_with_logit(Var logit, double label) {
  const double z = nodes_[logit.index].value(0, 0);
  // Stable form of -(y log p + (1-y) log(1-p)) with p = sigmoid(z).
  const double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
  Matrix y(1, 1);
  y(0, 0) = loss;
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, logit, label, z](Graph& g) {
    g.grad_ref(logit.index)(0, 0) +=
        g.nodes_[self].grad(0, 0) * (termspan::sigmoid(z) - label);
  };
  return out;
}

Var Graph::bce_with_logits_mean(Var logits, std::vector<double> labels) {
  const Matrix& z = nodes_[logits.index].value;
  if (z.rows() != 1 || static_cast<std::size_t>(z.cols()) != labels.size()) {
    throw std::logic_error("bce_with_logits_mean expects a 1xC row matching the labels");
  }
  double total = 0.0;
  for (Index i = 0; i < z.cols(); ++i) {
    const double zi = z(0, i);
    total += std::max(zi, 0.0) - zi * labels[static_cast<std::size_t>(i)] +
             std::log1p(std::exp(-std::abs(zi)));
  }
  Matrix y(1, 1);
  y(0, 0) = total / static_cast<double>(labels.size());
  Var out = make(std::move(y));
  const auto self = out.index;
  nodes_[self].back = [self, logits, labels = std::move(labels)](Graph& g) {
    const double gy = g.nodes_[self].grad(0, 0) / static_cast<double>(labels.size());
    const Matrix& z = g.nodes_[logits.index].value;
    Matrix& gz = g.grad_ref(logits.index);
    for (Index i = 0; i < z.cols(); ++i) {
      gz(0, i) += gy * (termspan::sigmoid(z(0, i)) - labels[static_cast<std::size_t>(i)]);
    }
  };
  return out;
}

void Graph::backward(Var root) {
  const Matrix& rv = nodes_[root.index].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw std::logic_error("backward root must be a 1x1 value");
  }
  grad_ref(root.index)(0, 0) = 1.0;
  for (std::int32_t i = root.index; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() > 0 && n.back) n.back(*this);
  }
}

}  // namespace termspan::ad
