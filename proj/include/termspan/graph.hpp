#ifndef TERMSPAN_GRAPH_HPP
#define TERMSPAN_GRAPH_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "termspan/params.hpp"
#include "termspan/rng.hpp"
#include "termspan/types.hpp"

namespace termspan::ad {

struct Var {
  std::int32_t index = -1;
  bool valid() const { return index >= 0; }
};

// Dynamically built computation tape. Values are computed eagerly at node
// creation; backward() walks the tape in reverse and accumulates gradients
// into node slots and bound Parameters. One graph per batch; nodes are only
// valid for the lifetime of the graph that created them.
class Graph {
 public:
  explicit Graph(bool train_mode = false, Rng* rng = nullptr)
      : train_mode_(train_mode), rng_(rng) {}

  bool train_mode() const { return train_mode_; }

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  const Matrix& gradient(Var v) const { return nodes_[v.index].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Leaves.
  Var constant(Matrix value);
  Var scalar(double v);
  Var param(Parameter& p);
  Var lookup(Parameter& table, Index column);

  // Linear algebra.
  Var matmul(Var a, Var b);
  Var matmul_t(Var a, Var b);  // a^T * b
  Var affine(Var w, Var x, Var b);  // w*x + b, bias broadcast over columns
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var scale(Var a, double s);
  Var axpb(Var a, double mul, double add);  // elementwise mul*a + add

  // Nonlinearities.
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);  // column vector

  // Shape ops.
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_rows(Var a, Index start, Index count);
  Var pad_rows(Var a, Index total_rows);
  Var cols(Var a, Index start, Index count);
  Var hstack(const std::vector<Var>& parts);
  Var flatten(Var a);  // column-major vectorization

  // Reductions and column-wise ops.
  Var scale_cols(Var m, Var weights);  // column j scaled by weights[j]
  Var mean_cols(Var m);
  Var max_cols(Var m);  // row-wise max over columns
  Var mean_all(Var a);
  Var sum_all(Var a);

  // Regularization / losses.
  Var dropout(Var a, double rate);
  Var bce_with_logit(Var logit, double label);
  // Mean binary cross-entropy of a 1xC logit row against per-column labels.
  Var bce_with_logits_mean(Var logits, std::vector<double> labels);

  // Backpropagates from a 1x1 root. May be called once per graph.
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Graph&)> back;
  };

  Var make(Matrix value, std::function<void(Graph&)> back = nullptr);
  Matrix& grad_ref(std::int32_t index);
  bool has_grad(std::int32_t index) const { return nodes_[index].grad.size() > 0; }

  std::vector<Node> nodes_;
  bool train_mode_ = false;
  Rng* rng_ = nullptr;
};

}  // namespace termspan::ad

#endif  // TERMSPAN_GRAPH_HPP
