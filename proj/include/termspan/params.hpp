#ifndef TERMSPAN_PARAMS_HPP
#define TERMSPAN_PARAMS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "termspan/rng.hpp"
#include "termspan/types.hpp"

namespace termspan {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Owns the parameters of one optimization stage. Insertion order is the
// serialization and digest order, so it must be construction-deterministic.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Index rows, Index cols);
  Parameter* find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::vector<Parameter*> pointers() const;

  std::size_t count() const { return params_.size(); }
  std::size_t total_values() const;
  void zero_grads();

  // SHA-256 over names, shapes and raw values; the stage freeze contract is
  // checked by comparing digests before and after stage-two training.
  std::string digest() const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& snap);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

void init_uniform(Parameter& p, Rng& rng, double bound);
// Uniform Glorot initialization from the parameter's fan-in/fan-out.
void init_glorot(Parameter& p, Rng& rng);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg);

  // Applies one update from accumulated gradients, then clears them.
  void step();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace termspan

#endif  // TERMSPAN_PARAMS_HPP
