#include "termspan/params.hpp"

#include <cmath>
#include <stdexcept>

#include "termspan/sha256.hpp"

namespace termspan {

Parameter& ParameterStore::add(const std::string& name, Index rows, Index cols) {
  if (find(name) != nullptr) throw std::logic_error("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParameterStore::pointers() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

std::string ParameterStore::digest() const {
  Sha256 h;
  for (const auto& p : params_) {
    h.update(p->name.data(), p->name.size());
    const std::int64_t shape[2] = {p->value.rows(), p->value.cols()};
    h.update(shape, sizeof(shape));
    h.update(p->value.data(), sizeof(Scalar) * static_cast<std::size_t>(p->value.size()));
  }
  return h.hex_digest();
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p->value);
  return snap;
}

void ParameterStore::restore(const std::vector<Matrix>& snap) {
  if (snap.size() != params_.size()) throw std::logic_error("snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) params_[i]->value = snap[i];
}

void init_uniform(Parameter& p, Rng& rng, double bound) {
  for (Index j = 0; j < p.value.cols(); ++j) {
    for (Index i = 0; i < p.value.rows(); ++i) {
      p.value(i, j) = rng.uniform(-bound, bound);
    }
  }
}

void init_glorot(Parameter& p, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  init_uniform(p, rng, bound);
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const auto* p : params_) {
    first_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Matrix& m = first_moment_[i];
    Matrix& v = second_moment_[i];
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * p.grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    const auto m_hat = m.array() / bias1;
    const auto v_hat = v.array() / bias2;
    p.value.array() -= cfg_.learning_rate * m_hat / (v_hat.sqrt() + cfg_.epsilon);
    p.zero_grad();
  }
}

}  // namespace termspan
