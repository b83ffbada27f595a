#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uemb {

enum class TableKind { word, user, item };

const char* to_string(TableKind kind);

struct TrainConfig {
  int dim = 300;
  double learning_rate = 1e-5;
  int epochs = 5;
  int negatives = 5;
  int window = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double init_scale = 0.0;  // 0: use 0.5 / dim
  std::uint64_t seed = 42;

  double effective_init_scale() const {
    return init_scale > 0.0 ? init_scale : 0.5 / static_cast<double>(dim);
  }
  void validate() const;
};

// Dense rows plus per-row Adam state (first/second moments and a step
// counter), so sparse updates only pay for the rows they touch.
class EmbeddingTable {
 public:
  EmbeddingTable(TableKind kind, std::size_t rows, int dim);

  TableKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }
  int dim() const { return dim_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_u_, dim_u_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_u_, dim_u_}; }
  std::span<double> moment1(std::size_t r) { return {m_.data() + r * dim_u_, dim_u_}; }
  std::span<double> moment2(std::size_t r) { return {v_.data() + r * dim_u_, dim_u_}; }
  std::uint64_t step(std::size_t r) const { return t_[r]; }

  // Advances the row's step counter and returns the running beta powers
  // (beta1^t, beta2^t), maintained incrementally.
  std::pair<double, double> advance_step(std::size_t r, double beta1, double beta2) {
    ++t_[r];
    beta1_pow_[r] *= beta1;
    beta2_pow_[r] *= beta2;
    return {beta1_pow_[r], beta2_pow_[r]};
  }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const EmbeddingTable& other) const {
    return kind_ == other.kind_ && dim_ == other.dim_ && data_ == other.data_;
  }

 private:
  TableKind kind_;
  std::size_t rows_;
  int dim_;
  std::size_t dim_u_;
  std::vector<double> data_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<std::uint64_t> t_;
  std::vector<double> beta1_pow_;
  std::vector<double> beta2_pow_;
};

double dot(std::span<const double> a, std::span<const double> b);
double sigmoid(double x);

// sigmoid(a . t); stable across the double range.
double score(std::span<const double> a, std::span<const double> t);

// Binary cross-entropy of sigmoid(a . t) against label, with analytic
// gradients. grad_anchor/grad_target must have the common dimension.
// Returns the loss; probabilities are floored at 1e-12 inside the logs,
// gradients are exact: (sigmoid(s) - label) * other-vector.
double loss_and_grad(std::span<const double> anchor, std::span<const double> target,
                     int label, std::span<double> grad_anchor, std::span<double> grad_target);

struct LossGrad {
  double loss;
  std::vector<double> grad_anchor;
  std::vector<double> grad_target;
};
LossGrad loss_and_grad(std::span<const double> anchor, std::span<const double> target, int label);

// Lazy per-row Adam step: bumps the row's counter, updates its moments and
// applies the bias-corrected update. Other rows are untouched.
void adam_update(EmbeddingTable& table, std::size_t row, std::span<const double> grad,
                 const TrainConfig& config);

struct Model {
  EmbeddingTable words;
  EmbeddingTable users;
  EmbeddingTable items;
};

// Uniform init in [-s, +s] with s = init_scale (default 0.5/dim); seeded.
Model init_model(std::size_t vocab_size, std::size_t n_users, std::size_t n_items,
                 const TrainConfig& config);

}  // namespace uemb
