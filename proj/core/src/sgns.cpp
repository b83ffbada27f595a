#include "uemb/sgns.hpp"

#include <cmath>
#include <string>

#include "uemb/error.hpp"
#include "uemb/rng.hpp"

namespace uemb {

const char* to_string(TableKind kind) {
  switch (kind) {
    case TableKind::word: return "word";
    case TableKind::user: return "user";
    case TableKind::item: return "item";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (dim < 1) throw_config("dim must be >= 1");
  if (learning_rate <= 0.0) throw_config("learning_rate must be > 0");
  if (negatives < 1) throw_config("negatives must be >= 1");
  if (window < 1) throw_config("window must be >= 1");
  if (epochs < 0) throw_config("epochs must be >= 0");
}

EmbeddingTable::EmbeddingTable(TableKind kind, std::size_t rows, int dim)
    : kind_(kind),
      rows_(rows),
      dim_(dim),
      dim_u_(static_cast<std::size_t>(dim)),
      data_(rows * dim_u_, 0.0),
      m_(rows * dim_u_, 0.0),
      v_(rows * dim_u_, 0.0),
      t_(rows, 0),
      beta1_pow_(rows, 1.0),
      beta2_pow_(rows, 1.0) {}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw_numeric("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                  std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double score(std::span<const double> a, std::span<const double> t) {
  return sigmoid(dot(a, t));
}

double loss_and_grad(std::span<const double> anchor, std::span<const double> target,
                     int label, std::span<double> grad_anchor, std::span<double> grad_target) {
  constexpr double kEps = 1e-12;
  const double s = dot(anchor, target);
  if (!std::isfinite(s)) throw_numeric("non-finite dot product in loss_and_grad");
  const double p = sigmoid(s);
  const double y = label ? 1.0 : 0.0;
  const double clamped = std::min(1.0 - kEps, std::max(kEps, p));
  const double loss = -(y * std::log(clamped) + (1.0 - y) * std::log(1.0 - clamped));
  const double coeff = p - y;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    grad_anchor[i] = coeff * target[i];
    grad_target[i] = coeff * anchor[i];
  }
  if (!std::isfinite(loss)) throw_numeric("non-finite loss for pair");
  return loss;
}

LossGrad loss_and_grad(std::span<const double> anchor, std::span<const double> target, int label) {
  LossGrad out;
  out.grad_anchor.resize(anchor.size());
  out.grad_target.resize(target.size());
  out.loss = loss_and_grad(anchor, target, label, out.grad_anchor, out.grad_target);
  return out;
}

void adam_update(EmbeddingTable& table, std::size_t row, std::span<const double> grad,
                 const TrainConfig& config) {
  if (grad.size() != static_cast<std::size_t>(table.dim())) {
    throw_numeric("gradient dimension " + std::to_string(grad.size()) +
                  " does not match table dim " + std::to_string(table.dim()));
  }
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const auto [b1_pow, b2_pow] = table.advance_step(row, b1, b2);
  const double bc1 = 1.0 - b1_pow;
  const double bc2 = 1.0 - b2_pow;
  auto x = table.row(row);
  auto m = table.moment1(row);
  auto v = table.moment2(row);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    x[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
}

Model init_model(std::size_t vocab_size, std::size_t n_users, std::size_t n_items,
                 const TrainConfig& config) {
  config.validate();
  if (vocab_size < 1 || n_users < 1 || n_items < 1) {
    throw_config("model needs at least one word, user and item");
  }
  Model model{EmbeddingTable(TableKind::word, vocab_size, config.dim),
              EmbeddingTable(TableKind::user, n_users, config.dim),
              EmbeddingTable(TableKind::item, n_items, config.dim)};
  const double s = config.effective_init_scale();
  Rng rng(mix_seed(config.seed, 0x696e6974ULL));  // dedicated init stream
  for (EmbeddingTable* t : {&model.words, &model.users, &model.items}) {
    for (std::size_t r = 0; r < t->rows(); ++r) {
      for (double& x : t->row(r)) x = rng.uniform(-s, s);
    }
  }
  return model;
}

}  // namespace uemb
