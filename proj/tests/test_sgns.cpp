#include "uemb/sgns.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "uemb/error.hpp"
#include "uemb/rng.hpp"

using namespace uemb;

TEST_CASE("score is the sigmoid of the dot product") {
  const std::vector<double> zero(4, 0.0);
  const std::vector<double> ones(4, 1.0);
  CHECK(score(zero, ones) == doctest::Approx(0.5));

  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> b = {1.0, 5.0};
  CHECK(score(a, b) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  const std::vector<double> neg = {-1.0, 0.0};
  CHECK(score(neg, b) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
  // sigma(-x) = 1 - sigma(x)
  CHECK(score(neg, b) == doctest::Approx(1.0 - score(a, b)).epsilon(1e-12));
}

TEST_CASE("score stays finite deep into the tails") {
  const std::vector<double> a = {700.0};
  const std::vector<double> one = {1.0};
  const std::vector<double> minus = {-1.0};
  CHECK(score(a, one) == doctest::Approx(1.0));
  CHECK(score(a, minus) == doctest::Approx(0.0));
  CHECK(std::isfinite(score(a, one)));

  const std::vector<double> b = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(score(a, b), Error);
}

TEST_CASE("loss_and_grad closed-form values") {
  const std::vector<double> zero(3, 0.0);
  const LossGrad lg = loss_and_grad(zero, zero, 1);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (double g : lg.grad_anchor) CHECK(g == 0.0);
  for (double g : lg.grad_target) CHECK(g == 0.0);

  // s = 1: anchor (1,0), target (1, anything-orthogonal).
  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> t = {1.0, 2.0};
  const double sig1 = 1.0 / (1.0 + std::exp(-1.0));

  const LossGrad pos = loss_and_grad(a, t, 1);
  CHECK(pos.loss == doctest::Approx(-std::log(sig1)).epsilon(1e-12));
  CHECK(pos.loss == doctest::Approx(0.31326168751822286).epsilon(1e-12));
  CHECK(pos.grad_anchor[0] == doctest::Approx((sig1 - 1.0) * t[0]).epsilon(1e-12));
  CHECK(pos.grad_anchor[1] == doctest::Approx((sig1 - 1.0) * t[1]).epsilon(1e-12));
  CHECK(pos.grad_target[0] == doctest::Approx((sig1 - 1.0) * a[0]).epsilon(1e-12));

  const LossGrad neg = loss_and_grad(a, t, 0);
  CHECK(neg.loss == doctest::Approx(-std::log(1.0 - sig1)).epsilon(1e-12));
  CHECK(neg.loss == doctest::Approx(1.3132616875182228).epsilon(1e-12));
  CHECK(neg.grad_anchor[0] == doctest::Approx(sig1 * t[0]).epsilon(1e-12));
}

TEST_CASE("loss_and_grad is symmetric under anchor/target swap") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(6), t(6);
    for (double& x : a) x = rng.uniform(-1.0, 1.0);
    for (double& x : t) x = rng.uniform(-1.0, 1.0);
    const int y = trial % 2;
    const LossGrad ab = loss_and_grad(a, t, y);
    const LossGrad ba = loss_and_grad(t, a, y);
    CHECK(ab.loss == doctest::Approx(ba.loss).epsilon(1e-14));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(ab.grad_anchor[i] == doctest::Approx(ba.grad_target[i]).epsilon(1e-14));
      CHECK(ab.grad_target[i] == doctest::Approx(ba.grad_anchor[i]).epsilon(1e-14));
    }
    CHECK(ab.loss >= 0.0);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(17);
  constexpr int kDim = 10;
  constexpr double kH = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(kDim), t(kDim);
    for (double& x : a) x = rng.uniform(-1.0, 1.0);
    for (double& x : t) x = rng.uniform(-1.0, 1.0);
    const int y = trial % 2;
    const LossGrad lg = loss_and_grad(a, t, y);

    auto loss_at = [&](const std::vector<double>& av, const std::vector<double>& tv) {
      return loss_and_grad(av, tv, y).loss;
    };
    std::vector<double> fd_a(kDim), fd_t(kDim);
    for (int i = 0; i < kDim; ++i) {
      auto ap = a, am = a;
      ap[static_cast<std::size_t>(i)] += kH;
      am[static_cast<std::size_t>(i)] -= kH;
      fd_a[static_cast<std::size_t>(i)] = (loss_at(ap, t) - loss_at(am, t)) / (2.0 * kH);
      auto tp = t, tm = t;
      tp[static_cast<std::size_t>(i)] += kH;
      tm[static_cast<std::size_t>(i)] -= kH;
      fd_t[static_cast<std::size_t>(i)] = (loss_at(a, tp) - loss_at(a, tm)) / (2.0 * kH);
    }
    double num = 0.0, den = 0.0;
    for (int i = 0; i < kDim; ++i) {
      num += std::pow(lg.grad_anchor[static_cast<std::size_t>(i)] - fd_a[static_cast<std::size_t>(i)], 2) +
             std::pow(lg.grad_target[static_cast<std::size_t>(i)] - fd_t[static_cast<std::size_t>(i)], 2);
      den += std::pow(fd_a[static_cast<std::size_t>(i)], 2) + std::pow(fd_t[static_cast<std::size_t>(i)], 2);
    }
    worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("adam: zero gradient leaves the row, bumps the counter") {
  TrainConfig cfg;
  cfg.dim = 4;
  EmbeddingTable table(TableKind::word, 3, cfg.dim);
  for (std::size_t r = 0; r < 3; ++r) {
    auto row = table.row(r);
    for (int i = 0; i < cfg.dim; ++i) row[static_cast<std::size_t>(i)] = 0.25 * static_cast<double>(i);
  }
  const std::vector<double> before(table.row(1).begin(), table.row(1).end());
  const std::vector<double> zero(4, 0.0);
  adam_update(table, 1, zero, cfg);
  CHECK(std::vector<double>(table.row(1).begin(), table.row(1).end()) == before);
  CHECK(table.step(1) == 1);
  CHECK(table.step(0) == 0);
}

TEST_CASE("adam first step is a normalized move against the gradient") {
  TrainConfig cfg;
  cfg.dim = 3;
  cfg.learning_rate = 1e-3;
  EmbeddingTable table(TableKind::word, 1, cfg.dim);
  const std::vector<double> g = {0.5, -2.0, 0.125};
  adam_update(table, 0, g, cfg);
  const auto row = table.row(0);
  for (int i = 0; i < cfg.dim; ++i) {
    const double expected =
        -cfg.learning_rate * g[static_cast<std::size_t>(i)] /
        (std::abs(g[static_cast<std::size_t>(i)]) + cfg.adam_eps);
    CHECK(row[static_cast<std::size_t>(i)] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam matches an independently coded scalar reference for 100 steps") {
  TrainConfig cfg;
  cfg.dim = 1;
  cfg.learning_rate = 1e-2;
  EmbeddingTable table(TableKind::word, 1, 1);
  table.row(0)[0] = 1.0;

  // Reference: plain textbook recurrences, written separately.
  double x = 1.0, m = 0.0, v = 0.0;
  Rng rng(3);
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * x + rng.uniform(-0.1, 0.1);
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(cfg.adam_beta1, t));
    const double vhat = v / (1.0 - std::pow(cfg.adam_beta2, t));
    x -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);

    const std::vector<double> grad = {g};
    adam_update(table, 0, grad, cfg);
    REQUIRE(std::abs(table.row(0)[0] - x) < 1e-12);
  }
  CHECK(table.step(0) == 100);
}

TEST_CASE("a single adam step decreases the pair loss at small rates") {
  Rng rng(11);
  TrainConfig cfg;
  cfg.dim = 8;
  for (int trial = 0; trial < 25; ++trial) {
    EmbeddingTable a(TableKind::user, 1, cfg.dim);
    EmbeddingTable b(TableKind::word, 1, cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) {
      a.row(0)[static_cast<std::size_t>(i)] = rng.uniform(-0.7, 0.7);
      b.row(0)[static_cast<std::size_t>(i)] = rng.uniform(-0.7, 0.7);
    }
    const int y = trial % 2;
    const LossGrad before = loss_and_grad(a.row(0), b.row(0), y);
    adam_update(a, 0, before.grad_anchor, cfg);
    adam_update(b, 0, before.grad_target, cfg);
    const LossGrad after = loss_and_grad(a.row(0), b.row(0), y);
    CHECK(after.loss < before.loss);
  }
}

TEST_CASE("init_model is seeded, bounded and centered") {
  TrainConfig cfg;
  cfg.dim = 300;
  cfg.seed = 99;
  const Model m1 = init_model(1000, 4, 4, cfg);
  const Model m2 = init_model(1000, 4, 4, cfg);
  CHECK(m1.words == m2.words);
  CHECK(m1.users == m2.users);
  CHECK(m1.items == m2.items);

  const double bound = 0.5 / 300.0;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < m1.words.rows(); ++r) {
    for (double x : m1.words.row(r)) {
      CHECK(std::abs(x) <= bound);
      sum += x;
      ++n;
    }
  }
  // Mean within 3 standard errors of zero: se = bound / sqrt(3 n).
  const double se = bound / std::sqrt(3.0 * static_cast<double>(n));
  CHECK(std::abs(sum / static_cast<double>(n)) < 3.0 * se);

  TrainConfig other = cfg;
  other.seed = 100;
  const Model m3 = init_model(1000, 4, 4, other);
  CHECK_FALSE(m3.words == m1.words);
}
