#include "uemb/classify_eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "uemb/error.hpp"
#include "uemb/rng.hpp"

namespace uemb {

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

namespace {

void for_each_ngram(const std::vector<std::string>& doc, int n_min, int n_max,
                    const std::function<void(const std::string&)>& fn) {
  for (int n = n_min; n <= n_max; ++n) {
    if (doc.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= doc.size(); ++i) {
      std::string gram = doc[i];
      for (int j = 1; j < n; ++j) {
        gram += ' ';
        gram += doc[i + static_cast<std::size_t>(j)];
      }
      fn(gram);
    }
  }
}

}  // namespace

TfidfModel TfidfModel::fit(const std::vector<std::vector<std::string>>& docs,
                           const TfidfOptions& options) {
  if (docs.empty()) throw_data("TF-IDF needs at least one training document");

  std::map<std::string, std::size_t> df;
  std::set<std::string> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for_each_ngram(doc, options.n_min, options.n_max,
                   [&](const std::string& g) { seen.insert(g); });
    for (const std::string& g : seen) ++df[g];
  }
  for (auto it = df.begin(); it != df.end();) {
    it = it->second < options.min_df ? df.erase(it) : std::next(it);
  }
  if (df.empty()) throw_data("TF-IDF vocabulary is empty after document-frequency filtering");

  // Keep the most document-frequent features, ties lexicographic.
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (options.max_features > 0 && ranked.size() > options.max_features) {
    ranked.resize(options.max_features);
  }
  // Stable ids: lexicographic over the kept features.
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  TfidfModel model;
  model.options_ = options;
  const double n_docs = static_cast<double>(docs.size());
  for (const auto& [name, freq] : ranked) {
    model.feature_to_id_.emplace(name, static_cast<int>(model.feature_names_.size()));
    model.feature_names_.push_back(name);
    model.df_.push_back(freq);
    model.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(freq))) + 1.0);
  }
  return model;
}

int TfidfModel::feature_id(const std::string& name) const {
  const auto it = feature_to_id_.find(name);
  return it == feature_to_id_.end() ? -1 : it->second;
}

SparseVec TfidfModel::transform(const std::vector<std::string>& doc) const {
  std::map<int, double> counts;
  for_each_ngram(doc, options_.n_min, options_.n_max, [&](const std::string& g) {
    const auto it = feature_to_id_.find(g);
    if (it != feature_to_id_.end()) counts[it->second] += 1.0;
  });
  SparseVec row;
  row.entries.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [id, count] : counts) {
    const double w = count * idf_[static_cast<std::size_t>(id)];
    row.entries.emplace_back(id, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& [id, w] : row.entries) w *= inv;
  }
  return row;
}

std::vector<SparseVec> TfidfModel::transform_all(
    const std::vector<std::vector<std::string>>& docs) const {
  std::vector<SparseVec> rows;
  rows.reserve(docs.size());
  for (const auto& doc : docs) rows.push_back(transform(doc));
  return rows;
}

// ---------------------------------------------------------------------------
// Oversampling
// ---------------------------------------------------------------------------

void oversample(std::vector<SparseVec>& x, std::vector<int>& y, std::uint64_t seed) {
  if (x.size() != y.size()) throw_data("oversample: feature/label size mismatch");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  if (by_class.size() < 2) throw_data("oversample needs at least two classes");

  std::size_t majority = 0;
  for (const auto& [cls, rows] : by_class) majority = std::max(majority, rows.size());

  Rng rng(seed);
  for (const auto& [cls, rows] : by_class) {
    for (std::size_t add = rows.size(); add < majority; ++add) {
      const std::size_t pick = rows[rng.index(rows.size())];
      x.push_back(x[pick]);
      y.push_back(cls);
    }
  }
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd softmax(Eigen::VectorXd z) {
  const double m = z.maxCoeff();
  z = (z.array() - m).exp();
  return z / z.sum();
}

struct Objective {
  const std::vector<SparseVec>& x;
  const std::vector<int>& y_idx;  // class indices
  int n_classes;
  std::size_t n_features;
  double c;

  // Loss and gradient at (w, b); gradient written into gw, gb.
  double eval(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, Eigen::MatrixXd* gw,
              Eigen::VectorXd* gb) const {
    double loss = 0.0;
    if (gw) {
      gw->setZero();
      gb->setZero();
    }
    Eigen::VectorXd z(n_classes);
    for (std::size_t i = 0; i < x.size(); ++i) {
      z = b;
      for (const auto& [f, v] : x[i].entries) z += w.col(f) * v;
      const Eigen::VectorXd p = softmax(z);
      const int yi = y_idx[i];
      loss -= std::log(std::max(p(yi), 1e-300));
      if (gw) {
        Eigen::VectorXd delta = p;
        delta(yi) -= 1.0;
        for (const auto& [f, v] : x[i].entries) gw->col(f) += delta * v;
        *gb += delta;
      }
    }
    loss += w.squaredNorm() / (2.0 * c);
    if (gw) *gw += w / c;
    return loss;
  }
};

}  // namespace

Eigen::VectorXd LogRegModel::decision(const SparseVec& x) const {
  Eigen::VectorXd z = bias;
  for (const auto& [f, v] : x.entries) {
    if (f < weights.cols()) z += weights.col(f) * v;
  }
  return z;
}

Eigen::VectorXd LogRegModel::predict_proba(const SparseVec& x) const {
  return softmax(decision(x));
}

int LogRegModel::predict(const SparseVec& x) const {
  Eigen::Index best = 0;
  decision(x).maxCoeff(&best);
  return classes[static_cast<std::size_t>(best)];
}

LogRegModel train_logreg(const std::vector<SparseVec>& x, const std::vector<int>& y,
                         std::size_t n_features, const LogRegConfig& config) {
  if (x.size() != y.size() || x.empty()) throw_data("logreg: bad training data");

  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const int n_classes = static_cast<int>(classes.size());
  if (n_classes < 2) throw_data("logreg needs at least two classes");

  std::vector<int> y_idx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y_idx[i] = static_cast<int>(
        std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
  }

  Objective obj{x, y_idx, n_classes, n_features, config.c};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_classes, static_cast<Eigen::Index>(n_features));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_classes);
  Eigen::MatrixXd gw(n_classes, static_cast<Eigen::Index>(n_features));
  Eigen::VectorXd gb(n_classes);

  LogRegModel model;
  model.classes = classes;

  double loss = obj.eval(w, b, &gw, &gb);
  int iter = 0;
  double step = 1.0;
  for (; iter < config.max_iter; ++iter) {
    const double gnorm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    if (gnorm < config.tol) {
      model.converged = true;
      break;
    }
    // Backtracking line search (Armijo) along the negative gradient.
    const double g2 = gw.squaredNorm() + gb.squaredNorm();
    step = std::min(step * 2.0, 1e4);
    double new_loss = 0.0;
    Eigen::MatrixXd w_try;
    Eigen::VectorXd b_try;
    for (;;) {
      w_try = w - step * gw;
      b_try = b - step * gb;
      new_loss = obj.eval(w_try, b_try, nullptr, nullptr);
      if (new_loss <= loss - 1e-4 * step * g2 || step < 1e-16) break;
      step *= 0.5;
    }
    if (step < 1e-16) break;  // no descent possible at double precision
    w.swap(w_try);
    b.swap(b_try);
    loss = obj.eval(w, b, &gw, &gb);
  }

  model.weights = std::move(w);
  model.bias = std::move(b);
  model.iterations = iter;
  model.final_loss = loss;
  return model;
}

// ---------------------------------------------------------------------------
// Personalization and metrics
// ---------------------------------------------------------------------------

std::vector<SparseVec> personalize(const std::vector<SparseVec>& x, std::size_t n_features,
                                   const std::vector<std::string>& doc_users,
                                   const UserEmbeddings& embeddings) {
  if (x.size() != doc_users.size()) throw_data("personalize: row/user count mismatch");
  std::vector<SparseVec> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::vector<double>* vec = embeddings.find(doc_users[i]);
    if (!vec) throw_data("no embedding for user " + doc_users[i]);
    double norm2 = 0.0;
    for (double v : *vec) norm2 += v * v;
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    SparseVec row = x[i];
    row.entries.reserve(row.entries.size() + vec->size());
    for (std::size_t d = 0; d < vec->size(); ++d) {
      row.entries.emplace_back(static_cast<int>(n_features + d), (*vec)[d] * inv);
    }
    out.push_back(std::move(row));
  }
  return out;
}

ClassifyReport evaluate(const LogRegModel& model, const std::vector<SparseVec>& x,
                        const std::vector<int>& y, Average average) {
  if (x.size() != y.size() || x.empty()) throw_data("evaluate: bad evaluation data");

  std::set<int> label_set(y.begin(), y.end());
  for (int c : model.classes) label_set.insert(c);
  std::map<int, std::int64_t> tp, fp, fn, support;
  for (int c : label_set) tp[c] = fp[c] = fn[c] = support[c] = 0;

  for (std::size_t i = 0; i < x.size(); ++i) {
    const int pred = model.predict(x[i]);
    ++support[y[i]];
    if (pred == y[i]) ++tp[pred];
    else {
      ++fp[pred];
      ++fn[y[i]];
    }
  }

  ClassifyReport report;
  report.average = average;
  double wp = 0.0, wr = 0.0, wf = 0.0;
  double total_weight = 0.0;
  std::size_t n_macro = 0;
  for (int c : label_set) {
    ClassMetrics m;
    m.label = c;
    m.support = static_cast<std::size_t>(support[c]);
    const double denom_p = static_cast<double>(tp[c] + fp[c]);
    const double denom_r = static_cast<double>(tp[c] + fn[c]);
    m.precision = denom_p > 0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
    m.recall = denom_r > 0 ? static_cast<double>(tp[c]) / denom_r : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
    const double weight =
        average == Average::weighted ? static_cast<double>(m.support) : (m.support > 0 ? 1.0 : 0.0);
    wp += weight * m.precision;
    wr += weight * m.recall;
    wf += weight * m.f1;
    total_weight += weight;
    if (m.support > 0) ++n_macro;
    report.per_class.push_back(m);
  }
  if (total_weight > 0) {
    report.precision = wp / total_weight;
    report.recall = wr / total_weight;
    report.f1 = wf / total_weight;
  }
  return report;
}

ClassifyReport run_classification(const ReviewSet& set, const ClassifyPipelineOptions& options) {
  SplitResult parts = split(set, options.split);

  auto tokens_of = [](const ReviewSet& s) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(s.size());
    for (const Review& r : s.reviews) docs.push_back(r.tokens);
    return docs;
  };
  auto labels_of = [](const ReviewSet& s) {
    std::vector<int> y;
    y.reserve(s.size());
    for (const Review& r : s.reviews) y.push_back(static_cast<int>(r.sentiment));
    return y;
  };
  auto users_of = [](const ReviewSet& s) {
    std::vector<std::string> u;
    u.reserve(s.size());
    for (const Review& r : s.reviews) u.push_back(r.user_id);
    return u;
  };

  const TfidfModel tfidf = TfidfModel::fit(tokens_of(parts.train), options.tfidf);
  std::size_t width = tfidf.n_features();

  std::vector<SparseVec> x_train = tfidf.transform_all(tokens_of(parts.train));
  std::vector<SparseVec> x_test = tfidf.transform_all(tokens_of(parts.test));
  std::vector<int> y_train = labels_of(parts.train);
  const std::vector<int> y_test = labels_of(parts.test);

  std::vector<std::string> train_users = users_of(parts.train);
  if (options.embeddings) {
    x_train = personalize(x_train, width, train_users, *options.embeddings);
    x_test = personalize(x_test, width, users_of(parts.test), *options.embeddings);
    width += static_cast<std::size_t>(options.embeddings->dim);
  }

  // Oversample after personalization so duplicated rows keep their user block.
  oversample(x_train, y_train, options.oversample_seed);

  const LogRegModel model = train_logreg(x_train, y_train, width, options.logreg);
  ClassifyReport report = evaluate(model, x_test, y_test, options.average);
  report.method = options.embeddings ? "personalized" : "plain";
  report.dataset = to_string(set.dataset_kind);
  return report;
}

}  // namespace uemb
