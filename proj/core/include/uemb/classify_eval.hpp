#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "uemb/baselines.hpp"
#include "uemb/corpus.hpp"

namespace uemb {

// Sparse feature row, entries sorted by feature index.
struct SparseVec {
  std::vector<std::pair<int, double>> entries;
};

struct TfidfOptions {
  int n_min = 1;
  int n_max = 3;
  std::size_t max_features = 15000;  // 0 = unlimited
  std::size_t min_df = 1;
};

// 1..3-gram TF-IDF: features kept by document frequency (ties lexicographic),
// idf = ln((1+N)/(1+df)) + 1, rows are raw count * idf then L2-normalized.
class TfidfModel {
 public:
  static TfidfModel fit(const std::vector<std::vector<std::string>>& docs,
                        const TfidfOptions& options = {});

  SparseVec transform(const std::vector<std::string>& doc) const;
  std::vector<SparseVec> transform_all(const std::vector<std::vector<std::string>>& docs) const;

  std::size_t n_features() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  double idf(int feature) const { return idf_.at(static_cast<std::size_t>(feature)); }
  std::size_t doc_freq(int feature) const { return df_.at(static_cast<std::size_t>(feature)); }
  int feature_id(const std::string& name) const;

 private:
  std::unordered_map<std::string, int> feature_to_id_;
  std::vector<std::string> feature_names_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  TfidfOptions options_;
};

// Duplicates minority-class rows by seeded sampling with replacement until
// every class matches the majority count. Original rows are all retained.
void oversample(std::vector<SparseVec>& x, std::vector<int>& y, std::uint64_t seed);

struct LogRegConfig {
  double c = 1.0;        // loss = sum CE + ||W||^2 / (2c), bias unregularized
  int max_iter = 1000;
  double tol = 1e-4;     // stop when the gradient infinity-norm drops below
};

struct LogRegModel {
  Eigen::MatrixXd weights;  // n_classes x n_features
  Eigen::VectorXd bias;     // n_classes
  std::vector<int> classes;
  bool converged = false;
  int iterations = 0;
  double final_loss = 0.0;

  Eigen::VectorXd decision(const SparseVec& x) const;
  Eigen::VectorXd predict_proba(const SparseVec& x) const;
  int predict(const SparseVec& x) const;
};

// Multinomial logistic regression by full-batch gradient descent with
// backtracking line search.
LogRegModel train_logreg(const std::vector<SparseVec>& x, const std::vector<int>& y,
                         std::size_t n_features, const LogRegConfig& config = {});

// Appends each author's L2-normalized embedding after the document features;
// rows widen from n_features to n_features + embeddings.dim.
std::vector<SparseVec> personalize(const std::vector<SparseVec>& x, std::size_t n_features,
                                   const std::vector<std::string>& doc_users,
                                   const UserEmbeddings& embeddings);

enum class Average { weighted, macro };

struct ClassMetrics {
  int label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassifyReport {
  std::string method;
  std::string dataset;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Average average = Average::weighted;
  std::vector<ClassMetrics> per_class;
};

ClassifyReport evaluate(const LogRegModel& model, const std::vector<SparseVec>& x,
                        const std::vector<int>& y, Average average = Average::weighted);

// End-to-end sentiment pipeline: split, fit TF-IDF on train, oversample,
// optionally personalize with user embeddings, train, report on test.
struct ClassifyPipelineOptions {
  SplitSpec split;
  TfidfOptions tfidf;
  LogRegConfig logreg;
  Average average = Average::weighted;
  std::uint64_t oversample_seed = 42;
  const UserEmbeddings* embeddings = nullptr;  // non-null: personalized
};

ClassifyReport run_classification(const ReviewSet& set, const ClassifyPipelineOptions& options);

}  // namespace uemb
