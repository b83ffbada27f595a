#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uemb/baselines.hpp"
#include "uemb/vocab.hpp"

namespace uemb {

// Clamped cosine similarity: A(i,j) = max(0, cos(v_i, v_j)), diagonal forced
// to 1. Rows with zero norm are an error.
Eigen::MatrixXd cosine_affinity(const Eigen::MatrixXd& vectors);

// Normalized-Laplacian spectral clustering: eigenvectors of the k smallest
// eigenvalues of I - D^{-1/2} A D^{-1/2}, row-normalized, then seeded
// k-means++ (10 restarts, best inertia). Labels in [0, k).
std::vector<int> spectral_cluster(const Eigen::MatrixXd& affinity, int k, std::uint64_t seed);

struct PairConfusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

struct PairF1Options {
  enum class Mode { automatic, exact, sampled };
  Mode mode = Mode::automatic;
  std::size_t exact_limit = 20000;      // automatic switches to sampling above this n
  std::size_t sample_pairs = 2000000;   // pairs drawn in sampled mode
  std::uint64_t seed = 42;
};

// Pair-level binary classification: gold positive iff the two users' genre
// sets intersect, predicted positive iff same cluster; F1 on the positive
// class. Exact counting by (cluster, genre-mask) group sizes, or seeded pair
// sampling for very large n.
PairConfusion pairwise_genre_f1(std::span<const int> labels,
                                const std::vector<std::vector<std::string>>& user_genres,
                                const PairF1Options& options = {});

struct ClusterReport {
  struct Entry {
    int k = 0;
    PairConfusion confusion;
    std::vector<int> labels;
  };
  std::string method;
  std::vector<Entry> entries;
};

struct ClusterEvalOptions {
  std::vector<int> ks = {4, 8, 12};
  std::uint64_t seed = 42;
  // Override the gold genre sets (e.g. planted synthetic genres); keys are
  // user ids, missing users fall back to the index-derived genres.
  std::optional<std::map<std::string, std::string>> gold_user_genre;
  PairF1Options pair_options;
};

ClusterReport evaluate_clustering(const UserEmbeddings& embeddings, const EntityIndex& index,
                                  const ClusterEvalOptions& options = {});

}  // namespace uemb
