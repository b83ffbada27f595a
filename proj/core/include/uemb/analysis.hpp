#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uemb/corpus.hpp"

namespace uemb {

// Empirical mutual information (nats) between a binary presence vector and a
// categorical label vector; zero-count cells contribute zero.
double mutual_information(std::span<const int> presence, std::span<const int> labels);

enum class MiTarget { sentiment, genre };

struct FeatureSet {
  std::string genre;
  std::vector<std::pair<std::string, double>> features;  // (n-gram, MI), score descending
};

struct TopFeaturesOptions {
  std::size_t k = 1000;
  MiTarget target = MiTarget::sentiment;
};

// Top-k n-grams for one genre, ranked by mutual information. The candidate
// vocabulary is unified over the whole corpus (1..3-grams, document frequency
// >= 2). With the sentiment target, MI is computed against the sentiment
// label within the genre's documents; with the genre target, against
// genre membership over all documents.
FeatureSet top_features_per_genre(const ReviewSet& set, const std::string& genre,
                                  const TopFeaturesOptions& options = {});

// Same, for every retained genre at once (the vectorizer is built once).
std::vector<FeatureSet> top_features_all_genres(const ReviewSet& set,
                                                const TopFeaturesOptions& options = {});

struct DomainMatrix {
  enum class Kind { overlap, crossgroup_f1 };
  Kind kind = Kind::overlap;
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

// M(i,j) = |F_i intersect F_j| / min(|F_i|, |F_j|); symmetric, unit diagonal.
DomainMatrix overlap_matrix(const std::vector<FeatureSet>& feature_sets);

// Groups documents by genre, downsamples each group to the smallest group's
// document/user/item counts (users first, then items, then trimming
// documents), then trains one sentiment classifier per group (seeded 80/20
// split) and scores weighted F1 on every group's test set. Row = training
// group, column = evaluation group.
DomainMatrix crossgroup_grid(const ReviewSet& set, std::uint64_t seed);

}  // namespace uemb
