#include "uemb/cluster_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "uemb/error.hpp"
#include "uemb/rng.hpp"

namespace uemb {

Eigen::MatrixXd cosine_affinity(const Eigen::MatrixXd& vectors) {
  const Eigen::Index n = vectors.rows();
  Eigen::VectorXd norms = vectors.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) <= 0.0) {
      throw_data("zero-norm embedding at row " + std::to_string(i));
    }
  }
  Eigen::MatrixXd unit = vectors.array().colwise() / norms.array();
  Eigen::MatrixXd a = unit * unit.transpose();
  a = a.cwiseMax(0.0);
  a = ((a + a.transpose()) / 2.0).eval();  // enforce exact symmetry
  a.diagonal().setOnes();
  return a;
}

namespace {

// Lloyd iterations from a k-means++ seeding; returns inertia.
double kmeans_once(const Eigen::MatrixXd& points, int k, Rng& rng, std::vector<int>& labels) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());

  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::max());
  Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  centers.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (points.row(i) - centers.row(c - 1)).squaredNorm();
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], d);
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2[static_cast<std::size_t>(i)];
        if (r <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centers.row(c) = points.row(pick);
  }

  labels.assign(static_cast<std::size_t>(n), 0);
  constexpr int kMaxIter = 100;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    centers.setZero();
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      centers.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: reseed at the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
        changed = true;
      }
    }
    if (!changed) break;
  }

  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    inertia += (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return inertia;
}

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts) {
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::max();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r), 0x6b6d6573ULL));
    std::vector<int> labels;
    const double inertia = kmeans_once(points, k, rng, labels);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = std::move(labels);
    }
  }
  return best_labels;
}

}  // namespace

std::vector<int> spectral_cluster(const Eigen::MatrixXd& affinity, int k, std::uint64_t seed) {
  const Eigen::Index n = affinity.rows();
  if (affinity.cols() != n) throw_data("affinity matrix must be square");
  if (k < 2) throw_config("spectral clustering needs k >= 2");
  if (static_cast<Eigen::Index>(k) > n) throw_config("k exceeds the number of points");

  Eigen::VectorXd degrees = affinity.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degrees(i) <= 0.0) {
      throw_data("node " + std::to_string(i) + " has zero degree; graph is disconnected");
    }
  }
  Eigen::VectorXd dinv_sqrt = degrees.array().rsqrt();
  Eigen::MatrixXd lsym =
      Eigen::MatrixXd::Identity(n, n) -
      (dinv_sqrt.asDiagonal() * affinity * dinv_sqrt.asDiagonal());
  lsym = ((lsym + lsym.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lsym);
  if (solver.info() != Eigen::Success) {
    throw_numeric("eigendecomposition did not converge");
  }
  // Eigenvalues ascend, so the spectral embedding is the first k columns.
  Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return kmeans(embedding, k, seed, /*restarts=*/10);
}

double PairConfusion::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}
double PairConfusion::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}
double PairConfusion::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

namespace {

std::int64_t pairs_of(std::int64_t n) { return n * (n - 1) / 2; }

PairConfusion pairwise_exact(std::span<const int> labels, const std::vector<std::uint64_t>& masks) {
  // Group users by (cluster, genre mask); masks intersect iff genres overlap.
  std::map<std::pair<int, std::uint64_t>, std::int64_t> groups;
  std::map<std::uint64_t, std::int64_t> by_mask;
  const auto n = static_cast<std::int64_t>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++groups[{labels[i], masks[i]}];
    ++by_mask[masks[i]];
  }

  // Gold positives overall.
  std::int64_t gold_pos = 0;
  for (auto it = by_mask.begin(); it != by_mask.end(); ++it) {
    gold_pos += pairs_of(it->second);
    for (auto jt = std::next(it); jt != by_mask.end(); ++jt) {
      if (it->first & jt->first) gold_pos += it->second * jt->second;
    }
  }

  // Within-cluster totals and within-cluster gold positives.
  std::map<int, std::int64_t> cluster_sizes;
  for (const auto& [key, count] : groups) cluster_sizes[key.first] += count;
  std::int64_t pred_pos = 0;
  for (const auto& [c, size] : cluster_sizes) pred_pos += pairs_of(size);

  std::int64_t tp = 0;
  for (auto it = groups.begin(); it != groups.end(); ++it) {
    tp += pairs_of(it->second);
    for (auto jt = std::next(it); jt != groups.end() && jt->first.first == it->first.first; ++jt) {
      if (it->first.second & jt->first.second) tp += it->second * jt->second;
    }
  }

  PairConfusion c;
  c.tp = tp;
  c.fp = pred_pos - tp;
  c.fn = gold_pos - tp;
  c.tn = pairs_of(n) - c.tp - c.fp - c.fn;
  return c;
}

PairConfusion pairwise_sampled(std::span<const int> labels,
                               const std::vector<std::uint64_t>& masks,
                               const PairF1Options& options) {
  const std::size_t n = labels.size();
  Rng rng(options.seed);
  PairConfusion c;
  for (std::size_t s = 0; s < options.sample_pairs; ++s) {
    std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;
    const bool gold = (masks[i] & masks[j]) != 0;
    const bool pred = labels[i] == labels[j];
    if (gold && pred) ++c.tp;
    else if (!gold && pred) ++c.fp;
    else if (gold && !pred) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace

PairConfusion pairwise_genre_f1(std::span<const int> labels,
                                const std::vector<std::vector<std::string>>& user_genres,
                                const PairF1Options& options) {
  if (labels.size() != user_genres.size()) {
    throw_data("labels and genre sets differ in length");
  }
  if (labels.size() < 2) throw_data("pairwise F1 needs at least two users");

  std::map<std::string, int> genre_bit;
  for (const auto& genres : user_genres) {
    for (const std::string& g : genres) genre_bit.emplace(g, 0);
  }
  if (genre_bit.size() > 64) {
    throw_data("pairwise F1 supports at most 64 distinct genres, got " +
               std::to_string(genre_bit.size()));
  }
  int next = 0;
  for (auto& [g, bit] : genre_bit) bit = next++;

  std::vector<std::uint64_t> masks(labels.size(), 0);
  for (std::size_t i = 0; i < user_genres.size(); ++i) {
    if (user_genres[i].empty()) {
      throw_data("user at position " + std::to_string(i) + " has an empty genre set");
    }
    for (const std::string& g : user_genres[i]) {
      masks[i] |= 1ULL << genre_bit.at(g);
    }
  }

  const bool sample = options.mode == PairF1Options::Mode::sampled ||
                      (options.mode == PairF1Options::Mode::automatic &&
                       labels.size() > options.exact_limit);
  return sample ? pairwise_sampled(labels, masks, options) : pairwise_exact(labels, masks);
}

ClusterReport evaluate_clustering(const UserEmbeddings& embeddings, const EntityIndex& index,
                                  const ClusterEvalOptions& options) {
  if (embeddings.size() == 0) throw_data("no user embeddings to evaluate");

  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(embeddings.size()), embeddings.dim);
  std::vector<std::vector<std::string>> genres(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const std::string& user = embeddings.user_ids[i];
    for (int d = 0; d < embeddings.dim; ++d) {
      vectors(static_cast<Eigen::Index>(i), d) = embeddings.vectors[i][static_cast<std::size_t>(d)];
    }
    if (options.gold_user_genre) {
      auto it = options.gold_user_genre->find(user);
      if (it != options.gold_user_genre->end()) {
        genres[i] = {it->second};
        continue;
      }
    }
    auto uit = index.user_to_id.find(user);
    if (uit == index.user_to_id.end()) {
      throw_data("embedded user " + user + " is not in the entity index");
    }
    genres[i] = index.user_genres[static_cast<std::size_t>(uit->second)];
  }

  const Eigen::MatrixXd affinity = cosine_affinity(vectors);
  ClusterReport report;
  report.method = to_string(embeddings.method);
  for (int k : options.ks) {
    ClusterReport::Entry entry;
    entry.k = k;
    entry.labels = spectral_cluster(affinity, k, mix_seed(options.seed, static_cast<std::uint64_t>(k)));
    PairF1Options pf = options.pair_options;
    pf.seed = mix_seed(options.seed, static_cast<std::uint64_t>(k), 0xf1ULL);
    entry.confusion = pairwise_genre_f1(entry.labels, genres, pf);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace uemb
