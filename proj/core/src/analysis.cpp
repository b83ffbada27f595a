#include "uemb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "uemb/classify_eval.hpp"
#include "uemb/error.hpp"
#include "uemb/rng.hpp"

namespace uemb {

double mutual_information(std::span<const int> presence, std::span<const int> labels) {
  if (presence.size() != labels.size()) throw_data("mutual_information: length mismatch");
  if (presence.empty()) throw_data("mutual_information: empty input");

  std::map<int, std::size_t> label_slot;
  for (int y : labels) label_slot.emplace(y, 0);
  std::size_t slot = 0;
  for (auto& [y, s] : label_slot) s = slot++;

  const std::size_t n_labels = label_slot.size();
  std::vector<double> joint(2 * n_labels, 0.0);
  double n = static_cast<double>(presence.size());
  for (std::size_t i = 0; i < presence.size(); ++i) {
    const std::size_t x = presence[i] ? 1 : 0;
    joint[x * n_labels + label_slot.at(labels[i])] += 1.0;
  }

  double px[2] = {0.0, 0.0};
  std::vector<double> py(n_labels, 0.0);
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < n_labels; ++y) {
      px[x] += joint[x * n_labels + y];
      py[y] += joint[x * n_labels + y];
    }
  }

  double mi = 0.0;
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < n_labels; ++y) {
      const double pxy = joint[x * n_labels + y] / n;
      if (pxy <= 0.0) continue;
      mi += pxy * std::log(pxy / ((px[x] / n) * (py[y] / n)));
    }
  }
  return std::max(0.0, mi);
}

namespace {

bool has_genre(const Review& r, const std::string& genre) {
  return std::binary_search(r.genres.begin(), r.genres.end(), genre);
}

// Unique candidate-feature ids per document under the unified vectorizer.
std::vector<std::vector<int>> doc_feature_sets(const ReviewSet& set, const TfidfModel& tfidf) {
  std::vector<std::vector<int>> sets;
  sets.reserve(set.size());
  for (const Review& r : set.reviews) {
    const SparseVec row = tfidf.transform(r.tokens);
    std::vector<int> ids;
    ids.reserve(row.entries.size());
    for (const auto& [f, w] : row.entries) ids.push_back(f);
    sets.push_back(std::move(ids));
  }
  return sets;
}

FeatureSet rank_genre_features(const ReviewSet& set, const TfidfModel& tfidf,
                               const std::vector<std::vector<int>>& doc_features,
                               const std::string& genre, const TopFeaturesOptions& options) {
  if (std::find(set.retained_genres.begin(), set.retained_genres.end(), genre) ==
      set.retained_genres.end()) {
    throw_data("genre \"" + genre + "\" is not among the retained genres");
  }

  // Scope and labels depend on the MI target.
  std::vector<std::size_t> docs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool in_genre = has_genre(set.reviews[i], genre);
    if (options.target == MiTarget::sentiment) {
      if (!in_genre) continue;
      docs.push_back(i);
      labels.push_back(static_cast<int>(set.reviews[i].sentiment));
    } else {
      docs.push_back(i);
      labels.push_back(in_genre ? 1 : 0);
    }
  }
  if (docs.size() < 2) {
    throw_data("genre \"" + genre + "\" has fewer than 2 documents");
  }

  // Per-feature presence/label contingency via one sparse pass.
  std::map<int, std::size_t> label_slot;
  for (int y : labels) label_slot.emplace(y, 0);
  std::size_t slot = 0;
  for (auto& [y, s] : label_slot) s = slot++;
  const std::size_t n_labels = label_slot.size();

  std::vector<double> label_totals(n_labels, 0.0);
  for (int y : labels) label_totals[label_slot.at(y)] += 1.0;

  const std::size_t n_features = tfidf.n_features();
  std::vector<double> present(n_features * n_labels, 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const std::size_t y = label_slot.at(labels[d]);
    for (int f : doc_features[docs[d]]) {
      present[static_cast<std::size_t>(f) * n_labels + y] += 1.0;
    }
  }

  const double n = static_cast<double>(docs.size());
  auto mi_of = [&](std::size_t f) {
    double p1 = 0.0;
    for (std::size_t y = 0; y < n_labels; ++y) p1 += present[f * n_labels + y];
    const double p0 = n - p1;
    double mi = 0.0;
    for (std::size_t y = 0; y < n_labels; ++y) {
      const double n1y = present[f * n_labels + y];
      const double n0y = label_totals[y] - n1y;
      if (n1y > 0.0) mi += (n1y / n) * std::log((n1y / n) / ((p1 / n) * (label_totals[y] / n)));
      if (n0y > 0.0) mi += (n0y / n) * std::log((n0y / n) / ((p0 / n) * (label_totals[y] / n)));
    }
    return std::max(0.0, mi);
  };

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    scored.emplace_back(tfidf.feature_names()[f], mi_of(f));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > options.k) scored.resize(options.k);

  FeatureSet out;
  out.genre = genre;
  out.features = std::move(scored);
  return out;
}

}  // namespace

FeatureSet top_features_per_genre(const ReviewSet& set, const std::string& genre,
                                  const TopFeaturesOptions& options) {
  TfidfOptions tf;
  tf.max_features = 0;
  tf.min_df = 2;
  std::vector<std::vector<std::string>> docs;
  docs.reserve(set.size());
  for (const Review& r : set.reviews) docs.push_back(r.tokens);
  const TfidfModel tfidf = TfidfModel::fit(docs, tf);
  return rank_genre_features(set, tfidf, doc_feature_sets(set, tfidf), genre, options);
}

std::vector<FeatureSet> top_features_all_genres(const ReviewSet& set,
                                                const TopFeaturesOptions& options) {
  TfidfOptions tf;
  tf.max_features = 0;
  tf.min_df = 2;
  std::vector<std::vector<std::string>> docs;
  docs.reserve(set.size());
  for (const Review& r : set.reviews) docs.push_back(r.tokens);
  const TfidfModel tfidf = TfidfModel::fit(docs, tf);
  const auto features = doc_feature_sets(set, tfidf);

  std::vector<FeatureSet> out;
  for (const std::string& g : set.retained_genres) {
    out.push_back(rank_genre_features(set, tfidf, features, g, options));
  }
  return out;
}

DomainMatrix overlap_matrix(const std::vector<FeatureSet>& feature_sets) {
  if (feature_sets.size() < 2) throw_data("overlap matrix needs at least two genres");
  const auto g = static_cast<Eigen::Index>(feature_sets.size());

  std::vector<std::unordered_set<std::string>> sets(feature_sets.size());
  for (std::size_t i = 0; i < feature_sets.size(); ++i) {
    for (const auto& [name, score] : feature_sets[i].features) sets[i].insert(name);
  }

  DomainMatrix m;
  m.kind = DomainMatrix::Kind::overlap;
  m.values = Eigen::MatrixXd::Ones(g, g);
  for (const FeatureSet& fs : feature_sets) m.labels.push_back(fs.genre);
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = i + 1; j < g; ++j) {
      const auto& a = sets[static_cast<std::size_t>(i)];
      const auto& b = sets[static_cast<std::size_t>(j)];
      const auto& small = a.size() <= b.size() ? a : b;
      const auto& large = a.size() <= b.size() ? b : a;
      std::size_t inter = 0;
      for (const std::string& f : small) inter += large.count(f);
      const std::size_t denom = std::min(a.size(), b.size());
      const double v = denom == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(denom);
      m.values(i, j) = v;
      m.values(j, i) = v;
    }
  }
  return m;
}

namespace {

struct Group {
  std::string genre;
  std::vector<std::size_t> docs;  // indices into set.reviews
};

std::vector<std::string> distinct_sorted_users(const ReviewSet& set,
                                               const std::vector<std::size_t>& docs,
                                               bool items) {
  std::set<std::string> s;
  for (std::size_t d : docs) {
    s.insert(items ? set.reviews[d].item_id : set.reviews[d].user_id);
  }
  return {s.begin(), s.end()};
}

}  // namespace

DomainMatrix crossgroup_grid(const ReviewSet& set, std::uint64_t seed) {
  if (set.retained_genres.size() < 2) {
    throw_data("cross-group analysis needs at least two retained genres");
  }

  std::vector<Group> groups;
  for (const std::string& g : set.retained_genres) {
    Group grp;
    grp.genre = g;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (has_genre(set.reviews[i], g)) grp.docs.push_back(i);
    }
    groups.push_back(std::move(grp));
  }

  // Targets: the smallest group's document, user and item counts.
  std::size_t target_docs = SIZE_MAX, target_users = SIZE_MAX, target_items = SIZE_MAX;
  for (const Group& g : groups) {
    target_docs = std::min(target_docs, g.docs.size());
    target_users = std::min(target_users, distinct_sorted_users(set, g.docs, false).size());
    target_items = std::min(target_items, distinct_sorted_users(set, g.docs, true).size());
  }

  // Downsample users first, then items, trimming documents last.
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    Group& g = groups[gi];
    Rng rng(mix_seed(seed, gi, 0x67727570ULL));

    auto users = distinct_sorted_users(set, g.docs, false);
    std::shuffle(users.begin(), users.end(), rng.engine());
    users.resize(std::min(users.size(), target_users));
    std::set<std::string> kept_users(users.begin(), users.end());
    std::erase_if(g.docs, [&](std::size_t d) { return !kept_users.count(set.reviews[d].user_id); });

    auto items = distinct_sorted_users(set, g.docs, true);
    std::shuffle(items.begin(), items.end(), rng.engine());
    items.resize(std::min(items.size(), target_items));
    std::set<std::string> kept_items(items.begin(), items.end());
    std::erase_if(g.docs, [&](std::size_t d) { return !kept_items.count(set.reviews[d].item_id); });

    if (g.docs.size() < target_docs) {
      throw_data("group \"" + g.genre + "\" has too few documents after downsampling (" +
                 std::to_string(g.docs.size()) + " < " + std::to_string(target_docs) + ")");
    }
    std::shuffle(g.docs.begin(), g.docs.end(), rng.engine());
    g.docs.resize(target_docs);
  }
  if (target_docs < 10) {
    throw_data("group \"" + groups.front().genre + "\" leaves fewer than 10 documents per group");
  }

  // Per-group 80/20 split.
  struct GroupSplit {
    std::vector<std::size_t> train, test;
  };
  std::vector<GroupSplit> splits(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto docs = groups[gi].docs;
    Rng rng(mix_seed(seed, gi, 0x73706c74ULL));
    std::shuffle(docs.begin(), docs.end(), rng.engine());
    const std::size_t n_test = docs.size() / 5;
    splits[gi].test.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_test));
    splits[gi].train.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_test), docs.end());
  }

  DomainMatrix m;
  m.kind = DomainMatrix::Kind::crossgroup_f1;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()),
                                   static_cast<Eigen::Index>(groups.size()));
  for (const Group& g : groups) m.labels.push_back(g.genre);

  TfidfOptions tf;
  tf.max_features = 0;  // default featurizer, no cap
  for (std::size_t train_g = 0; train_g < groups.size(); ++train_g) {
    std::vector<std::vector<std::string>> docs;
    std::vector<int> y;
    for (std::size_t d : splits[train_g].train) {
      docs.push_back(set.reviews[d].tokens);
      y.push_back(static_cast<int>(set.reviews[d].sentiment));
    }
    const TfidfModel tfidf = TfidfModel::fit(docs, tf);
    const LogRegModel model = train_logreg(tfidf.transform_all(docs), y, tfidf.n_features(), {});

    for (std::size_t test_g = 0; test_g < groups.size(); ++test_g) {
      std::vector<std::vector<std::string>> test_docs;
      std::vector<int> test_y;
      for (std::size_t d : splits[test_g].test) {
        test_docs.push_back(set.reviews[d].tokens);
        test_y.push_back(static_cast<int>(set.reviews[d].sentiment));
      }
      const ClassifyReport rep =
          evaluate(model, tfidf.transform_all(test_docs), test_y, Average::weighted);
      m.values(static_cast<Eigen::Index>(train_g), static_cast<Eigen::Index>(test_g)) = rep.f1;
    }
  }
  return m;
}

}  // namespace uemb
